#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "embench/common.hpp"
#include "embench/corpus.hpp"
#include "embench/generator.hpp"

namespace embench {
namespace {

std::string five_visits(const std::string& id, const std::string& codes = R"(["I10"])") {
  std::string line = R"({"id":")" + id + R"(","sex":0,"region":3,"birth_year":1950,"visits":[)";
  for (int i = 0; i < 5; ++i) {
    if (i) line += ",";
    line += R"({"d":)" + std::to_string(i * 10) + R"(,"codes":)" + codes + "}";
  }
  return line + "]}";
}

Corpus parse(const std::string& text, LoadOptions opts = {}) {
  std::istringstream in(text);
  return parse_corpus(in, opts);
}

std::string error_of(const std::string& text, LoadOptions opts = {}) {
  try {
    parse(text, opts);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::string serialize(const Corpus& c) {
  std::ostringstream os;
  write_corpus(c, os);
  return os.str();
}

TEST(Corpus, MinimalFile) {
  Corpus c = parse(five_visits("p1") + "\n");
  EXPECT_EQ(c.vocabulary.size(), 1u);
  EXPECT_EQ(c.vocabulary.code(0), "I10");
  ASSERT_EQ(c.patients.size(), 1u);
  EXPECT_EQ(c.patients[0].visits.size(), 5u);
}

TEST(Corpus, VocabularyIsSortedObservedCodes) {
  Corpus c = parse(five_visits("p1", R"(["M79","E78"])") + "\n" + five_visits("p2", R"(["A01"])") + "\n");
  EXPECT_EQ(c.vocabulary.codes(), (std::vector<std::string>{"A01", "E78", "M79"}));
  // Within-visit order is preserved as written.
  EXPECT_EQ(c.patients[0].visits[0].codes, (std::vector<int>{2, 1}));
}

TEST(Corpus, RejectsDecreasingDates) {
  const std::string line =
      R"({"id":"p1","sex":0,"region":3,"birth_year":1950,"visits":[{"d":10,"codes":["I10"]},{"d":5,"codes":["I10"]}]})";
  EXPECT_NE(error_of(line, {.min_visits = 1}).find("non-monotonic visit dates"), std::string::npos);
}

TEST(Corpus, MinimumVisitRule) {
  const std::string line =
      R"({"id":"p7","sex":1,"region":0,"birth_year":1990,"visits":[{"d":0,"codes":["I10"]},{"d":3,"codes":["E78"]}]})";
  auto msg = error_of(line);
  EXPECT_NE(msg.find("p7"), std::string::npos);
  EXPECT_NE(msg.find("fewer than the minimum 5"), std::string::npos);
  EXPECT_EQ(parse(line, {.min_visits = 2}).patients.size(), 1u);
}

TEST(Corpus, ReportsLineNumbers) {
  auto msg = error_of(five_visits("p1") + "\n{not json\n");
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(Corpus, RejectsBadRecords) {
  EXPECT_NE(error_of(five_visits("p1") + "\n" + five_visits("p1")).find("duplicate patient id"), std::string::npos);
  auto extra = five_visits("p1");
  extra.insert(1, R"("nhs":1,)");
  EXPECT_NE(error_of(extra).find("unknown key"), std::string::npos);
  EXPECT_NE(error_of(five_visits("p1", R"(["I10","I10"])")).find("duplicate code"), std::string::npos);
  EXPECT_NE(error_of(five_visits("p1", "[]")).find("no codes"), std::string::npos);
  auto bad_region = five_visits("p1");
  bad_region.replace(bad_region.find(R"("region":3)"), 10, R"("region":10)");
  EXPECT_NE(error_of(bad_region).find("region"), std::string::npos);
}

TEST(Corpus, EmptyPatientList) {
  Corpus empty;
  EXPECT_EQ(serialize(empty), "");
  Corpus back = parse("");
  EXPECT_TRUE(back.patients.empty());
  EXPECT_TRUE(back.vocabulary.empty());
}

TEST(Corpus, KeyOrderMatchesFormat) {
  Corpus c = parse(five_visits("p000001", R"(["I10","E78"])"));
  const std::string line = serialize(c).substr(0, serialize(c).find('\n'));
  EXPECT_EQ(line.substr(0, 92),
            R"({"id":"p000001","sex":0,"region":3,"birth_year":1950,"visits":[{"d":0,"codes":["I10","E78"]})");
}

TEST(Corpus, SaveLoadRoundTripAndDeterminism) {
  GeneratorConfig cfg;
  cfg.n_patients = 200;
  cfg.seed = 3;
  auto gen = generate_corpus(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "embench_corpus_test";
  std::filesystem::create_directories(dir);
  save_corpus(gen.corpus, dir / "a.jsonl");
  save_corpus(gen.corpus, dir / "b.jsonl");
  Corpus back = load_corpus(dir / "a.jsonl");
  EXPECT_EQ(back, gen.corpus);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "b.jsonl"));
  std::filesystem::remove_all(dir);
}

TEST(Corpus, RoundTripProperty) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    GeneratorConfig cfg;
    cfg.n_patients = 1 + static_cast<int>(rng.below(40));
    cfg.vocab_size = 2 + static_cast<int>(rng.below(60));
    cfg.n_clusters = 1 + static_cast<int>(rng.below(cfg.vocab_size));
    cfg.clusters_per_patient = 1;
    cfg.mean_codes_per_visit = std::min<double>(cfg.vocab_size, 1.0 + rng.uniform() * 2.0);
    cfg.seed = seed;
    auto gen = generate_corpus(cfg);
    EXPECT_EQ(parse(serialize(gen.corpus)), gen.corpus) << "seed " << seed;
  }
}

TEST(Corpus, SubsetRebuildsVocabulary) {
  Corpus c = parse(five_visits("p1", R"(["M79"])") + "\n" + five_visits("p2", R"(["A01","M79"])") + "\n");
  Corpus s = c.subset({0});
  EXPECT_EQ(s.vocabulary.codes(), (std::vector<std::string>{"M79"}));
  EXPECT_EQ(s.patients[0].visits[0].codes, (std::vector<int>{0}));
  EXPECT_NO_THROW(s.validate());
}

TEST(Corpus, AgeAnchor) {
  PatientRecord p;
  p.birth_year = 1950;
  EXPECT_EQ(age_in_years(p, 0), 50);
  EXPECT_EQ(age_in_years(p, 366), 51);
}

}  // namespace
}  // namespace embench
