#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "embench/eval/reliability.hpp"
#include "embench/generator.hpp"

namespace embench {
namespace {

Corpus small_corpus(int n = 200) {
  GeneratorConfig g;
  g.n_patients = n;
  g.vocab_size = 30;
  g.n_clusters = 3;
  g.mean_visits = 6;
  g.seed = 11;
  return generate_corpus(g).corpus;
}

// Code-keyed vectors independent of the seed and of which patients are present.
EmbeddingSet fixed_embeddings(const Corpus& c, std::uint64_t) {
  Matrix m(c.vocabulary.size(), 4);
  for (std::size_t i = 0; i < c.vocabulary.size(); ++i) {
    const auto& code = c.vocabulary.codes()[i];
    Rng rng(std::hash<std::string>{}(code));
    for (int j = 0; j < 4; ++j) m(i, j) = rng.normal(0.0, 1.0);
  }
  return EmbeddingSet(c.vocabulary, std::move(m), {"RANDOM", 0, 0});
}

// cos of the first two codes = 0.4 for even seeds and 0.6 for odd seeds.
EmbeddingSet planted_cosine(const Corpus& corpus, std::uint64_t seed) {
  const double c = seed % 2 == 0 ? 0.4 : 0.6;
  Matrix m(2, 2);
  m << 1.0, 0.0, c, std::sqrt(1.0 - c * c);
  return EmbeddingSet(ConceptVocabulary({corpus.vocabulary.codes()[0], corpus.vocabulary.codes()[1]}), std::move(m), {"RANDOM", seed, 0});
}

EmbeddingSet random_trainer(const Corpus& c, std::uint64_t seed) { return random_embeddings(c.vocabulary, 6, seed); }

TEST(MeanAndSd, SampleStatistics) {
  const auto [mean, sd] = mean_and_sd({0.4, 0.6});
  EXPECT_NEAR(mean, 0.5, 1e-12);
  EXPECT_NEAR(sd, std::sqrt(0.02), 1e-12);
  EXPECT_EQ(mean_and_sd({0.1, 0.1, 0.1}).second, 0.0);
  EXPECT_EQ(mean_and_sd({0.3}).second, 0.0);
  EXPECT_THROW(mean_and_sd({}), Error);
}

TEST(RunVariability, TwoPlantedRuns) {
  ReliabilityOptions opts;
  opts.n_runs = 2;
  const auto corpus = small_corpus();
  const auto& codes = corpus.vocabulary.codes();
  const auto r = run_variability(planted_cosine, "STUB", corpus, {{codes[0], codes[1]}}, opts);
  ASSERT_EQ(r.n_pairs(), 1u);
  EXPECT_NEAR(r.pairs[0].mean_cosine, 0.5, 1e-12);
  EXPECT_NEAR(r.pairs[0].sd_cosine, 0.1414, 1e-4);
  EXPECT_NEAR(r.sigma, r.pairs[0].sd_cosine, 0.0);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(RunVariability, SingleRunWarns) {
  ReliabilityOptions opts;
  opts.n_runs = 1;
  const auto corpus = small_corpus();
  const auto& codes = corpus.vocabulary.codes();
  const auto r = run_variability(planted_cosine, "STUB", corpus, {{codes[0], codes[1]}}, opts);
  EXPECT_EQ(r.pairs[0].sd_cosine, 0.0);
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(RunVariability, PinnedSeedHasNoSpread) {
  ReliabilityOptions opts;
  opts.n_runs = 5;
  opts.pin_seed = true;
  const auto corpus = small_corpus();
  const auto& codes = corpus.vocabulary.codes();
  const auto r = run_variability(random_trainer, "RANDOM", corpus, {{codes[0], codes[1]}, {codes[2], codes[3]}}, opts);
  for (const auto& p : r.pairs) EXPECT_EQ(p.sd_cosine, 0.0);
  EXPECT_EQ(r.sigma, 0.0);
}

TEST(RunVariability, ErrorsNameTheRun) {
  const Trainer failing = [](const Corpus& c, std::uint64_t seed) {
    if (seed == 3) throw Error("diverged");
    return random_trainer(c, seed);
  };
  const auto corpus = small_corpus();
  const auto& codes = corpus.vocabulary.codes();
  try {
    run_variability(failing, "X", corpus, {{codes[0], codes[1]}});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("run 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(run_variability(random_trainer, "X", corpus, {{"ZZZ", codes[0]}}), Error);
  ReliabilityOptions none;
  none.n_runs = 0;
  EXPECT_THROW(run_variability(random_trainer, "X", corpus, {{codes[0], codes[1]}}, none), Error);
}

TEST(Subsample, KeepsOrderAndIsSeeded) {
  const auto corpus = small_corpus();
  const auto a = subsample_patients(corpus, 0.4, 9);
  EXPECT_EQ(a.patients.size(), 80u);
  EXPECT_EQ(a, subsample_patients(corpus, 0.4, 9));
  EXPECT_NE(a, subsample_patients(corpus, 0.4, 10));
  std::size_t pos = 0;
  for (const auto& p : a.patients) {
    while (pos < corpus.patients.size() && corpus.patients[pos].id != p.id) ++pos;
    ASSERT_LT(pos, corpus.patients.size()) << "order not preserved at " << p.id;
  }
  EXPECT_EQ(subsample_patients(corpus, 1.0, 5), corpus);
  EXPECT_THROW(subsample_patients(corpus, 0.0, 1), Error);
  EXPECT_THROW(subsample_patients(corpus, 1.5, 1), Error);
}

TEST(SampleSizeSweep, FixedEmbeddingsHaveZeroSigma) {
  ReliabilityOptions opts;
  opts.n_runs = 4;
  const auto reports = sample_size_sweep(fixed_embeddings, "FIXED", small_corpus(), {0.2, 0.4, 0.6, 0.8, 1.0}, opts);
  ASSERT_EQ(reports.size(), 5u);
  for (const auto& r : reports) {
    EXPECT_EQ(r.sigma, 0.0) << r.sample_fraction;
    EXPECT_GT(r.n_pairs(), 0u);
  }
}

TEST(SampleSizeSweep, FullFractionMatchesRunVariability) {
  const auto corpus = small_corpus();
  ReliabilityOptions opts;
  opts.n_runs = 3;
  const auto sweep = sample_size_sweep(random_trainer, "RANDOM", corpus, {1.0}, opts);
  std::vector<std::pair<std::string, std::string>> probes;
  for (const auto& p : sweep[0].pairs) probes.emplace_back(p.code_a, p.code_b);
  const auto direct = run_variability(random_trainer, "RANDOM", corpus, probes, opts);
  EXPECT_EQ(sweep[0].n_pairs(), corpus.vocabulary.size() * (corpus.vocabulary.size() - 1) / 2);
  EXPECT_EQ(sweep[0].sigma, direct.sigma);
}

TEST(SampleSizeSweep, PairSampleIsSeededAndBounded) {
  ReliabilityOptions opts;
  opts.n_runs = 2;
  opts.max_pairs = 50;
  const auto a = sample_size_sweep(random_trainer, "RANDOM", small_corpus(), {0.5}, opts);
  const auto b = sample_size_sweep(random_trainer, "RANDOM", small_corpus(), {0.5}, opts);
  EXPECT_EQ(a[0].n_pairs(), 50u);
  EXPECT_EQ(a[0].sigma, b[0].sigma);
}

TEST(SampleSizeSweep, JobsDoNotChangeResults) {
  ReliabilityOptions opts;
  opts.n_runs = 4;
  const auto corpus = small_corpus();
  const auto serial = sample_size_sweep(random_trainer, "RANDOM", corpus, {0.3, 1.0}, opts);
  opts.jobs = 4;
  const auto parallel = sample_size_sweep(random_trainer, "RANDOM", corpus, {0.3, 1.0}, opts);
  std::ostringstream s, p;
  for (const auto& r : serial) write_pair_details(s, r), write_reliability_row(s, r);
  for (const auto& r : parallel) write_pair_details(p, r), write_reliability_row(p, r);
  EXPECT_EQ(s.str(), p.str());
}

TEST(ReliabilityCsv, RowLayout) {
  ReliabilityReport r{"CBOW", 0.2, 10, {{"A00", "B00", 0.5, 0.25}}, 0.25, {}};
  std::ostringstream row, detail;
  write_reliability_row(row, r);
  write_pair_details(detail, r);
  EXPECT_EQ(row.str(), "CBOW,0.2,10,1,0.25\n");
  EXPECT_EQ(detail.str(), "CBOW,0.2,A00,B00,0.5,0.25\n");
}

}  // namespace
}  // namespace embench
