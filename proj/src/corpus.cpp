#include "embench/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "embench/common.hpp"

namespace embench {

namespace {

using nlohmann::json;

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
  throw Error("corpus line " + std::to_string(line_no) + ": " + what);
}

int get_int(const json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) line_error(line_no, std::string("missing key \"") + key + "\"");
  if (!it->is_number_integer()) line_error(line_no, std::string("key \"") + key + "\" must be an integer");
  return it->get<int>();
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, std::size_t line_no) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; });
    if (!ok) line_error(line_no, "unknown key \"" + it.key() + "\"");
  }
}

struct RawVisit {
  int d;
  std::vector<std::string> codes;
};

struct RawPatient {
  PatientRecord record;
  std::vector<RawVisit> visits;
  std::size_t line_no;
};

RawPatient parse_line(const std::string& line, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    line_error(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) line_error(line_no, "expected a JSON object");
  check_keys(obj, {"id", "sex", "region", "birth_year", "visits"}, line_no);

  RawPatient raw;
  raw.line_no = line_no;
  auto id = obj.find("id");
  if (id == obj.end() || !id->is_string()) line_error(line_no, "key \"id\" must be a string");
  raw.record.id = id->get<std::string>();
  if (raw.record.id.empty()) line_error(line_no, "empty patient id");
  raw.record.sex = get_int(obj, "sex", line_no);
  raw.record.region = get_int(obj, "region", line_no);
  raw.record.birth_year = get_int(obj, "birth_year", line_no);
  if (raw.record.sex < 0 || raw.record.sex >= kNumSexes) line_error(line_no, "sex must be 0 or 1");
  if (raw.record.region < 0 || raw.record.region >= kNumRegions) line_error(line_no, "region must be in [0,10)");
  if (raw.record.birth_year < kMinBirthYear || raw.record.birth_year > kMaxBirthYear)
    line_error(line_no, "birth_year must be in [1888,1998]");

  auto visits = obj.find("visits");
  if (visits == obj.end() || !visits->is_array()) line_error(line_no, "key \"visits\" must be an array");
  for (const auto& v : *visits) {
    if (!v.is_object()) line_error(line_no, "visit must be an object");
    check_keys(v, {"d", "codes"}, line_no);
    RawVisit rv;
    rv.d = get_int(v, "d", line_no);
    if (rv.d < 0) line_error(line_no, "negative visit date offset");
    auto codes = v.find("codes");
    if (codes == v.end() || !codes->is_array()) line_error(line_no, "visit key \"codes\" must be an array");
    if (codes->empty()) line_error(line_no, "visit with no codes");
    std::set<std::string> seen;
    for (const auto& c : *codes) {
      if (!c.is_string() || c.get<std::string>().empty()) line_error(line_no, "codes must be non-empty strings");
      auto s = c.get<std::string>();
      if (!seen.insert(s).second) line_error(line_no, "duplicate code \"" + s + "\" within a visit");
      rv.codes.push_back(std::move(s));
    }
    raw.visits.push_back(std::move(rv));
  }
  return raw;
}

}  // namespace

int age_in_days(const PatientRecord& p, int date_offset_days) {
  // ceil(years * 365.25), so whole-year ages survive the round trip.
  const int years = kRecordAnchorYear - p.birth_year;
  return (years * 1461 + 3) / 4 + date_offset_days;
}

int age_in_years(const PatientRecord& p, int date_offset_days) {
  return static_cast<int>((static_cast<long long>(age_in_days(p, date_offset_days)) * 4) / 1461);
}

void Corpus::validate(int min_visits) const {
  std::unordered_set<std::string> ids;
  const int v = static_cast<int>(vocabulary.size());
  for (const auto& p : patients) {
    auto fail = [&](const std::string& what) { throw Error("patient " + p.id + ": " + what); };
    if (!ids.insert(p.id).second) fail("duplicate patient id");
    if (p.sex < 0 || p.sex >= kNumSexes) fail("sex out of range");
    if (p.region < 0 || p.region >= kNumRegions) fail("region out of range");
    if (p.birth_year < kMinBirthYear || p.birth_year > kMaxBirthYear) fail("birth_year out of range");
    if (static_cast<int>(p.visits.size()) < min_visits)
      fail("has " + std::to_string(p.visits.size()) + " visits, fewer than the minimum " + std::to_string(min_visits));
    int prev = 0;
    for (const auto& visit : p.visits) {
      if (visit.date_offset_days < prev) fail("non-monotonic visit dates");
      prev = visit.date_offset_days;
      if (visit.codes.empty()) fail("visit with no codes");
      std::vector<int> sorted = visit.codes;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) fail("duplicate code within a visit");
      for (int c : visit.codes) {
        if (c < 0 || c >= v) fail("code index out of vocabulary range");
      }
    }
  }
}

std::uint64_t Corpus::fingerprint() const {
  std::ostringstream os;
  write_corpus(*this, os);
  return fnv1a(os.str());
}

Corpus Corpus::subset(const std::vector<std::size_t>& indices) const {
  std::vector<char> used(vocabulary.size(), 0);
  for (auto i : indices) {
    for (const auto& visit : patients.at(i).visits) {
      for (int c : visit.codes) used[c] = 1;
    }
  }
  std::vector<int> remap(vocabulary.size(), -1);
  std::vector<std::string> codes;
  for (std::size_t c = 0; c < used.size(); ++c) {
    if (used[c]) {
      remap[c] = static_cast<int>(codes.size());
      codes.push_back(vocabulary.code(c));
    }
  }
  Corpus out;
  out.vocabulary = ConceptVocabulary(std::move(codes));
  out.patients.reserve(indices.size());
  for (auto i : indices) {
    PatientRecord p = patients[i];
    for (auto& visit : p.visits) {
      for (int& c : visit.codes) c = remap[c];
    }
    out.patients.push_back(std::move(p));
  }
  return out;
}

Corpus parse_corpus(std::istream& in, const LoadOptions& options) {
  std::vector<RawPatient> raws;
  std::string line;
  std::size_t line_no = 0;
  std::unordered_set<std::string> ids;
  std::set<std::string> all_codes;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    RawPatient raw = parse_line(line, line_no);
    if (!ids.insert(raw.record.id).second) line_error(line_no, "duplicate patient id " + raw.record.id);
    for (std::size_t i = 1; i < raw.visits.size(); ++i) {
      if (raw.visits[i].d < raw.visits[i - 1].d)
        line_error(line_no, "patient " + raw.record.id + ": non-monotonic visit dates");
    }
    if (static_cast<int>(raw.visits.size()) < options.min_visits) {
      line_error(line_no, "patient " + raw.record.id + " has " + std::to_string(raw.visits.size()) +
                              " visits, fewer than the minimum " + std::to_string(options.min_visits));
    }
    for (const auto& v : raw.visits) all_codes.insert(v.codes.begin(), v.codes.end());
    raws.push_back(std::move(raw));
  }

  Corpus corpus;
  corpus.vocabulary = ConceptVocabulary(std::vector<std::string>(all_codes.begin(), all_codes.end()));
  corpus.patients.reserve(raws.size());
  for (auto& raw : raws) {
    PatientRecord p = std::move(raw.record);
    for (const auto& rv : raw.visits) {
      Visit v;
      v.date_offset_days = rv.d;
      for (const auto& c : rv.codes) v.codes.push_back(static_cast<int>(corpus.vocabulary.index(c)));
      p.visits.push_back(std::move(v));
    }
    corpus.patients.push_back(std::move(p));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return parse_corpus(in, options);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& p : corpus.patients) {
    nlohmann::ordered_json obj;
    obj["id"] = p.id;
    obj["sex"] = p.sex;
    obj["region"] = p.region;
    obj["birth_year"] = p.birth_year;
    auto visits = nlohmann::ordered_json::array();
    for (const auto& v : p.visits) {
      nlohmann::ordered_json jv;
      jv["d"] = v.date_offset_days;
      auto codes = nlohmann::ordered_json::array();
      for (int c : v.codes) codes.push_back(corpus.vocabulary.code(c));
      jv["codes"] = std::move(codes);
      visits.push_back(std::move(jv));
    }
    obj["visits"] = std::move(visits);
    out << obj.dump() << '\n';
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus file " + path.string());
  write_corpus(corpus, out);
  if (!out) throw Error("I/O failure writing " + path.string());
}

}  // namespace embench
