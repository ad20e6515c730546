#include "embench/pairlist.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "embench/common.hpp"

namespace embench {

std::string to_string(Relation r) { return r == Relation::kComorbid ? "comorbid" : "causal"; }

Relation parse_relation(const std::string& s) {
  if (s == "comorbid") return Relation::kComorbid;
  if (s == "causal") return Relation::kCausal;
  throw Error("unknown relation '" + s + "' (expected comorbid or causal)");
}

bool PairList::add(std::string a, std::string b, std::string source, Relation relation) {
  if (a == b) throw Error("self-pair " + a + "," + b);
  if (b < a) std::swap(a, b);
  if (!seen_.emplace(a, b, source).second) return false;
  pairs_.push_back(LabeledPair{std::move(a), std::move(b), std::move(source), relation});
  return true;
}

std::vector<std::pair<std::string, Relation>> PairList::groups() const {
  std::vector<std::pair<std::string, Relation>> out;
  for (const auto& p : pairs_) {
    std::pair<std::string, Relation> g{p.source, p.relation};
    if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
  }
  return out;
}

PairList PairList::filter(const std::string& source, Relation relation) const {
  PairList out;
  for (const auto& p : pairs_) {
    if (p.source == source && p.relation == relation) out.add(p.first, p.second, p.source, p.relation);
  }
  return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

PairList parse_pairlist(std::istream& in, std::vector<std::string>* warnings) {
  PairList out;
  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) throw Error("pair list: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "code_a,code_b,source,relation")
    throw Error("pair list: expected header 'code_a,code_b,source,relation'");
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() != 4 || f[0].empty() || f[1].empty() || f[2].empty())
      throw Error("pair list row " + std::to_string(row) + ": malformed row '" + line + "'");
    if (f[0] == f[1]) throw Error("pair list row " + std::to_string(row) + ": self-pair " + f[0]);
    Relation rel;
    try {
      rel = parse_relation(f[3]);
    } catch (const Error& e) {
      throw Error("pair list row " + std::to_string(row) + ": " + e.what());
    }
    if (!out.add(f[0], f[1], f[2], rel) && warnings) {
      warnings->push_back("pair list row " + std::to_string(row) + ": duplicate pair " + f[0] + "," + f[1] +
                          " in source " + f[2] + " ignored");
    }
  }
  return out;
}

PairList load_pairlist(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open pair list " + path.string());
  return parse_pairlist(in, warnings);
}

void save_pairlist(const PairList& pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write pair list " + path.string());
  out << "code_a,code_b,source,relation\n";
  for (const auto& p : pairs.pairs()) {
    out << p.first << ',' << p.second << ',' << p.source << ',' << to_string(p.relation) << '\n';
  }
  if (!out) throw Error("I/O failure writing " + path.string());
}

}  // namespace embench
