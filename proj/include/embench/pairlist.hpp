#pragma once

#include <filesystem>
#include <set>
#include <tuple>
#include <string>
#include <vector>

namespace embench {

enum class Relation { kComorbid, kCausal };

std::string to_string(Relation r);
Relation parse_relation(const std::string& s);

/// Unordered code pair; stored with first < second.
struct LabeledPair {
  std::string first;
  std::string second;
  std::string source;
  Relation relation = Relation::kComorbid;

  bool operator==(const LabeledPair&) const = default;
};

/// Ground-truth related pairs from one or more named knowledge sources.
class PairList {
 public:
  /// Normalizes the order within the pair. Returns false (and stores
  /// nothing) when the same unordered pair already exists for this source.
  /// Throws on self-pairs.
  bool add(std::string a, std::string b, std::string source, Relation relation);

  const std::vector<LabeledPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

  /// Distinct (source, relation) groups in first-seen order.
  std::vector<std::pair<std::string, Relation>> groups() const;
  PairList filter(const std::string& source, Relation relation) const;

  bool operator==(const PairList&) const = default;

 private:
  std::vector<LabeledPair> pairs_;
  std::set<std::tuple<std::string, std::string, std::string>> seen_;
};

/// CSV with header `code_a,code_b,source,relation`. Duplicate unordered pairs
/// within a source are dropped with a message appended to `warnings`.
PairList load_pairlist(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);
PairList parse_pairlist(std::istream& in, std::vector<std::string>* warnings = nullptr);
void save_pairlist(const PairList& pairs, const std::filesystem::path& path);

}  // namespace embench
