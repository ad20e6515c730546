#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "embench/common.hpp"

namespace embench {

/// Ordered set of concept codes. Codes are unique and sorted, so a code's
/// index is its lexicographic rank.
class ConceptVocabulary {
 public:
  ConceptVocabulary() = default;

  /// Sorts and deduplicates; throws on empty code strings.
  explicit ConceptVocabulary(std::vector<std::string> codes);

  std::size_t size() const { return codes_.size(); }
  bool empty() const { return codes_.empty(); }
  const std::string& code(std::size_t i) const { return codes_.at(i); }
  const std::vector<std::string>& codes() const { return codes_; }

  std::optional<std::size_t> find(std::string_view code) const;
  bool contains(std::string_view code) const { return find(code).has_value(); }
  /// Throws Error("unknown code ...") when absent.
  std::size_t index(std::string_view code) const;

  bool operator==(const ConceptVocabulary&) const = default;

 private:
  std::vector<std::string> codes_;
};

}  // namespace embench
