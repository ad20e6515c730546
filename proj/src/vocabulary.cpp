#include "embench/vocabulary.hpp"

#include <algorithm>

#include "embench/common.hpp"

namespace embench {

ConceptVocabulary::ConceptVocabulary(std::vector<std::string> codes) : codes_(std::move(codes)) {
  for (const auto& c : codes_) {
    if (c.empty()) throw Error("vocabulary: empty code string");
  }
  std::sort(codes_.begin(), codes_.end());
  codes_.erase(std::unique(codes_.begin(), codes_.end()), codes_.end());
}

std::optional<std::size_t> ConceptVocabulary::find(std::string_view code) const {
  auto it = std::lower_bound(codes_.begin(), codes_.end(), code,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == codes_.end() || *it != code) return std::nullopt;
  return static_cast<std::size_t>(it - codes_.begin());
}

std::size_t ConceptVocabulary::index(std::string_view code) const {
  auto i = find(code);
  if (!i) throw Error("unknown code '" + std::string(code) + "'");
  return *i;
}

}  // namespace embench
