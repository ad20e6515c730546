#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "embench/common.hpp"
#include "embench/vocabulary.hpp"

namespace embench {

struct EmbeddingMeta {
  std::string method;  // AE|NCF|CBOW|CBOWA(reconstructed)|BEHRT|RANDOM
  std::uint64_t seed = 0;
  std::uint64_t corpus_fingerprint = 0;

  bool operator==(const EmbeddingMeta&) const = default;
};

/// Method tag with any parenthesized qualifier dropped ("CBOWA(reconstructed)" -> "CBOWA").
std::string base_method(const std::string& method);

/// One vector per vocabulary code. Immutable once built.
class EmbeddingSet {
 public:
  /// Throws if the row count differs from the vocabulary size, the
  /// dimension is zero, or any entry is non-finite.
  EmbeddingSet(ConceptVocabulary vocabulary, Matrix vectors, EmbeddingMeta meta);

  const ConceptVocabulary& vocabulary() const { return vocabulary_; }
  const Matrix& vectors() const { return vectors_; }
  const EmbeddingMeta& meta() const { return meta_; }
  std::size_t size() const { return vocabulary_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }

  std::span<const double> row(std::size_t i) const {
    return {vectors_.data() + i * dim(), dim()};
  }
  std::span<const double> vector(const std::string& code) const { return row(vocabulary_.index(code)); }

  bool operator==(const EmbeddingSet& o) const {
    return vocabulary_ == o.vocabulary_ && meta_ == o.meta_ && vectors_ == o.vectors_;
  }

 private:
  ConceptVocabulary vocabulary_;
  Matrix vectors_;
  EmbeddingMeta meta_;
};

/// Isotropic Gaussian vectors; the random-initialization baseline.
EmbeddingSet random_embeddings(const ConceptVocabulary& vocabulary, std::size_t dim, std::uint64_t seed);

double l2_norm(std::span<const double> a);

/// a.b / (|a||b|), clamped to [-1, 1]. Throws on zero vectors or length mismatch.
double cosine(std::span<const double> a, std::span<const double> b);

struct Neighbour {
  std::string code;
  double cosine = 0.0;

  bool operator==(const Neighbour&) const = default;
};

struct Neighbourhood {
  std::string query;
  std::vector<Neighbour> neighbours;
};

/// Precomputed norms plus full per-code similarity rankings. Rankings are
/// sorted by descending cosine with ties broken by code.
class CosineIndex {
 public:
  explicit CosineIndex(const EmbeddingSet& e);

  std::size_t size() const { return norms_.size(); }
  double similarity(std::size_t i, std::size_t j) const;
  /// All other codes ordered from most to least similar to code i.
  std::vector<std::size_t> ranking(std::size_t i) const;

 private:
  const EmbeddingSet& e_;
  std::vector<double> norms_;
};

/// The k most similar codes to `query`. Requires 1 <= k <= V-1.
Neighbourhood nearest_neighbours(const EmbeddingSet& e, const std::string& query, std::size_t k);

void save_embeddings(const EmbeddingSet& e, const std::filesystem::path& path);
void write_embeddings(const EmbeddingSet& e, std::ostream& out);
EmbeddingSet load_embeddings(const std::filesystem::path& path);
EmbeddingSet parse_embeddings(std::istream& in);

}  // namespace embench
