#include "embench/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace embench {

namespace {

const std::vector<std::string> kKnownMethods = {"AE", "NCF", "CBOW", "CBOWA", "CBOWA(reconstructed)", "BEHRT", "RANDOM"};

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine_with_norms(std::span<const double> a, std::span<const double> b, double na, double nb) {
  const double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace

std::string base_method(const std::string& method) { return method.substr(0, method.find('(')); }

EmbeddingSet::EmbeddingSet(ConceptVocabulary vocabulary, Matrix vectors, EmbeddingMeta meta)
    : vocabulary_(std::move(vocabulary)), vectors_(std::move(vectors)), meta_(std::move(meta)) {
  if (static_cast<std::size_t>(vectors_.rows()) != vocabulary_.size())
    throw Error("embedding: " + std::to_string(vectors_.rows()) + " rows for a vocabulary of " +
                std::to_string(vocabulary_.size()));
  if (vectors_.cols() == 0) throw Error("embedding: dimension must be positive");
  if (!vectors_.allFinite()) throw Error("embedding: non-finite value");
  if (std::find(kKnownMethods.begin(), kKnownMethods.end(), meta_.method) == kKnownMethods.end())
    throw Error("embedding: unknown method '" + meta_.method + "'");
}

EmbeddingSet random_embeddings(const ConceptVocabulary& vocabulary, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(vocabulary.size(), dim);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return EmbeddingSet(vocabulary, std::move(m), EmbeddingMeta{"RANDOM", seed, 0});
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("cosine: length mismatch");
  const double na = l2_norm(a), nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw Error("undefined cosine for zero vector");
  return cosine_with_norms(a, b, na, nb);
}

CosineIndex::CosineIndex(const EmbeddingSet& e) : e_(e), norms_(e.size()) {
  for (std::size_t i = 0; i < e.size(); ++i) {
    norms_[i] = l2_norm(e.row(i));
    if (norms_[i] == 0.0)
      throw Error("undefined cosine for zero vector (code " + e.vocabulary().code(i) + ")");
  }
}

double CosineIndex::similarity(std::size_t i, std::size_t j) const {
  return cosine_with_norms(e_.row(i), e_.row(j), norms_[i], norms_[j]);
}

std::vector<std::size_t> CosineIndex::ranking(std::size_t i) const {
  const std::size_t n = size();
  std::vector<double> sim(n);
  for (std::size_t j = 0; j < n; ++j) sim[j] = j == i ? 0.0 : similarity(i, j);
  std::vector<std::size_t> order;
  order.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) order.push_back(j);
  }
  // Vocabulary order is lexicographic, so index order breaks ties by code.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });
  return order;
}

Neighbourhood nearest_neighbours(const EmbeddingSet& e, const std::string& query, std::size_t k) {
  const std::size_t q = e.vocabulary().index(query);
  if (k < 1 || k + 1 > e.size())
    throw Error("nearest_neighbours: k=" + std::to_string(k) + " out of range [1, " +
                std::to_string(e.size() - 1) + "]");
  CosineIndex index(e);
  auto order = index.ranking(q);
  Neighbourhood out{query, {}};
  for (std::size_t r = 0; r < k; ++r) {
    out.neighbours.push_back({e.vocabulary().code(order[r]), index.similarity(q, order[r])});
  }
  return out;
}

void write_embeddings(const EmbeddingSet& e, std::ostream& out) {
  out << e.size() << ' ' << e.dim() << ' ' << e.meta().method << ' ' << e.meta().seed << ' '
      << e.meta().corpus_fingerprint << '\n';
  for (std::size_t i = 0; i < e.size(); ++i) {
    out << e.vocabulary().code(i);
    for (double x : e.row(i)) out << ' ' << format_double(x);
    out << '\n';
  }
}

void save_embeddings(const EmbeddingSet& e, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write embedding file " + path.string());
  write_embeddings(e, out);
  if (!out) throw Error("I/O failure writing " + path.string());
}

namespace {

template <typename T>
T parse_number(const std::string& tok, const std::string& what) {
  T value{};
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw Error("embedding file: cannot parse " + what + " '" + tok + "'");
  return value;
}

}  // namespace

EmbeddingSet parse_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("embedding file: missing header");
  std::istringstream hs(line);
  std::vector<std::string> head;
  for (std::string t; hs >> t;) head.push_back(t);
  if (head.size() != 5) throw Error("embedding file: header must be 'V d method seed corpus_fingerprint'");
  const auto v = parse_number<std::size_t>(head[0], "vocabulary size");
  const auto d = parse_number<std::size_t>(head[1], "dimension");
  EmbeddingMeta meta{head[2], parse_number<std::uint64_t>(head[3], "seed"),
                     parse_number<std::uint64_t>(head[4], "corpus fingerprint")};

  std::vector<std::string> codes;
  Matrix m(v, d);
  for (std::size_t r = 0; r < v; ++r) {
    const std::string where = "embedding file row " + std::to_string(r + 1);
    if (!std::getline(in, line)) throw Error(where + ": missing (header declares " + std::to_string(v) + " rows)");
    std::istringstream ls(line);
    std::string code;
    ls >> code;
    std::vector<double> values;
    for (std::string t; ls >> t;) {
      double x = parse_number<double>(t, "value");
      if (!std::isfinite(x)) throw Error(where + ": non-finite value");
      values.push_back(x);
    }
    if (values.size() != d)
      throw Error(where + ": " + std::to_string(values.size()) + " values, header says dim " + std::to_string(d));
    if (!codes.empty() && code <= codes.back()) throw Error(where + ": codes not in vocabulary order");
    codes.push_back(code);
    for (std::size_t c = 0; c < d; ++c) m(r, c) = values[c];
  }
  while (std::getline(in, line)) {
    if (!line.empty()) throw Error("embedding file: more rows than the header declares");
  }
  return EmbeddingSet(ConceptVocabulary(std::move(codes)), std::move(m), std::move(meta));
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file " + path.string());
  return parse_embeddings(in);
}

}  // namespace embench
