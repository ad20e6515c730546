#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "embench/embedding.hpp"

namespace embench {

struct TsneConfig {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  double early_exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  double step_size = 200.0;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t momentum_switch = 250;
  double min_gain = 0.01;
  std::uint64_t seed = 0;

  /// Checks the schedule and perplexity < (n-1)/3 for n points.
  void validate(std::size_t n) const;
};

struct ProjectionRow {
  std::string code;
  double x = 0.0;
  double y = 0.0;
  char chapter = '?';
};

struct Projection {
  std::vector<ProjectionRow> rows;
  double kl_init = 0.0;
  double kl_final = 0.0;
  std::uint64_t seed = 0;
};

struct Affinities {
  Matrix conditional;  // row i: p(j | i), rows sum to 1
  Matrix joint;        // (P + P^T) / 2n
  Vector entropy;      // achieved entropy of each conditional row (nats)
  Vector precision;    // 1 / (2 sigma_i^2)
};

/// Entropy tolerance of the per-point bandwidth search.
inline constexpr double kPerplexityTolerance = 1e-4;

/// Gaussian affinities on squared Euclidean distances between rows of `x`.
Affinities tsne_affinities(const Matrix& x, double perplexity, int jobs = 1);

/// KL(P || Q) for the Student-t kernel on the 2-D layout `y` (n x 2).
double tsne_kl(const Matrix& joint, const Matrix& y);

/// Gradient of KL(exaggeration * P || Q) with respect to `y`.
void tsne_gradient(const Matrix& joint, const Matrix& y, double exaggeration, Matrix& grad, int jobs = 1);

/// Rows are L2-normalized before computing distances.
Projection tsne(const EmbeddingSet& e, const TsneConfig& cfg, int jobs = 1);

/// ICD-10 chapter proxy: the first letter of a `[A-Z][0-9][0-9]` code.
char chapter_of(std::string_view code);

void write_projection(const Projection& p, std::ostream& out);
void save_projection(const Projection& p, const std::filesystem::path& path);

}  // namespace embench
