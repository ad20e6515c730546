#include "embench/trainers/common.hpp"

#include <cmath>

namespace embench {

void init_uniform(Matrix& m, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
}

void init_uniform(Vector& v, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-bound, bound);
}

void check_divergence(double loss, std::size_t epoch, std::size_t step) {
  if (!std::isfinite(loss)) {
    throw Error("divergence: non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(step));
  }
}

}  // namespace embench
