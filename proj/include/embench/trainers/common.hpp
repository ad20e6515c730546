#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "embench/common.hpp"

namespace embench {

/// Demographic embedding tables, one row per category. AE rows are
/// encoder weight columns; NCF rows are its lookup tables.
struct DemographicEmbeddings {
  std::string method;
  Matrix sex;         // 2 x d_sex
  Matrix region;      // 10 x d_region
  Matrix birth_year;  // 111 x d_birth_year, row 0 = 1888

  std::size_t width() const {
    return static_cast<std::size_t>(sex.cols() + region.cols() + birth_year.cols());
  }
};

/// Mean training loss per completed epoch.
using EpochLosses = std::vector<double>;

/// Fills m with uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) draws in row-major order.
void init_uniform(Matrix& m, std::size_t fan_in, Rng& rng);
void init_uniform(Vector& v, std::size_t fan_in, Rng& rng);

/// Throws Error("divergence ...") when `loss` is not finite.
void check_divergence(double loss, std::size_t epoch, std::size_t step);

}  // namespace embench
