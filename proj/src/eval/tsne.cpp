#include "embench/eval/tsne.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

namespace embench {

void TsneConfig::validate(std::size_t n) const {
  if (n < 4) throw Error("t-SNE needs at least 4 points, got " + std::to_string(n));
  if (!(perplexity > 0.0)) throw Error("t-SNE: perplexity must be positive");
  if (!(perplexity < (static_cast<double>(n) - 1.0) / 3.0))
    throw Error("t-SNE: perplexity " + format_double(perplexity) + " too large for " + std::to_string(n) +
                " points (must be < (n-1)/3)");
  if (!(step_size > 0.0)) throw Error("t-SNE: step_size must be positive");
  if (!(early_exaggeration >= 1.0)) throw Error("t-SNE: early_exaggeration must be at least 1");
  if (!(min_gain > 0.0)) throw Error("t-SNE: min_gain must be positive");
}

namespace {

/// Conditional row for point i at the given precision; returns its entropy.
double conditional_row(const Matrix& d2, std::size_t i, double precision, double min_dist, RowVector& p) {
  const auto n = d2.cols();
  double sum = 0.0, weighted = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == static_cast<Eigen::Index>(i)) {
      p[j] = 0.0;
      continue;
    }
    const double shifted = d2(i, j) - min_dist;
    p[j] = std::exp(-precision * shifted);
    sum += p[j];
    weighted += shifted * p[j];
  }
  p /= sum;
  return std::log(sum) + precision * weighted / sum;
}

}  // namespace

Affinities tsne_affinities(const Matrix& x, double perplexity, int jobs) {
  const auto n = x.rows();
  if (n < 2) throw Error("t-SNE affinities need at least 2 points");
  const Vector sq = x.rowwise().squaredNorm();
  Matrix d2 = (-2.0 * x * x.transpose()).colwise() + sq;
  d2.rowwise() += sq.transpose();
  d2 = d2.cwiseMax(0.0);

  Affinities a;
  a.conditional = Matrix::Zero(n, n);
  a.entropy.resize(n);
  a.precision.resize(n);
  const double target = std::log(perplexity);
  parallel_for(static_cast<std::size_t>(n), jobs, [&](std::size_t i) {
    double min_dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != static_cast<Eigen::Index>(i)) min_dist = std::min(min_dist, d2(i, j));
    RowVector p(n);
    double lo = 0.0, hi = std::numeric_limits<double>::infinity(), precision = 1.0;
    double h = conditional_row(d2, i, precision, min_dist, p);
    for (int step = 0; step < 500 && std::abs(h - target) > kPerplexityTolerance; ++step) {
      if (h > target) {
        lo = precision;
        precision = std::isinf(hi) ? precision * 2.0 : 0.5 * (lo + hi);
      } else {
        hi = precision;
        precision = 0.5 * (lo + hi);
      }
      h = conditional_row(d2, i, precision, min_dist, p);
    }
    if (std::abs(h - target) > kPerplexityTolerance)
      throw Error("t-SNE: could not match perplexity for point " + std::to_string(i));
    a.conditional.row(i) = p;
    a.entropy[i] = h;
    a.precision[i] = precision;
  });
  a.joint = (a.conditional + a.conditional.transpose()) / (2.0 * static_cast<double>(n));
  return a;
}

namespace {

/// Student-t numerators 1 / (1 + |y_i - y_j|^2), zero diagonal; returns their sum.
double student_kernel(const Matrix& y, Matrix& num, int jobs) {
  const auto n = y.rows();
  num.resize(n, n);
  Vector row_sum(n);
  parallel_for(static_cast<std::size_t>(n), jobs, [&](std::size_t i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == static_cast<Eigen::Index>(i)) {
        num(i, j) = 0.0;
        continue;
      }
      const double dx = y(i, 0) - y(j, 0), dy = y(i, 1) - y(j, 1);
      num(i, j) = 1.0 / (1.0 + dx * dx + dy * dy);
      s += num(i, j);
    }
    row_sum[i] = s;
  });
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += row_sum[i];
  return total;
}

void center(Matrix& y) {
  const RowVector mean = y.colwise().mean();
  y.rowwise() -= mean;
}

}  // namespace

double tsne_kl(const Matrix& joint, const Matrix& y) {
  Matrix num;
  const double z = student_kernel(y, num, 1);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < joint.rows(); ++i) {
    for (Eigen::Index j = 0; j < joint.cols(); ++j) {
      const double p = joint(i, j);
      if (i == j || p <= 0.0) continue;
      const double q = std::max(num(i, j) / z, std::numeric_limits<double>::min());
      kl += p * std::log(p / q);
    }
  }
  return kl;
}

void tsne_gradient(const Matrix& joint, const Matrix& y, double exaggeration, Matrix& grad, int jobs) {
  const auto n = static_cast<std::size_t>(y.rows());
  Matrix num;
  const double z = student_kernel(y, num, jobs);
  grad.resize(y.rows(), 2);
  parallel_for(n, jobs, [&](std::size_t i) {
    double gx = 0.0, gy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = (exaggeration * joint(i, j) - num(i, j) / z) * num(i, j);
      gx += w * (y(i, 0) - y(j, 0));
      gy += w * (y(i, 1) - y(j, 1));
    }
    grad(i, 0) = 4.0 * gx;
    grad(i, 1) = 4.0 * gy;
  });
}

Projection tsne(const EmbeddingSet& e, const TsneConfig& cfg, int jobs) {
  const std::size_t n = e.size();
  cfg.validate(n);
  Matrix x = e.vectors();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double norm = x.row(i).norm();
    if (norm == 0.0) throw Error("t-SNE: zero vector for code " + e.vocabulary().code(i));
    x.row(i) /= norm;
  }
  const Affinities aff = tsne_affinities(x, cfg.perplexity, jobs);
  const Matrix& P = aff.joint;

  Rng rng(cfg.seed);
  Matrix y(n, 2);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal(0.0, 1e-4);
  center(y);

  Projection out;
  out.seed = cfg.seed;
  out.kl_init = tsne_kl(P, y);

  Matrix update = Matrix::Zero(n, 2), gains = Matrix::Ones(n, 2), grad(n, 2);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const double exaggeration = it < cfg.exaggeration_iterations ? cfg.early_exaggeration : 1.0;
    const double momentum = it < cfg.momentum_switch ? cfg.initial_momentum : cfg.final_momentum;
    tsne_gradient(P, y, exaggeration, grad, jobs);
    if (!grad.allFinite()) throw Error("t-SNE: non-finite gradient at iteration " + std::to_string(it));
    for (Eigen::Index k = 0; k < grad.size(); ++k) {
      double& g = gains.data()[k];
      const bool same_sign = (grad.data()[k] > 0.0) == (update.data()[k] > 0.0);
      g = same_sign ? g * 0.8 : g + 0.2;
      g = std::max(g, cfg.min_gain);
      update.data()[k] = momentum * update.data()[k] - cfg.step_size * g * grad.data()[k];
    }
    y += update;
    center(y);
  }
  out.kl_final = tsne_kl(P, y);

  for (std::size_t i = 0; i < n; ++i) {
    const std::string& code = e.vocabulary().code(i);
    out.rows.push_back({code, y(i, 0), y(i, 1), chapter_of(code)});
  }
  return out;
}

char chapter_of(std::string_view code) {
  const bool ok = code.size() == 3 && code[0] >= 'A' && code[0] <= 'Z' && code[1] >= '0' && code[1] <= '9' &&
                  code[2] >= '0' && code[2] <= '9';
  if (!ok) throw Error("malformed ICD-10 code '" + std::string(code) + "'");
  return code[0];
}

void write_projection(const Projection& p, std::ostream& out) {
  out << "code,x,y,chapter\n";
  for (const auto& r : p.rows) {
    out << r.code << ',' << format_double(r.x) << ',' << format_double(r.y) << ',' << r.chapter << '\n';
  }
  out << "# kl_init=" << format_double(p.kl_init) << " kl_final=" << format_double(p.kl_final) << " seed=" << p.seed
      << '\n';
}

void save_projection(const Projection& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_projection(p, out);
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace embench
