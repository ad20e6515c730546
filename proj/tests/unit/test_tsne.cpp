#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "embench/eval/tsne.hpp"

namespace embench {
namespace {

std::string code(char chapter, int i) {
  std::string c(1, chapter);
  c += static_cast<char>('0' + i / 10);
  c += static_cast<char>('0' + i % 10);
  return c;
}

/// Two tight blobs pointing in orthogonal directions.
EmbeddingSet two_blobs(int per_blob, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> codes;
  for (int i = 0; i < per_blob; ++i) codes.push_back(code('A', i));
  for (int i = 0; i < per_blob; ++i) codes.push_back(code('B', i));
  Matrix m(2 * per_blob, 10);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = 0.3 * rng.normal();
    m(i, i < per_blob ? 0 : 1) += 10.0;
  }
  return EmbeddingSet(ConceptVocabulary(codes), m, {"RANDOM", seed, 0});
}

double silhouette(const Projection& p) {
  const std::size_t n = p.rows.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double same = 0, other = 0;
    std::size_t ns = 0, no = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = std::hypot(p.rows[i].x - p.rows[j].x, p.rows[i].y - p.rows[j].y);
      if (p.rows[i].chapter == p.rows[j].chapter) {
        same += d;
        ++ns;
      } else {
        other += d;
        ++no;
      }
    }
    const double a = same / ns, b = other / no;
    total += (b - a) / std::max(a, b);
  }
  return total / n;
}

TEST(ChapterOf, Examples) {
  EXPECT_EQ(chapter_of("I10"), 'I');
  EXPECT_EQ(chapter_of("M79"), 'M');
  EXPECT_THROW(chapter_of("10A"), Error);
  EXPECT_THROW(chapter_of("I1"), Error);
  EXPECT_THROW(chapter_of("i10"), Error);
  EXPECT_THROW(chapter_of("I100"), Error);
}

TEST(TsneAffinities, EntropyMatchesPerplexity) {
  Rng rng(1);
  for (double perplexity : {2.0, 5.0, 15.0}) {
    Matrix x(60, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const auto a = tsne_affinities(x, perplexity);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      EXPECT_LE(std::abs(a.entropy[i] - std::log(perplexity)), kPerplexityTolerance);
      EXPECT_NEAR(a.conditional.row(i).sum(), 1.0, 1e-9);
      EXPECT_EQ(a.conditional(i, i), 0.0);
      // Recompute the entropy from the stored row.
      double h = 0;
      for (Eigen::Index j = 0; j < a.conditional.cols(); ++j) {
        const double p = a.conditional(i, j);
        if (p > 0) h -= p * std::log(p);
      }
      EXPECT_LE(std::abs(h - std::log(perplexity)), kPerplexityTolerance + 1e-9);
    }
    EXPECT_TRUE(a.joint.isApprox(a.joint.transpose(), 0.0));
    EXPECT_GE(a.joint.minCoeff(), 0.0);
    EXPECT_NEAR(a.joint.sum(), 1.0, 1e-12);
  }
}

TEST(TsneAffinities, SameResultForAnyJobs) {
  Rng rng(2);
  Matrix x(40, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  EXPECT_EQ(tsne_affinities(x, 5.0, 1).joint, tsne_affinities(x, 5.0, 3).joint);
}

TEST(TsneKl, MatchesDirectSum) {
  Matrix p(3, 3);
  p << 0, 0.2, 0.1, 0.2, 0, 0.2, 0.1, 0.2, 0;
  Matrix y(3, 2);
  y << 0, 0, 1, 0, 0, 2;
  const double n01 = 1.0 / 2.0, n02 = 1.0 / 5.0, n12 = 1.0 / 6.0;
  const double z = 2 * (n01 + n02 + n12);
  const double expected = 2 * (0.2 * std::log(0.2 / (n01 / z)) + 0.1 * std::log(0.1 / (n02 / z)) +
                               0.2 * std::log(0.2 / (n12 / z)));
  EXPECT_NEAR(tsne_kl(p, y), expected, 1e-14);
}

TEST(TsneGradient, MatchesFiniteDifferences) {
  Rng rng(3);
  Matrix x(12, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const Matrix P = tsne_affinities(x, 3.0).joint;
  Matrix y(12, 2);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();
  Matrix grad;
  tsne_gradient(P, y, 1.0, grad);
  const double h = 1e-5;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    Matrix plus = y, minus = y;
    plus.data()[k] += h;
    minus.data()[k] -= h;
    const double numeric = (tsne_kl(P, plus) - tsne_kl(P, minus)) / (2 * h);
    EXPECT_NEAR(grad.data()[k], numeric, 1e-6 + 1e-5 * std::abs(numeric));
  }
}

TEST(Tsne, ConfigValidation) {
  auto e = two_blobs(5, 1);  // n = 10
  TsneConfig cfg;
  EXPECT_EQ(cfg.perplexity, 30.0);
  EXPECT_EQ(cfg.iterations, 1000u);
  EXPECT_EQ(cfg.early_exaggeration, 12.0);
  EXPECT_EQ(cfg.exaggeration_iterations, 250u);
  EXPECT_EQ(cfg.step_size, 200.0);
  EXPECT_THROW(tsne(e, cfg), Error);
  cfg.perplexity = 3.0;  // (10 - 1) / 3 = 3 is not strictly above
  EXPECT_THROW(tsne(e, cfg), Error);
  cfg.perplexity = 2.9;
  cfg.iterations = 10;
  EXPECT_NO_THROW(tsne(e, cfg));
  auto tiny = EmbeddingSet(ConceptVocabulary({"A00", "A01", "A02"}), Matrix::Identity(3, 3), {"RANDOM", 0, 0});
  cfg.perplexity = 0.5;
  EXPECT_THROW(tsne(tiny, cfg), Error);
}

TEST(Tsne, SeparatesBlobsAndReducesKl) {
  auto e = two_blobs(30, 4);
  TsneConfig cfg;
  cfg.perplexity = 10;
  cfg.seed = 7;
  auto p = tsne(e, cfg);
  ASSERT_EQ(p.rows.size(), 60u);
  EXPECT_LT(p.kl_final, p.kl_init);
  EXPECT_GT(silhouette(p), 0.8);
  double cx = 0, cy = 0;
  for (const auto& r : p.rows) {
    EXPECT_TRUE(std::isfinite(r.x) && std::isfinite(r.y));
    cx += r.x;
    cy += r.y;
  }
  EXPECT_NEAR(cx / 60, 0.0, 1e-9);
  EXPECT_NEAR(cy / 60, 0.0, 1e-9);
  EXPECT_EQ(p.rows[0].code, "A00");
  EXPECT_EQ(p.rows[0].chapter, 'A');
  EXPECT_EQ(p.rows[59].chapter, 'B');
}

TEST(Tsne, DeterministicAcrossRunsAndJobs) {
  auto e = two_blobs(15, 5);
  TsneConfig cfg;
  cfg.perplexity = 5;
  cfg.iterations = 300;
  cfg.seed = 3;
  std::ostringstream a, b, c;
  write_projection(tsne(e, cfg), a);
  write_projection(tsne(e, cfg), b);
  write_projection(tsne(e, cfg, 4), c);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str(), c.str());
  cfg.seed = 4;
  std::ostringstream d;
  write_projection(tsne(e, cfg), d);
  EXPECT_NE(a.str(), d.str());
}

TEST(Tsne, CsvLayout) {
  Projection p;
  p.rows = {{"A00", 0.5, -1.25, 'A'}, {"B01", -0.5, 1.25, 'B'}};
  p.kl_init = 2.5;
  p.kl_final = 0.125;
  p.seed = 9;
  std::ostringstream os;
  write_projection(p, os);
  EXPECT_EQ(os.str(), "code,x,y,chapter\nA00,0.5,-1.25,A\nB01,-0.5,1.25,B\n# kl_init=2.5 kl_final=0.125 seed=9\n");
}

}  // namespace
}  // namespace embench
