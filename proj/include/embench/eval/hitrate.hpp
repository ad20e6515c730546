#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "embench/embedding.hpp"
#include "embench/pairlist.hpp"

namespace embench {

struct HitRate {
  double rate = 0.0;
  std::size_t n_evaluable = 0;
};

struct HitRatePoint {
  std::size_t L = 0;
  double hit_rate = 0.0;
  std::size_t n_evaluable = 0;
};

struct HitRateCurve {
  std::string source;
  Relation relation = Relation::kComorbid;
  std::vector<HitRatePoint> points;
};

/// For every pair with both codes in the vocabulary, the smallest L at which
/// it counts as a hit: min(rank of b around a, rank of a around b), 1-based.
std::vector<std::size_t> pair_hit_ranks(const EmbeddingSet& e, const PairList& pairs, int jobs = 1);

/// Fraction of evaluable pairs where either code is in the other's
/// L-neighbourhood. Throws when no pair is evaluable.
HitRate hit_rate(const EmbeddingSet& e, const PairList& pairs, std::size_t L, int jobs = 1);

/// One point per L in [L_min, L_max].
HitRateCurve hit_rate_curve(const EmbeddingSet& e, const PairList& pairs, std::size_t L_min = 3,
                            std::size_t L_max = 20, int jobs = 1);

/// One curve per (source, relation) group. Groups with no evaluable pairs are skipped.
std::vector<HitRateCurve> hit_rate_curves(const EmbeddingSet& e, const PairList& pairs, std::size_t L_min = 3,
                                          std::size_t L_max = 20, int jobs = 1);

/// Expected hit rate of independent uniformly random neighbourhoods:
/// 1 - (1 - L/(V-1))^2. Cosine neighbourhoods are symmetric, which makes the
/// two directions positively correlated, so random embeddings score below this.
double random_hit_rate(std::size_t L, std::size_t vocab_size);

struct ChanceLevel {
  double mean = 0.0;
  double sd = 0.0;  // across seeds, n-1 denominator
};

/// Hit rate of Gaussian random embeddings over seeds base_seed..base_seed+n_seeds-1.
ChanceLevel chance_hit_rate(const ConceptVocabulary& vocabulary, const PairList& pairs, std::size_t L,
                            std::size_t dim, std::size_t n_seeds, std::uint64_t base_seed = 0, int jobs = 1);

inline constexpr const char* kHitRateHeader = "method,source,relation,L,hit_rate,n_evaluable";
void write_hit_rate_rows(std::ostream& out, const std::string& method, const std::vector<HitRateCurve>& curves);

}  // namespace embench
