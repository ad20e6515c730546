#include "embench/eval/hitrate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace embench {

namespace {

void check_L(std::size_t L, std::size_t vocab_size) {
  if (L < 1 || L + 1 > vocab_size)
    throw Error("L must be in [1, " + std::to_string(vocab_size > 0 ? vocab_size - 1 : 0) + "], got " +
                std::to_string(L));
}

std::string source_label(const PairList& pairs) {
  if (pairs.empty()) return "";
  const std::string& first = pairs.pairs().front().source;
  for (const auto& p : pairs.pairs())
    if (p.source != first) return "pooled";
  return first;
}

}  // namespace

std::vector<std::size_t> pair_hit_ranks(const EmbeddingSet& e, const PairList& pairs, int jobs) {
  const auto& vocab = e.vocabulary();
  std::vector<std::pair<std::size_t, std::size_t>> evaluable;
  std::map<std::size_t, std::size_t> slot;  // code index -> row in `positions`
  for (const auto& p : pairs.pairs()) {
    const auto a = vocab.find(p.first), b = vocab.find(p.second);
    if (!a || !b) continue;
    evaluable.emplace_back(*a, *b);
    slot.emplace(*a, 0);
    slot.emplace(*b, 0);
  }
  std::vector<std::size_t> codes;
  for (auto& [code, row] : slot) {
    row = codes.size();
    codes.push_back(code);
  }

  const CosineIndex index(e);
  std::vector<std::vector<std::size_t>> positions(codes.size());
  parallel_for(codes.size(), jobs, [&](std::size_t c) {
    const auto order = index.ranking(codes[c]);
    auto& pos = positions[c];
    pos.assign(e.size(), 0);
    for (std::size_t r = 0; r < order.size(); ++r) pos[order[r]] = r + 1;
  });

  std::vector<std::size_t> ranks;
  ranks.reserve(evaluable.size());
  for (const auto& [a, b] : evaluable) {
    ranks.push_back(std::min(positions[slot.at(a)][b], positions[slot.at(b)][a]));
  }
  return ranks;
}

HitRate hit_rate(const EmbeddingSet& e, const PairList& pairs, std::size_t L, int jobs) {
  check_L(L, e.size());
  const auto ranks = pair_hit_ranks(e, pairs, jobs);
  if (ranks.empty()) throw Error("no evaluable pairs");
  const auto hits = std::count_if(ranks.begin(), ranks.end(), [&](std::size_t r) { return r <= L; });
  return {static_cast<double>(hits) / static_cast<double>(ranks.size()), ranks.size()};
}

HitRateCurve hit_rate_curve(const EmbeddingSet& e, const PairList& pairs, std::size_t L_min, std::size_t L_max,
                            int jobs) {
  check_L(L_min, e.size());
  check_L(L_max, e.size());
  if (L_min > L_max) throw Error("L_min must not exceed L_max");
  auto ranks = pair_hit_ranks(e, pairs, jobs);
  if (ranks.empty()) throw Error("no evaluable pairs");
  std::sort(ranks.begin(), ranks.end());

  HitRateCurve curve;
  curve.source = source_label(pairs);
  if (!pairs.empty()) curve.relation = pairs.pairs().front().relation;
  for (std::size_t L = L_min; L <= L_max; ++L) {
    const auto hits = std::upper_bound(ranks.begin(), ranks.end(), L) - ranks.begin();
    curve.points.push_back({L, static_cast<double>(hits) / static_cast<double>(ranks.size()), ranks.size()});
  }
  return curve;
}

std::vector<HitRateCurve> hit_rate_curves(const EmbeddingSet& e, const PairList& pairs, std::size_t L_min,
                                          std::size_t L_max, int jobs) {
  std::vector<HitRateCurve> curves;
  for (const auto& [source, relation] : pairs.groups()) {
    const PairList group = pairs.filter(source, relation);
    if (pair_hit_ranks(e, group, jobs).empty()) continue;
    auto curve = hit_rate_curve(e, group, L_min, L_max, jobs);
    curve.source = source;
    curve.relation = relation;
    curves.push_back(std::move(curve));
  }
  return curves;
}

double random_hit_rate(std::size_t L, std::size_t vocab_size) {
  check_L(L, vocab_size);
  const double miss = 1.0 - static_cast<double>(L) / static_cast<double>(vocab_size - 1);
  return 1.0 - miss * miss;
}

ChanceLevel chance_hit_rate(const ConceptVocabulary& vocabulary, const PairList& pairs, std::size_t L,
                            std::size_t dim, std::size_t n_seeds, std::uint64_t base_seed, int jobs) {
  if (n_seeds < 2) throw Error("chance_hit_rate: need at least 2 seeds");
  std::vector<double> rates(n_seeds);
  parallel_for(n_seeds, jobs, [&](std::size_t r) {
    rates[r] = hit_rate(random_embeddings(vocabulary, dim, base_seed + r), pairs, L).rate;
  });
  ChanceLevel c;
  for (double x : rates) c.mean += x;
  c.mean /= static_cast<double>(n_seeds);
  for (double x : rates) c.sd += (x - c.mean) * (x - c.mean);
  c.sd = std::sqrt(c.sd / static_cast<double>(n_seeds - 1));
  return c;
}

void write_hit_rate_rows(std::ostream& out, const std::string& method, const std::vector<HitRateCurve>& curves) {
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out << method << ',' << c.source << ',' << to_string(c.relation) << ',' << p.L << ','
          << format_double(p.hit_rate) << ',' << p.n_evaluable << '\n';
    }
  }
}

}  // namespace embench
