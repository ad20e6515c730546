#include "embench/eval/reliability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>

namespace embench {

std::pair<double, double> mean_and_sd(const std::vector<double>& values) {
  if (values.empty()) throw Error("mean_and_sd: no values");
  // Shifting by the first value keeps identical inputs at exactly zero spread.
  const double origin = values.front();
  double shift = 0.0;
  for (double v : values) shift += v - origin;
  shift /= static_cast<double>(values.size());
  if (values.size() == 1) return {origin, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - origin - shift) * (v - origin - shift);
  return {origin + shift, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

Corpus subsample_patients(const Corpus& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error("sample fraction must be in (0, 1], got " + format_double(fraction));
  const auto n = corpus.patients.size();
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (keep == 0) throw Error("empty subsample at fraction " + format_double(fraction));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (keep < n) {
    Rng rng(derive_seed(seed, 0x73616d70));
    rng.shuffle(idx);
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
  }
  return corpus.subset(idx);
}

namespace {

std::uint64_t run_seed(const ReliabilityOptions& opts, std::size_t r) {
  return opts.pin_seed ? opts.base_seed : opts.base_seed + r;
}

std::vector<EmbeddingSet> train_runs(const Trainer& trainer, const Corpus& corpus, double fraction,
                                     const ReliabilityOptions& opts) {
  if (opts.n_runs == 0) throw Error("n_runs must be at least 1");
  std::vector<std::optional<EmbeddingSet>> slots(opts.n_runs);
  parallel_for(opts.n_runs, opts.jobs, [&](std::size_t r) {
    const auto seed = run_seed(opts, r);
    try {
      slots[r].emplace(trainer(subsample_patients(corpus, fraction, seed), seed));
    } catch (const std::exception& e) {
      throw Error("run " + std::to_string(r) + " (seed " + std::to_string(seed) + ") failed: " + e.what());
    }
  });
  std::vector<EmbeddingSet> out;
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

void finish(ReliabilityReport& report) {
  if (report.n_runs == 1) report.warnings.push_back("n_runs=1: standard deviations reported as 0");
  double total = 0.0;
  for (const auto& p : report.pairs) total += p.sd_cosine;
  report.sigma = report.pairs.empty() ? 0.0 : total / static_cast<double>(report.pairs.size());
}

PairVariability pair_stats(const std::vector<EmbeddingSet>& runs, const std::vector<CosineIndex>& indexes,
                           const std::string& a, const std::string& b) {
  std::vector<double> cos;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& vocab = runs[r].vocabulary();
    cos.push_back(indexes[r].similarity(vocab.index(a), vocab.index(b)));
  }
  const auto [mean, sd] = mean_and_sd(cos);
  return {a, b, mean, sd};
}

}  // namespace

ReliabilityReport run_variability(const Trainer& trainer, const std::string& method, const Corpus& corpus,
                                  const std::vector<std::pair<std::string, std::string>>& probe_pairs,
                                  const ReliabilityOptions& opts) {
  for (const auto& [a, b] : probe_pairs) {
    if (!corpus.vocabulary.contains(a) || !corpus.vocabulary.contains(b))
      throw Error("probe pair (" + a + ", " + b + ") not in the corpus vocabulary");
  }
  const auto runs = train_runs(trainer, corpus, 1.0, opts);
  std::vector<CosineIndex> indexes;
  for (const auto& e : runs) indexes.emplace_back(e);
  ReliabilityReport report{method, 1.0, opts.n_runs, {}, 0.0, {}};
  for (const auto& [a, b] : probe_pairs) {
    for (std::size_t r = 0; r < runs.size(); ++r) {
      if (!runs[r].vocabulary().contains(a) || !runs[r].vocabulary().contains(b))
        throw Error("run " + std::to_string(r) + ": probe pair (" + a + ", " + b + ") missing from embeddings");
    }
    report.pairs.push_back(pair_stats(runs, indexes, a, b));
  }
  finish(report);
  return report;
}

std::vector<ReliabilityReport> sample_size_sweep(const Trainer& trainer, const std::string& method,
                                                 const Corpus& corpus, const std::vector<double>& fractions,
                                                 const ReliabilityOptions& opts) {
  if (fractions.empty()) throw Error("sample_size_sweep: no fractions");
  std::vector<ReliabilityReport> out;
  for (double fraction : fractions) {
    const auto runs = train_runs(trainer, corpus, fraction, opts);
    std::vector<std::string> shared = runs.front().vocabulary().codes();
    for (const auto& e : runs) {
      std::erase_if(shared, [&](const std::string& c) { return !e.vocabulary().contains(c); });
    }
    if (shared.size() < 2)
      throw Error("vocabulary intersection across runs is empty at fraction " + format_double(fraction));
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < shared.size(); ++i)
      for (std::size_t j = i + 1; j < shared.size(); ++j) pairs.emplace_back(i, j);
    if (opts.max_pairs > 0 && pairs.size() > opts.max_pairs) {
      Rng rng(derive_seed(opts.base_seed, 0x70616972));
      rng.shuffle(pairs);
      pairs.resize(opts.max_pairs);
      std::sort(pairs.begin(), pairs.end());
    }
    std::vector<CosineIndex> indexes;
    for (const auto& e : runs) indexes.emplace_back(e);
    ReliabilityReport report{method, fraction, opts.n_runs, {}, 0.0, {}};
    report.pairs.resize(pairs.size());
    parallel_for(pairs.size(), opts.jobs, [&](std::size_t k) {
      report.pairs[k] = pair_stats(runs, indexes, shared[pairs[k].first], shared[pairs[k].second]);
    });
    finish(report);
    out.push_back(std::move(report));
  }
  return out;
}

void write_reliability_row(std::ostream& out, const ReliabilityReport& r) {
  out << r.method << ',' << format_double(r.sample_fraction) << ',' << r.n_runs << ',' << r.n_pairs() << ','
      << format_double(r.sigma) << '\n';
}

void write_pair_details(std::ostream& out, const ReliabilityReport& r) {
  for (const auto& p : r.pairs) {
    out << r.method << ',' << format_double(r.sample_fraction) << ',' << p.code_a << ',' << p.code_b << ','
        << format_double(p.mean_cosine) << ',' << format_double(p.sd_cosine) << '\n';
  }
}

}  // namespace embench
