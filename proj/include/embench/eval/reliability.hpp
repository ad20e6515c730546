#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "embench/corpus.hpp"
#include "embench/embedding.hpp"

namespace embench {

/// Trains one embedding set on `corpus` with `seed`.
using Trainer = std::function<EmbeddingSet(const Corpus& corpus, std::uint64_t seed)>;

struct PairVariability {
  std::string code_a;
  std::string code_b;
  double mean_cosine = 0.0;
  double sd_cosine = 0.0;
};

struct ReliabilityReport {
  std::string method;
  double sample_fraction = 1.0;
  std::size_t n_runs = 0;
  std::vector<PairVariability> pairs;
  double sigma = 0.0;  // mean of sd_cosine over `pairs`
  std::vector<std::string> warnings;

  std::size_t n_pairs() const { return pairs.size(); }
};

struct ReliabilityOptions {
  std::size_t n_runs = 10;
  std::uint64_t base_seed = 0;
  bool pin_seed = false;      // every run uses base_seed
  std::size_t max_pairs = 0;  // sweep only: seeded sample of pairs when > 0
  int jobs = 1;
};

/// Mean and sample sd (n-1); sd is 0 for a single value.
std::pair<double, double> mean_and_sd(const std::vector<double>& values);

/// Seeded patient subsample without replacement, original order kept.
Corpus subsample_patients(const Corpus& corpus, double fraction, std::uint64_t seed);

/// Cosine of each probe pair across n_runs seeded runs.
ReliabilityReport run_variability(const Trainer& trainer, const std::string& method, const Corpus& corpus,
                                  const std::vector<std::pair<std::string, std::string>>& probe_pairs,
                                  const ReliabilityOptions& opts = {});

/// For each fraction, n_runs seeded subsamples; sd over all code pairs
/// present in every run's vocabulary.
std::vector<ReliabilityReport> sample_size_sweep(const Trainer& trainer, const std::string& method,
                                                 const Corpus& corpus, const std::vector<double>& fractions,
                                                 const ReliabilityOptions& opts = {});

inline constexpr const char* kReliabilityHeader = "method,sample_fraction,n_runs,n_pairs,sigma";
void write_reliability_row(std::ostream& out, const ReliabilityReport& r);
inline constexpr const char* kPairDetailHeader = "method,sample_fraction,code_a,code_b,mean_cosine,sd_cosine";
void write_pair_details(std::ostream& out, const ReliabilityReport& r);

}  // namespace embench
