#pragma once

#include <cstdint>
#include <vector>

#include "embench/corpus.hpp"
#include "embench/pairlist.hpp"

namespace embench {

/// Synthetic corpus parameters. Defaults follow the visit and code
/// statistics of a large primary-care cohort (18.73 visits per patient,
/// 1.36 codes per visit).
struct GeneratorConfig {
  int n_patients = 1000;
  int vocab_size = 200;
  int n_clusters = 20;
  double cluster_affinity = 0.9;
  double mean_visits = 18.73;
  double mean_codes_per_visit = 1.36;
  double zipf_exponent = 1.0;
  std::uint64_t seed = 0;
  /// Comorbidity clusters each patient carries; visits draw their cluster
  /// from this profile.
  int clusters_per_patient = 2;
  double mean_gap_days = 60.0;

  /// Throws Error naming the offending field.
  void validate() const;
};

/// Largest vocabulary the [A-Z][0-9][0-9] code space can supply.
inline constexpr int kMaxGeneratedVocab = 26 * 100;

struct GeneratedCorpus {
  Corpus corpus;
  PairList planted;
  /// Every generated code, including any that no visit happened to use.
  std::vector<std::string> codes;
  /// Cluster id per entry of `codes`.
  std::vector<int> cluster_of;
};

GeneratedCorpus generate_corpus(const GeneratorConfig& cfg);

/// Rate parameter of a zero-truncated Poisson whose mean is `mean` (> 1).
double truncated_poisson_rate(double mean);

}  // namespace embench
