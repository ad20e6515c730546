#include "embench/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "embench/common.hpp"

namespace embench {

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error("generator config: " + field + " " + why);
  };
  if (n_patients <= 0) fail("n_patients", "must be positive");
  if (vocab_size <= 0) fail("vocab_size", "must be positive");
  if (vocab_size > kMaxGeneratedVocab) fail("vocab_size", "exceeds the 2600-code space");
  if (n_clusters <= 0) fail("n_clusters", "must be positive");
  if (n_clusters > vocab_size) fail("n_clusters", "must not exceed vocab_size");
  if (!(cluster_affinity > 0.0 && cluster_affinity <= 1.0)) fail("cluster_affinity", "must be in (0,1]");
  if (!(mean_visits > 0.0)) fail("mean_visits", "must be positive");
  if (!(mean_codes_per_visit > 0.0)) fail("mean_codes_per_visit", "must be positive");
  if (mean_codes_per_visit > vocab_size) fail("mean_codes_per_visit", "must not exceed vocab_size");
  if (!(zipf_exponent >= 0.0)) fail("zipf_exponent", "must be non-negative");
  if (clusters_per_patient <= 0 || clusters_per_patient > n_clusters)
    fail("clusters_per_patient", "must be in [1, n_clusters]");
  if (!(mean_gap_days >= 0.0)) fail("mean_gap_days", "must be non-negative");
}

double truncated_poisson_rate(double mean) {
  // mean(λ) = λ / (1 - e^{-λ}) is increasing from 1.
  double lo = 0.0, hi = mean;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double m = mid / -std::expm1(-mid);
    (m < mean ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

int sample_poisson(Rng& rng, double rate) {
  // Inversion; rates here are small.
  const double u = rng.uniform();
  double p = std::exp(-rate), cdf = p;
  int k = 0;
  while (u >= cdf && k < 10000) {
    ++k;
    p *= rate / k;
    cdf += p;
  }
  return k;
}

int sample_geometric(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  const double q = mean / (1.0 + mean);  // failure probability
  double u;
  do {
    u = rng.uniform();
  } while (u <= 0.0);
  return static_cast<int>(std::floor(std::log(u) / std::log(q)));
}

std::string code_name(int slot) {
  std::string code(1, static_cast<char>('A' + slot / 100));
  code += static_cast<char>('0' + slot % 100 / 10);
  code += static_cast<char>('0' + slot % 10);
  return code;
}

}  // namespace

GeneratedCorpus generate_corpus(const GeneratorConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int v = cfg.vocab_size;

  std::vector<int> slots(kMaxGeneratedVocab);
  std::iota(slots.begin(), slots.end(), 0);
  rng.shuffle(slots);
  slots.resize(v);
  std::sort(slots.begin(), slots.end());
  GeneratedCorpus out;
  for (int s : slots) out.codes.push_back(code_name(s));

  std::vector<int> perm(v);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  out.cluster_of.assign(v, 0);
  std::vector<std::vector<int>> members(cfg.n_clusters);
  for (int j = 0; j < v; ++j) {
    out.cluster_of[perm[j]] = j % cfg.n_clusters;
  }
  for (int c = 0; c < v; ++c) members[out.cluster_of[c]].push_back(c);

  // Zipf popularity over a random ranking.
  std::vector<int> rank(v);
  std::iota(rank.begin(), rank.end(), 0);
  rng.shuffle(rank);
  std::vector<double> cdf(v);
  double total = 0.0;
  for (int r = 0; r < v; ++r) total += std::pow(r + 1.0, -cfg.zipf_exponent);
  double acc = 0.0;
  std::vector<double> weight(v);
  for (int r = 0; r < v; ++r) weight[rank[r]] = std::pow(r + 1.0, -cfg.zipf_exponent) / total;
  for (int c = 0; c < v; ++c) {
    acc += weight[c];
    cdf[c] = acc;
  }
  auto draw_global = [&]() {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), v - 1));
  };

  const bool single_code = cfg.mean_codes_per_visit <= 1.0 + 1e-12;
  const double rate = single_code ? 0.0 : truncated_poisson_rate(cfg.mean_codes_per_visit);

  std::vector<PatientRecord> patients(cfg.n_patients);
  std::vector<char> used(v, 0);
  for (int i = 0; i < cfg.n_patients; ++i) {
    PatientRecord& p = patients[i];
    char id[16];
    std::snprintf(id, sizeof(id), "p%06d", i + 1);
    p.id = id;
    p.sex = static_cast<int>(rng.below(kNumSexes));
    p.region = static_cast<int>(rng.below(kNumRegions));
    p.birth_year = std::clamp(static_cast<int>(std::lround(rng.normal(1955.0, 18.0))), kMinBirthYear, kMaxBirthYear);

    std::vector<int> profile(cfg.n_clusters);
    std::iota(profile.begin(), profile.end(), 0);
    rng.shuffle(profile);
    profile.resize(cfg.clusters_per_patient);

    const int n_visits = kDefaultMinVisits + sample_geometric(rng, cfg.mean_visits - kDefaultMinVisits);
    int day = 0;
    for (int k = 0; k < n_visits; ++k) {
      if (k > 0) day += sample_geometric(rng, cfg.mean_gap_days);
      const auto& cluster = members[profile[rng.below(profile.size())]];
      int n_codes = 1;
      if (!single_code) {
        do {
          n_codes = sample_poisson(rng, rate);
        } while (n_codes < 1);
      }
      n_codes = std::min(n_codes, v);
      Visit visit;
      visit.date_offset_days = day;
      while (static_cast<int>(visit.codes.size()) < n_codes) {
        int code = -1;
        for (int attempt = 0; attempt < 1000 && code < 0; ++attempt) {
          int c = rng.bernoulli(cfg.cluster_affinity) ? cluster[rng.below(cluster.size())] : draw_global();
          if (!used[c]) code = c;
        }
        if (code < 0) {
          // Saturated cluster: take the first unused code.
          code = static_cast<int>(std::find(used.begin(), used.end(), 0) - used.begin());
        }
        used[code] = 1;
        visit.codes.push_back(code);
      }
      for (int c : visit.codes) used[c] = 0;
      std::sort(visit.codes.begin(), visit.codes.end());
      p.visits.push_back(std::move(visit));
    }
  }

  // Vocabulary is the set of codes actually observed.
  std::vector<char> observed(v, 0);
  for (const auto& p : patients)
    for (const auto& visit : p.visits)
      for (int c : visit.codes) observed[c] = 1;
  std::vector<int> remap(v, -1);
  std::vector<std::string> vocab_codes;
  for (int c = 0; c < v; ++c) {
    if (observed[c]) {
      remap[c] = static_cast<int>(vocab_codes.size());
      vocab_codes.push_back(out.codes[c]);
    }
  }
  for (auto& p : patients)
    for (auto& visit : p.visits)
      for (int& c : visit.codes) c = remap[c];
  out.corpus.vocabulary = ConceptVocabulary(std::move(vocab_codes));
  out.corpus.patients = std::move(patients);

  for (const auto& cluster : members) {
    for (std::size_t a = 0; a < cluster.size(); ++a) {
      for (std::size_t b = a + 1; b < cluster.size(); ++b) {
        out.planted.add(out.codes[cluster[a]], out.codes[cluster[b]], "planted", Relation::kComorbid);
      }
    }
  }
  return out;
}

}  // namespace embench
