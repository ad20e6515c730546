#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "embench/cli/config.hpp"
#include "embench/eval/downstream.hpp"
#include "embench/eval/reliability.hpp"
#include "embench/eval/tsne.hpp"
#include "embench/generator.hpp"
#include "embench/trainers/autoencoder.hpp"
#include "embench/trainers/behrt.hpp"
#include "embench/trainers/cbow.hpp"
#include "embench/trainers/cbowa.hpp"
#include "embench/trainers/ncf.hpp"

namespace embench::cli {

inline const std::vector<std::string> kAllMethods = {"AE", "NCF", "CBOW", "CBOWA", "BEHRT"};

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "embench_out";
  int jobs = 1;

  std::optional<std::filesystem::path> corpus_path;  // default: <output_dir>/corpus.jsonl
  int min_visits = kDefaultMinVisits;
  GeneratorConfig generator;

  std::vector<std::string> methods;
  AEConfig ae;
  NCFConfig ncf;
  CBOWConfig cbow;
  CBOWAConfig cbowa;
  BEHRTConfig behrt;

  std::vector<std::string> eval_methods;  // default: methods
  std::optional<std::filesystem::path> pairs_path;  // default: <output_dir>/planted_pairs.csv
  bool random_baseline = true;
  bool neighbours = false;
  bool hit_rate = false;
  bool tsne = false;
  bool downstream = false;
  bool reliability = false;

  std::vector<std::string> probes;  // default: most frequent codes
  std::size_t n_probes = 5;
  std::size_t neighbours_k = 10;
  std::size_t random_dim = 110;
  std::size_t hit_l_min = 3;
  std::size_t hit_l_max = 20;
  TsneConfig tsne_cfg;
  std::string target_code;  // default: most frequent code
  int horizon_days = kDefaultHorizonDays;
  std::size_t downstream_runs = 5;
  ClassifierConfig classifier;
  std::vector<std::string> reliability_methods = {"CBOW"};
  std::size_t reliability_runs = 10;
  std::vector<double> fractions = {0.2, 0.4, 0.6, 0.8, 1.0};
  std::size_t reliability_max_pairs = 0;

  std::filesystem::path corpus_file() const;
  std::filesystem::path pairs_file() const;
  std::filesystem::path embedding_file(const std::string& method) const;
  bool any_evaluation() const { return neighbours || hit_rate || tsne || downstream || reliability; }
};

/// Reads every known key (unknown keys are rejected) and applies trainer seeds.
RunConfig make_run_config(const ConfigMap& map);

/// Trains one method ("AE", "NCF", "CBOW", "CBOWA", "BEHRT") with `seed`.
EmbeddingSet train_method(const std::string& method, const Corpus& corpus, const RunConfig& cfg, std::uint64_t seed,
                          EpochLosses* losses = nullptr);
Trainer make_trainer(const std::string& method, const RunConfig& cfg);

/// Codes ordered by descending occurrence count, ties by code.
std::vector<std::string> codes_by_frequency(const Corpus& corpus);

/// Summary statistics table for a corpus.
void write_corpus_stats(std::ostream& out, const Corpus& corpus, std::size_t planted_pairs);

/// Each command returns the process exit status: 0 when every requested
/// stage succeeded, 1 otherwise. Completed artifacts are kept either way.
int cmd_generate(const RunConfig& cfg, std::ostream& log);
int cmd_train(const RunConfig& cfg, std::ostream& log);
int cmd_evaluate(const RunConfig& cfg, std::ostream& log);
int cmd_report(const RunConfig& cfg, std::ostream& log);

inline constexpr const char* kManifestName = "manifest.txt";
/// Rewrites <dir>/manifest.txt: one `hash size path` line per file, sorted by path.
void write_manifest(const std::filesystem::path& dir);

}  // namespace embench::cli
