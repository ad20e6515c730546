#include "embench/cli/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "embench/eval/hitrate.hpp"

namespace embench::cli {

namespace fs = std::filesystem;

fs::path RunConfig::corpus_file() const { return corpus_path ? *corpus_path : output_dir / "corpus.jsonl"; }

fs::path RunConfig::pairs_file() const { return pairs_path ? *pairs_path : output_dir / "planted_pairs.csv"; }

fs::path RunConfig::embedding_file(const std::string& method) const {
  return output_dir / (method + "." + std::to_string(seed) + ".emb");
}

namespace {

std::vector<std::string> checked_methods(const std::string& key, std::vector<std::string> methods) {
  if (methods.size() == 1 && methods.front() == "all") return kAllMethods;
  for (const auto& m : methods) {
    if (std::find(kAllMethods.begin(), kAllMethods.end(), m) == kAllMethods.end())
      throw Error(key + ": unknown method '" + m + "' (expected AE, NCF, CBOW, CBOWA, BEHRT or all)");
  }
  return methods;
}

}  // namespace

RunConfig make_run_config(const ConfigMap& map) {
  RunConfig c;
  c.seed = map.get_u64("seed", c.seed);
  c.output_dir = map.get_string("output_dir", c.output_dir.string());
  c.jobs = static_cast<int>(map.get_int("jobs", c.jobs));
  if (c.jobs < 1) throw Error("jobs must be at least 1");

  if (map.has("corpus.path")) c.corpus_path = map.get_string("corpus.path", "");
  c.min_visits = static_cast<int>(map.get_int("corpus.min_visits", c.min_visits));
  auto& g = c.generator;
  g.n_patients = static_cast<int>(map.get_int("corpus.patients", g.n_patients));
  g.vocab_size = static_cast<int>(map.get_int("corpus.vocab_size", g.vocab_size));
  g.n_clusters = static_cast<int>(map.get_int("corpus.clusters", g.n_clusters));
  g.cluster_affinity = map.get_double("corpus.affinity", g.cluster_affinity);
  g.mean_visits = map.get_double("corpus.mean_visits", g.mean_visits);
  g.mean_codes_per_visit = map.get_double("corpus.mean_codes_per_visit", g.mean_codes_per_visit);
  g.zipf_exponent = map.get_double("corpus.zipf", g.zipf_exponent);
  g.clusters_per_patient = static_cast<int>(map.get_int("corpus.clusters_per_patient", g.clusters_per_patient));
  g.mean_gap_days = map.get_double("corpus.mean_gap_days", g.mean_gap_days);
  g.seed = c.seed;

  c.methods = checked_methods("train.methods", map.get_strings("train.methods", {}));
  c.ae.hidden = map.get_size("train.ae.hidden", c.ae.hidden);
  c.ae.lr = map.get_double("train.ae.lr", c.ae.lr);
  c.ae.noise_rate = map.get_double("train.ae.noise_rate", c.ae.noise_rate);
  c.ae.epochs = map.get_size("train.ae.epochs", c.ae.epochs);
  c.ncf.layer_sizes = map.get_sizes("train.ncf.layer_sizes", c.ncf.layer_sizes);
  c.ncf.disease_dim = map.get_size("train.ncf.disease_dim", c.ncf.disease_dim);
  c.ncf.negatives_per_positive = map.get_size("train.ncf.negatives", c.ncf.negatives_per_positive);
  c.ncf.lr = map.get_double("train.ncf.lr", c.ncf.lr);
  c.ncf.epochs = map.get_size("train.ncf.epochs", c.ncf.epochs);
  c.cbow.dim = map.get_size("train.cbow.dim", c.cbow.dim);
  c.cbow.window = map.get_size("train.cbow.window", c.cbow.window);
  c.cbow.negatives = map.get_size("train.cbow.negatives", c.cbow.negatives);
  c.cbow.lr = map.get_double("train.cbow.lr", c.cbow.lr);
  c.cbow.min_lr = map.get_double("train.cbow.min_lr", c.cbow.min_lr);
  c.cbow.epochs = map.get_size("train.cbow.epochs", c.cbow.epochs);
  c.cbow.min_count = map.get_size("train.cbow.min_count", c.cbow.min_count);
  c.cbow.subsample_threshold = map.get_double("train.cbow.subsample", c.cbow.subsample_threshold);
  c.cbowa.dim = map.get_size("train.cbowa.dim", c.cbowa.dim);
  c.cbowa.lr = map.get_double("train.cbowa.lr", c.cbowa.lr);
  c.cbowa.negatives = map.get_size("train.cbowa.negatives", c.cbowa.negatives);
  c.cbowa.epochs = map.get_size("train.cbowa.epochs", c.cbowa.epochs);
  c.cbowa.time_buckets = map.get_ints("train.cbowa.time_buckets", c.cbowa.time_buckets);
  c.behrt.d_model = map.get_size("train.behrt.d_model", c.behrt.d_model);
  c.behrt.heads = map.get_size("train.behrt.heads", c.behrt.heads);
  c.behrt.layers = map.get_size("train.behrt.layers", c.behrt.layers);
  c.behrt.ff_dim = map.get_size("train.behrt.ff_dim", c.behrt.ff_dim);
  c.behrt.max_seq = map.get_size("train.behrt.max_seq", c.behrt.max_seq);
  c.behrt.mask_rate = map.get_double("train.behrt.mask_rate", c.behrt.mask_rate);
  c.behrt.lr = map.get_double("train.behrt.lr", c.behrt.lr);
  c.behrt.epochs = map.get_size("train.behrt.epochs", c.behrt.epochs);
  c.behrt.batch_size = map.get_size("train.behrt.batch_size", c.behrt.batch_size);
  c.behrt.clip_norm = map.get_double("train.behrt.clip_norm", c.behrt.clip_norm);
  c.behrt.validate();

  c.eval_methods = checked_methods("evaluate.methods", map.get_strings("evaluate.methods", c.methods));
  if (map.has("evaluate.pairs")) c.pairs_path = map.get_string("evaluate.pairs", "");
  c.random_baseline = map.get_bool("evaluate.random_baseline", c.random_baseline);
  c.random_dim = map.get_size("evaluate.random_dim", c.random_dim);

  c.neighbours = map.get_bool("evaluate.neighbours.enabled", c.neighbours);
  c.probes = map.get_strings("evaluate.neighbours.probes", c.probes);
  c.n_probes = map.get_size("evaluate.neighbours.n_probes", c.n_probes);
  c.neighbours_k = map.get_size("evaluate.neighbours.k", c.neighbours_k);

  c.hit_rate = map.get_bool("evaluate.hit_rate.enabled", c.hit_rate);
  c.hit_l_min = map.get_size("evaluate.hit_rate.l_min", c.hit_l_min);
  c.hit_l_max = map.get_size("evaluate.hit_rate.l_max", c.hit_l_max);
  if (c.hit_l_min < 1 || c.hit_l_min > c.hit_l_max) throw Error("evaluate.hit_rate: need 1 <= l_min <= l_max");

  c.tsne = map.get_bool("evaluate.tsne.enabled", c.tsne);
  c.tsne_cfg.perplexity = map.get_double("evaluate.tsne.perplexity", c.tsne_cfg.perplexity);
  c.tsne_cfg.iterations = map.get_size("evaluate.tsne.iterations", c.tsne_cfg.iterations);
  c.tsne_cfg.seed = c.seed;

  c.downstream = map.get_bool("evaluate.downstream.enabled", c.downstream);
  c.target_code = map.get_string("evaluate.downstream.target", c.target_code);
  c.horizon_days = static_cast<int>(map.get_int("evaluate.downstream.horizon_days", c.horizon_days));
  c.downstream_runs = map.get_size("evaluate.downstream.runs", c.downstream_runs);
  if (c.downstream_runs == 0) throw Error("evaluate.downstream.runs must be at least 1");
  auto& k = c.classifier;
  k.layer_sizes = map.get_sizes("evaluate.downstream.layer_sizes", k.layer_sizes);
  k.fine_tune = map.get_bool("evaluate.downstream.fine_tune", k.fine_tune);
  k.lr = map.get_double("evaluate.downstream.lr", k.lr);
  k.epochs = map.get_size("evaluate.downstream.epochs", k.epochs);
  k.batch_size = map.get_size("evaluate.downstream.batch_size", k.batch_size);
  k.threshold = map.get_double("evaluate.downstream.threshold", k.threshold);
  k.validate();

  c.reliability = map.get_bool("evaluate.reliability.enabled", c.reliability);
  c.reliability_methods =
      checked_methods("evaluate.reliability.methods", map.get_strings("evaluate.reliability.methods", c.reliability_methods));
  c.reliability_runs = map.get_size("evaluate.reliability.runs", c.reliability_runs);
  c.fractions = map.get_doubles("evaluate.reliability.fractions", c.fractions);
  c.reliability_max_pairs = map.get_size("evaluate.reliability.max_pairs", c.reliability_max_pairs);

  map.reject_unknown();
  return c;
}

EmbeddingSet train_method(const std::string& method, const Corpus& corpus, const RunConfig& cfg, std::uint64_t seed,
                          EpochLosses* losses) {
  auto keep = [&](EpochLosses l) {
    if (losses) *losses = std::move(l);
  };
  if (method == "AE") {
    auto c = cfg.ae;
    c.seed = seed;
    auto r = train_ae(build_count_vectors(corpus), c);
    keep(std::move(r.epoch_losses));
    return std::move(r.diseases);
  }
  if (method == "NCF") {
    auto c = cfg.ncf;
    c.seed = seed;
    auto r = train_ncf(build_ncf_records(corpus, c.negatives_per_positive, derive_seed(seed, 0x6e6366)), c);
    keep(std::move(r.epoch_losses));
    return std::move(r.diseases);
  }
  if (method == "CBOW") {
    auto c = cfg.cbow;
    c.seed = seed;
    auto r = train_cbow(flatten_sequences(corpus), c);
    keep(std::move(r.epoch_losses));
    return std::move(r.embeddings);
  }
  if (method == "CBOWA") {
    auto c = cfg.cbowa;
    c.seed = seed;
    auto r = train_cbowa(corpus, c);
    keep(std::move(r.epoch_losses));
    return std::move(r.embeddings);
  }
  if (method == "BEHRT") {
    auto c = cfg.behrt;
    c.seed = seed;
    auto r = train_behrt(build_behrt_sequences(corpus, c.max_seq), c);
    keep(std::move(r.epoch_losses));
    return std::move(r.embeddings);
  }
  throw Error("unknown method '" + method + "'");
}

Trainer make_trainer(const std::string& method, const RunConfig& cfg) {
  return [method, cfg](const Corpus& corpus, std::uint64_t seed) { return train_method(method, corpus, cfg, seed); };
}

std::vector<std::string> codes_by_frequency(const Corpus& corpus) {
  std::vector<std::size_t> counts(corpus.vocabulary.size(), 0);
  for (const auto& p : corpus.patients)
    for (const auto& v : p.visits)
      for (int code : v.codes) ++counts[static_cast<std::size_t>(code)];
  std::vector<std::size_t> order(counts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  std::vector<std::string> out;
  for (auto i : order)
    if (counts[i] > 0) out.push_back(corpus.vocabulary.code(i));
  return out;
}

void write_corpus_stats(std::ostream& out, const Corpus& corpus, std::size_t planted_pairs) {
  std::size_t visits = 0, diagnoses = 0;
  std::array<std::size_t, kNumSexes> sexes{};
  int min_birth = kMaxBirthYear, max_birth = kMinBirthYear;
  for (const auto& p : corpus.patients) {
    visits += p.visits.size();
    for (const auto& v : p.visits) diagnoses += v.codes.size();
    ++sexes[static_cast<std::size_t>(p.sex)];
    min_birth = std::min(min_birth, p.birth_year);
    max_birth = std::max(max_birth, p.birth_year);
  }
  const auto n = static_cast<double>(std::max<std::size_t>(corpus.patients.size(), 1));
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"patients", std::to_string(corpus.patients.size())},
      {"visits", std::to_string(visits)},
      {"diagnoses", std::to_string(diagnoses)},
      {"distinct codes", std::to_string(corpus.vocabulary.size())},
      {"visits per patient", format_double(static_cast<double>(visits) / n)},
      {"codes per visit", format_double(visits ? static_cast<double>(diagnoses) / static_cast<double>(visits) : 0.0)},
      {"sex 0 / sex 1", std::to_string(sexes[0]) + " / " + std::to_string(sexes[1])},
      {"birth years", corpus.patients.empty() ? "-" : std::to_string(min_birth) + "-" + std::to_string(max_birth)},
      {"planted pairs", std::to_string(planted_pairs)},
  };
  out << std::left << std::setw(22) << "statistic" << "value\n";
  for (const auto& [k, v] : rows) out << std::left << std::setw(22) << k << v << '\n';
}

void write_manifest(const fs::path& dir) {
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == kManifestName) continue;
    files.emplace_back(rel, entry.path());
  }
  std::sort(files.begin(), files.end());
  std::ofstream out(dir / kManifestName, std::ios::binary);
  if (!out) throw Error("cannot write manifest in " + dir.string());
  for (const auto& [rel, path] : files) {
    std::ifstream in(path, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    out << std::hex << std::setw(16) << std::setfill('0') << fnv1a(bytes) << std::dec << std::setfill(' ') << "  "
        << bytes.size() << "  " << rel << '\n';
  }
}

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

Corpus load_input_corpus(const RunConfig& cfg) {
  if (!fs::exists(cfg.corpus_file())) throw Error("missing input corpus: " + cfg.corpus_file().string());
  return load_corpus(cfg.corpus_file(), {cfg.min_visits});
}

/// Runs one stage; failures are logged and turn the exit status to 1.
template <typename Fn>
void stage(const std::string& name, int& status, std::ostream& log, Fn&& fn) {
  try {
    fn();
    log << name << ": ok\n";
  } catch (const std::exception& e) {
    log << name << ": FAILED: " << e.what() << '\n';
    status = 1;
  }
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    rows.push_back(std::move(fields));
  }
  return rows;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

int cmd_generate(const RunConfig& cfg, std::ostream& log) {
  cfg.generator.validate();
  fs::create_directories(cfg.output_dir);
  const auto gen = generate_corpus(cfg.generator);
  save_corpus(gen.corpus, cfg.corpus_file());
  save_pairlist(gen.planted, cfg.pairs_file());
  {
    auto out = open_output(cfg.output_dir / "stats.txt");
    write_corpus_stats(out, gen.corpus, gen.planted.size());
  }
  write_corpus_stats(log, gen.corpus, gen.planted.size());
  write_manifest(cfg.output_dir);
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& log) {
  if (cfg.methods.empty()) throw Error("no trainers requested (train.methods is empty)");
  fs::create_directories(cfg.output_dir);
  const auto corpus = load_input_corpus(cfg);
  int status = 0;
  std::ostringstream train_log;
  train_log << "method,seed,epoch,loss\n";
  for (const auto& method : cfg.methods) {
    stage("train " + method, status, log, [&] {
      EpochLosses losses;
      const auto e = train_method(method, corpus, cfg, cfg.seed, &losses);
      save_embeddings(e, cfg.embedding_file(method));
      for (std::size_t i = 0; i < losses.size(); ++i) {
        train_log << method << ',' << cfg.seed << ',' << i + 1 << ',' << format_double(losses[i]) << '\n';
        log << "  " << method << " epoch " << i + 1 << " loss " << format_double(losses[i]) << '\n';
      }
    });
  }
  open_output(cfg.output_dir / "train_log.csv") << train_log.str();
  write_manifest(cfg.output_dir);
  return status;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  if (!cfg.any_evaluation()) throw Error("no evaluations requested (set evaluate.<name>.enabled = true)");
  fs::create_directories(cfg.output_dir);
  const auto corpus = load_input_corpus(cfg);

  std::vector<std::pair<std::string, std::unique_ptr<EmbeddingSet>>> sets;
  if (cfg.neighbours || cfg.hit_rate || cfg.tsne || cfg.downstream) {
    for (const auto& m : cfg.eval_methods) {
      const auto path = cfg.embedding_file(m);
      if (!fs::exists(path)) throw Error("missing input embeddings for " + m + ": " + path.string());
      sets.emplace_back(m, std::make_unique<EmbeddingSet>(load_embeddings(path)));
    }
  }
  auto with_random = [&] {
    std::vector<std::pair<std::string, const EmbeddingSet*>> out;
    for (const auto& [m, e] : sets) out.emplace_back(m, e.get());
    return out;
  }();
  std::unique_ptr<EmbeddingSet> random;
  if (cfg.random_baseline) {
    random = std::make_unique<EmbeddingSet>(random_embeddings(corpus.vocabulary, cfg.random_dim, cfg.seed));
    with_random.emplace_back("RANDOM", random.get());
  }

  int status = 0;
  if (cfg.neighbours) {
    stage("neighbours", status, log, [&] {
      auto probes = cfg.probes;
      if (probes.empty()) {
        probes = codes_by_frequency(corpus);
        probes.resize(std::min(probes.size(), cfg.n_probes));
      }
      std::ostringstream out;
      out << "method,probe,rank,code,cosine\n";
      for (const auto& [m, e] : with_random) {
        for (const auto& probe : probes) {
          if (!e->vocabulary().contains(probe)) throw Error("probe code " + probe + " not in " + m + " embeddings");
          const auto nb = nearest_neighbours(*e, probe, cfg.neighbours_k);
          for (std::size_t r = 0; r < nb.neighbours.size(); ++r) {
            out << m << ',' << probe << ',' << r + 1 << ',' << nb.neighbours[r].code << ','
                << format_double(nb.neighbours[r].cosine) << '\n';
          }
        }
      }
      open_output(cfg.output_dir / "neighbours.csv") << out.str();
    });
  }
  if (cfg.hit_rate) {
    stage("hit_rate", status, log, [&] {
      if (!fs::exists(cfg.pairs_file())) throw Error("missing input pair list: " + cfg.pairs_file().string());
      std::vector<std::string> warnings;
      const auto pairs = load_pairlist(cfg.pairs_file(), &warnings);
      for (const auto& w : warnings) log << "  warning: " << w << '\n';
      std::ostringstream out;
      out << kHitRateHeader << '\n';
      for (const auto& [m, e] : with_random) {
        write_hit_rate_rows(out, m, hit_rate_curves(*e, pairs, cfg.hit_l_min, cfg.hit_l_max, cfg.jobs));
      }
      open_output(cfg.output_dir / "hit_rate.csv") << out.str();
    });
  }
  if (cfg.tsne) {
    for (const auto& [m, e] : with_random) {
      stage("tsne " + m, status, log, [&, m = m, e = e] {
        const auto p = tsne(*e, cfg.tsne_cfg, cfg.jobs);
        save_projection(p, cfg.output_dir / ("tsne." + m + ".csv"));
        log << "  " << m << " kl " << format_double(p.kl_init) << " -> " << format_double(p.kl_final) << '\n';
      });
    }
  }
  if (cfg.downstream) {
    stage("downstream", status, log, [&] {
      const auto target = cfg.target_code.empty() ? codes_by_frequency(corpus).at(0) : cfg.target_code;
      const auto task = build_task(corpus, target, cfg.horizon_days);
      std::vector<std::pair<std::string, const EmbeddingSet*>> inits;
      for (const auto& [m, e] : sets) inits.emplace_back(m, e.get());
      inits.emplace_back("RANDOM", nullptr);
      const auto n = inits.size() * cfg.downstream_runs;
      std::vector<ScoreReport> reports(n);
      parallel_for(n, cfg.jobs, [&](std::size_t i) {
        auto k = cfg.classifier;
        k.seed = cfg.seed + i % cfg.downstream_runs;
        const auto& [name, e] = inits[i / cfg.downstream_runs];
        reports[i] = train_classifier(task, k, {e, nullptr});
        reports[i].disease_emb = name;
      });
      std::ostringstream out;
      out << kScoreHeader << '\n';
      for (const auto& r : reports) write_score_row(out, r);
      open_output(cfg.output_dir / "downstream.csv") << out.str();
    });
  }
  if (cfg.reliability) {
    stage("reliability", status, log, [&] {
      ReliabilityOptions opts;
      opts.n_runs = cfg.reliability_runs;
      opts.base_seed = cfg.seed;
      opts.max_pairs = cfg.reliability_max_pairs;
      opts.jobs = cfg.jobs;
      std::ostringstream summary, detail;
      summary << kReliabilityHeader << '\n';
      detail << kPairDetailHeader << '\n';
      for (const auto& m : cfg.reliability_methods) {
        for (const auto& r : sample_size_sweep(make_trainer(m, cfg), m, corpus, cfg.fractions, opts)) {
          for (const auto& w : r.warnings) log << "  warning: " << m << ": " << w << '\n';
          write_reliability_row(summary, r);
          write_pair_details(detail, r);
        }
      }
      open_output(cfg.output_dir / "reliability.csv") << summary.str();
      open_output(cfg.output_dir / "reliability_pairs.csv") << detail.str();
    });
  }
  write_manifest(cfg.output_dir);
  return status;
}

int cmd_report(const RunConfig& cfg, std::ostream& log) {
  const auto& dir = cfg.output_dir;
  std::ostringstream out;
  out << "section,subject,metric,value\n";
  bool any = false;

  if (fs::exists(dir / "hit_rate.csv")) {
    any = true;
    std::map<std::pair<std::string, std::string>, std::vector<double>> by_curve;
    for (const auto& f : read_csv(dir / "hit_rate.csv")) {
      if (f.size() != 6) throw Error("hit_rate.csv: malformed row");
      const auto key = std::make_pair(f[0], f[1] + "/" + f[2]);
      by_curve[key].push_back(std::stod(f[4]));
      if (f[3] == "10") out << "hit_rate," << f[0] << ',' << f[1] << '/' << f[2] << "@L=10," << f[4] << '\n';
    }
    for (const auto& [key, values] : by_curve) {
      double sum = 0.0;
      for (double v : values) sum += v;
      out << "hit_rate," << key.first << ',' << key.second << "@mean_L,"
          << format_double(sum / static_cast<double>(values.size())) << '\n';
    }
  }
  if (fs::exists(dir / "downstream.csv")) {
    any = true;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_emb;
    for (const auto& f : read_csv(dir / "downstream.csv")) {
      if (f.size() != 9) throw Error("downstream.csv: malformed row");
      by_emb[f[2]].first.push_back(std::stod(f[4]));
      by_emb[f[2]].second.push_back(std::stod(f[5]));
    }
    for (const auto& [emb, scores] : by_emb) {
      out << "downstream," << emb << ",median_ap," << format_double(median(scores.first)) << '\n';
      out << "downstream," << emb << ",median_f1," << format_double(median(scores.second)) << '\n';
      out << "downstream," << emb << ",runs," << scores.first.size() << '\n';
    }
  }
  if (fs::exists(dir / "reliability.csv")) {
    any = true;
    for (const auto& f : read_csv(dir / "reliability.csv")) {
      if (f.size() != 5) throw Error("reliability.csv: malformed row");
      out << "reliability," << f[0] << ",sigma@" << f[1] << ',' << f[4] << '\n';
    }
  }
  std::vector<fs::path> projections;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with("tsne.") && name.ends_with(".csv")) projections.push_back(entry.path());
  }
  std::sort(projections.begin(), projections.end());
  for (const auto& path : projections) {
    any = true;
    const auto name = path.filename().string();
    const auto method = name.substr(5, name.size() - 9);
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.starts_with("#")) continue;
      std::istringstream fields(line.substr(1));
      std::string kv;
      while (fields >> kv) {
        const auto eq = kv.find('=');
        if (eq != std::string::npos && kv.substr(0, eq).starts_with("kl_"))
          out << "tsne," << method << ',' << kv.substr(0, eq) << ',' << kv.substr(eq + 1) << '\n';
      }
    }
  }
  if (!any) throw Error("nothing to report in " + dir.string() + " (run evaluate first)");
  open_output(dir / "summary.csv") << out.str();
  log << out.str();
  write_manifest(dir);
  return 0;
}

}  // namespace embench::cli
