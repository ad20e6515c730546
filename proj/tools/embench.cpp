#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "embench/cli/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace embench::cli;
  CLI::App app{"embench: train and benchmark medical concept embeddings"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  int jobs = 0;
  std::string output_dir;
  app.add_option("-c,--config", config_path, "Config file (sectioned key = value)")->check(CLI::ExistingFile);
  app.add_option("-s,--set", overrides, "Override a config key, e.g. --set train.cbow.lr=0.05");
  app.add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("-o,--output-dir", output_dir, "Output directory");

  std::vector<std::pair<CLI::App*, int (*)(const RunConfig&, std::ostream&)>> commands = {
      {app.add_subcommand("generate", "Generate a synthetic corpus and planted pair list"), cmd_generate},
      {app.add_subcommand("train", "Train the configured embedding methods"), cmd_train},
      {app.add_subcommand("evaluate", "Run the configured benchmarks"), cmd_evaluate},
      {app.add_subcommand("report", "Merge benchmark CSVs into summary.csv"), cmd_report},
  };
  for (auto& [sub, _] : commands) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    ConfigMap map = config_path.empty() ? ConfigMap{} : ConfigMap::load(config_path);
    if (const char* env = std::getenv("EMBENCH_SEED"); env && *env) map.set("seed", {env});
    for (const auto& o : overrides) map.set(o);
    if (jobs > 0) map.set("jobs", {std::to_string(jobs)});
    if (!output_dir.empty()) map.set("output_dir", {output_dir});
    const auto cfg = make_run_config(map);
    for (auto& [sub, run] : commands) {
      if (sub->parsed()) return run(cfg, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "embench: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
