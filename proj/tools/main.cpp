#include <CLI11.hpp>

#include <iostream>

#include "amlprof/profile_io.hpp"
#include "pipeline.hpp"

namespace {

using namespace amlprof;
using namespace amlprof::cli;

constexpr int exit_config = 2;
constexpr int exit_missing_upstream = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"amlprof: customer transaction profiling, clustering and rule induction"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  auto* config_opt = app.add_option("--config", config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Override every seed in the config");
  auto* jobs_opt = app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out-dir", out_dir, "Artifact root directory");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic ledger with planted customer groups");
  std::string generator;
  std::size_t customers = 0;
  synth->add_option("--generator", generator, "Bundled generator name (seven, six, two) or a JSON file");
  synth->add_option("--customers", customers, "Override the number of customers");

  app.add_subcommand("profile", "Stream the ledger into per-customer profiles");
  app.add_subcommand("sweep", "Run k-means over a range of k and score validity indices");
  auto* cluster = app.add_subcommand("cluster", "Fit the final k-means model and label customers");
  int k = -1;
  cluster->add_option("-k,--k", k, "Number of clusters; 0 takes the sweep's Silhouette pick")
      ->check(CLI::NonNegativeNumber);

  auto* rules = app.add_subcommand("rules", "Induce a rule set from the labelled profiles");
  auto* eval = app.add_subcommand("eval", "Evaluate the configured learner with holdout or cross-validation");
  std::string algorithm, split_mode;
  int min_instances = 0;
  for (auto* sc : {rules, eval}) {
    sc->add_option("--algorithm", algorithm, "part, j48 or jrip");
    sc->add_option("--min-instances", min_instances, "Minimum instances per rule or leaf")
        ->check(CLI::PositiveNumber);
    sc->add_flag("--nominal", "Use the discretized profiles");
  }
  eval->add_option("--split", split_mode, "holdout or cv");

  app.add_subcommand("grid", "Run the learner grid and the min-instances sweep");
  auto* export_kb = app.add_subcommand("export-kb", "Write the rule knowledge base JSON");
  std::string kb_output;
  export_kb->add_option("-o,--output", kb_output, "Output path");

  CLI11_PARSE(app, argc, argv);

  if (*config_opt) flags.config = config_path;
  if (*seed_opt) flags.seed = seed;
  if (*jobs_opt) flags.jobs = jobs;
  if (*out_opt) flags.out_dir = out_dir;

  try {
    PipelineConfig cfg = load_config(flags);
    if (!generator.empty()) {
      if (std::filesystem::exists(generator)) {
        cfg.synth = nlohmann::json::parse(read_file(generator));
      } else {
        cfg.synth = generator;
      }
    }
    if (customers) cfg.synth_customers = customers;
    if (k >= 0) cfg.clustering.k = k;
    if (!algorithm.empty()) cfg.algorithm = parse_algorithm(algorithm);
    if (min_instances > 0) cfg.induction.min_instances = min_instances;
    if (!split_mode.empty()) cfg.split.mode = parse_split_mode(split_mode);
    for (auto* sc : {rules, eval}) {
      if (sc->parsed() && sc->count("--nominal")) cfg.discretize = true;
    }

    nlohmann::json manifest;
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "synth") manifest = cmd_synth(cfg);
    else if (name == "profile") manifest = cmd_profile(cfg);
    else if (name == "sweep") manifest = cmd_sweep(cfg);
    else if (name == "cluster") manifest = cmd_cluster(cfg);
    else if (name == "rules") manifest = cmd_rules(cfg);
    else if (name == "eval") manifest = cmd_eval(cfg);
    else if (name == "grid") manifest = cmd_grid(cfg);
    else if (name == "export-kb") manifest = cmd_export_kb(cfg, kb_output.empty() ? std::nullopt : std::optional<std::filesystem::path>(kb_output));

    std::cout << name << ": ok";
    if (manifest.contains("summary")) std::cout << ' ' << manifest["summary"].dump();
    std::cout << '\n';
    return 0;
  } catch (const MissingArtifact& e) {
    std::cerr << "amlprof: " << e.what() << '\n';
    return exit_missing_upstream;
  } catch (const ConfigError& e) {
    std::cerr << "amlprof: config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "amlprof: " << e.what() << '\n';
    return 1;
  }
}
