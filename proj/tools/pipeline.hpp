#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "amlprof/clustering.hpp"
#include "amlprof/evaluation.hpp"
#include "amlprof/ingest.hpp"
#include "amlprof/rules.hpp"
#include "amlprof/validity.hpp"

namespace amlprof::cli {

/// A downstream stage found no artifact from the stage it depends on.
class MissingArtifact : public Error {
 public:
  MissingArtifact(const std::filesystem::path& path, const std::string& stage)
      : Error("missing " + path.string() + "; run stage '" + stage + "' first"), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct ClusteringConfig {
  /// Number of clusters for `cluster`; 0 takes the Silhouette recommendation of `sweep`.
  int k = 7;
  /// Seeded restarts of the final fit; the lowest SSE wins.
  int restarts = 10;
  std::uint64_t seed = 1;
  DistanceKind distance = DistanceKind::euclidean;
  int max_iter = 500;
  int k_min = 2;
  int k_max = 10;
  int runs = 10;
  std::size_t silhouette_sample = 2000;
};

struct GridConfig {
  std::vector<Algorithm> algorithms{Algorithm::part, Algorithm::j48, Algorithm::jrip};
  std::vector<int> min_instances{2, 100, 1000};
  std::vector<SplitMode> split_modes{SplitMode::holdout, SplitMode::cross_validation};
  std::vector<std::string> attribute_kinds{"numeric", "nominal"};
  /// Fine min-instances sweep from the default up to the smallest cluster; 0 disables it.
  int sweep_steps = 22;
  std::vector<Algorithm> sweep_algorithms{Algorithm::part, Algorithm::j48};
};

struct PipelineConfig {
  /// Inputs default to the `synth` stage outputs under out_dir when empty.
  std::string transactions;
  std::string register_file;
  std::string ground_truth;
  std::filesystem::path out_dir = "amlprof-out";

  int phase = 2;
  /// Defaults to the generator window when the ledger came from `synth`.
  std::optional<DateRange> window;
  IngestConfig ingest;
  /// Rules and eval use the discretized (nominal) profiles when set.
  bool discretize = false;
  double concentration_threshold = 1.0 / 3.0;

  ClusteringConfig clustering;
  Algorithm algorithm = Algorithm::part;
  InductionParams induction;
  SplitSpec split;
  GridConfig grid;

  /// Bundled generator name or a full generator object.
  nlohmann::json synth = "seven";
  std::size_t synth_customers = 0;
  std::optional<std::uint64_t> synth_seed;

  int jobs = 1;

  static PipelineConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// Forces every seed in the configuration to `seed`.
  void override_seed(std::uint64_t seed);
};

struct GlobalFlags {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::filesystem::path> out_dir;
};

/// Reads the config file (or defaults) and applies command-line overrides.
PipelineConfig load_config(const GlobalFlags& flags);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& p);

// ---- artifact layout ---------------------------------------------------------------------------

struct Layout {
  std::filesystem::path root;

  std::filesystem::path stage_dir(const std::string& stage) const { return root / stage; }
  std::filesystem::path manifest(const std::string& stage) const { return root / stage / "manifest.json"; }
  std::filesystem::path profiles_stem(bool nominal) const {
    return root / "profile" / (nominal ? "profiles_nominal" : "profiles");
  }
  std::filesystem::path labels() const { return root / "cluster" / "labels.csv"; }
  std::filesystem::path model() const { return root / "cluster" / "model.json"; }
  std::filesystem::path recommendations() const { return root / "sweep" / "recommendations.json"; }
  std::filesystem::path ruleset_json() const { return root / "rules" / "ruleset.json"; }
};

// ---- stages ---------------------------------------------------------------------------------------
// Each writes its artifacts plus `<stage>/manifest.json` and returns the manifest.

nlohmann::json cmd_synth(const PipelineConfig& cfg);
nlohmann::json cmd_profile(const PipelineConfig& cfg);
nlohmann::json cmd_sweep(const PipelineConfig& cfg);
nlohmann::json cmd_cluster(const PipelineConfig& cfg);
nlohmann::json cmd_rules(const PipelineConfig& cfg);
nlohmann::json cmd_eval(const PipelineConfig& cfg);
nlohmann::json cmd_grid(const PipelineConfig& cfg);
/// Writes the rules stage's knowledge base to `output` (default `<out_dir>/kb/knowledge_base.json`).
nlohmann::json cmd_export_kb(const PipelineConfig& cfg, const std::optional<std::filesystem::path>& output = {});

// ---- grid helpers (exposed for tests) ---------------------------------------------------------------

struct GridCell {
  std::size_t index = 0;
  std::string attribute_kind;
  SplitMode split = SplitMode::holdout;
  Algorithm algorithm = Algorithm::part;
  int min_instances = 2;
  /// Empty for RIPPER, whose pruning is built in.
  std::optional<bool> reduced_error_pruning;
};

/// Configurations for one attribute kind, in output order.
std::vector<GridCell> grid_cells(const GridConfig& grid, const std::string& attribute_kind);

/// `steps` min-instances values spaced geometrically from `from` to `to`, rounded.
/// Strictly increasing whenever the range holds `steps` distinct integers.
std::vector<int> geometric_steps(int from, int to, int steps);

struct GridRow {
  GridCell cell;
  std::optional<EvaluationReport> report;
  std::string error;
};

/// Evaluates every cell on `data`; rows come back in cell order whatever the schedule.
std::vector<GridRow> run_grid(const std::vector<GridCell>& cells, const Instances& data, const PipelineConfig& cfg);

void write_grid_csv(std::ostream& out, const std::vector<GridRow>& rows);

struct SweepRow {
  Algorithm algorithm = Algorithm::part;
  int step = 0;
  int min_instances = 2;
  std::optional<EvaluationReport> report;
  std::string error;
};

std::vector<SweepRow> run_min_instances_sweep(const Instances& data, const PipelineConfig& cfg);
void write_min_instances_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace amlprof::cli
