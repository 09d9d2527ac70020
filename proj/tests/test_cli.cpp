#include <fstream>
#include <set>
#include <sstream>

#include "amlprof/profile_io.hpp"
#include "amlprof/synthgen.hpp"
#include "doctest.h"
#include "pipeline.hpp"
#include "support.hpp"

using namespace amlprof;
using namespace amlprof::cli;
using nlohmann::json;

TEST_CASE("config parsing rejects unknown keys and bad values") {
  CHECK_THROWS_AS(PipelineConfig::from_json(json{{"nonsense", 1}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(json{{"clustering", {{"kk", 3}}}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(json{{"phase", 3}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(json{{"grid", {{"attribute_kinds", {"binary"}}}}}), ConfigError);
  const auto c = PipelineConfig::from_json(json::parse(R"({
    "paths": {"transactions": "t.csv", "register": "r.csv"},
    "window": {"first": "2014-01-01", "last": "2014-06-30"},
    "rules": {"algorithm": "jrip", "min_instances": 100},
    "split": {"mode": "cv", "folds": 5},
    "clustering": {"k": 0, "distance": "manhattan"}})"));
  CHECK(c.algorithm == Algorithm::jrip);
  CHECK(c.induction.min_instances == 100);
  CHECK(c.split.mode == SplitMode::cross_validation);
  CHECK(c.clustering.distance == DistanceKind::manhattan);
  CHECK(c.window->month_count() == 6);
  CHECK(PipelineConfig::from_json(c.to_json()).to_json() == c.to_json());
}

TEST_CASE("a global seed reaches every stage") {
  PipelineConfig c;
  c.override_seed(42);
  CHECK(c.clustering.seed == 42);
  CHECK(c.induction.seed == 42);
  CHECK(c.split.seed == 42);
  CHECK(*c.synth_seed == 42);
}

TEST_CASE("the default grid has fifteen cells per split mode") {
  const auto cells = grid_cells(GridConfig{}, "nominal");
  CHECK(cells.size() == 30);
  std::set<std::tuple<int, int, int, int>> distinct;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CHECK(cells[i].index == i);
    CHECK(cells[i].reduced_error_pruning.has_value() == (cells[i].algorithm != Algorithm::jrip));
    distinct.insert({static_cast<int>(cells[i].split), static_cast<int>(cells[i].algorithm), cells[i].min_instances,
                     cells[i].reduced_error_pruning.value_or(false) ? 1 : 0});
  }
  CHECK(distinct.size() == 30);
}

TEST_CASE("geometric steps span the range") {
  const auto s = geometric_steps(2, 40000, 22);
  REQUIRE(s.size() == 22);
  CHECK(s.front() == 2);
  CHECK(s.back() == 40000);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] > s[i - 1]);
  const auto tight = geometric_steps(2, 10, 22);
  CHECK(tight.front() == 2);
  CHECK(tight.back() == 10);
  for (std::size_t i = 1; i < tight.size(); ++i) CHECK(tight[i] >= tight[i - 1]);
  CHECK(geometric_steps(2, 10, 0).empty());
}

TEST_CASE("downstream stages name the missing upstream stage") {
  PipelineConfig c;
  c.out_dir = testing::scratch_dir("cli-missing");
  try {
    cmd_rules(c);
    FAIL("expected MissingArtifact");
  } catch (const MissingArtifact& e) {
    CHECK(e.stage() == "profile");
    CHECK(std::string(e.what()).find("run stage 'profile' first") != std::string::npos);
  }
  CHECK_THROWS_AS(cmd_export_kb(c), MissingArtifact);
  c.grid.algorithms.clear();
  CHECK_THROWS_AS(cmd_grid(c), ConfigError);
}

TEST_CASE("the full pipeline links every artifact into a manifest chain") {
  PipelineConfig c;
  c.out_dir = testing::scratch_dir("cli-chain");
  c.synth = "two";
  c.synth_customers = 120;
  c.clustering.k = 0;
  c.clustering.k_max = 4;
  c.clustering.runs = 3;
  c.ingest.filter.excluded_txn_type_codes = {99};
  c.grid.sweep_steps = 4;
  c.grid.min_instances = {2, 10};
  c.grid.split_modes = {SplitMode::holdout};
  c.grid.attribute_kinds = {"numeric"};

  std::vector<json> manifests{cmd_synth(c), cmd_profile(c), cmd_sweep(c), cmd_cluster(c),
                              cmd_rules(c), cmd_eval(c),    cmd_grid(c),  cmd_export_kb(c)};
  const Layout layout{c.out_dir};
  for (const auto& m : manifests) {
    CHECK(m.contains("seeds"));
    for (const auto& o : m.at("outputs")) {
      CHECK(sha256_file(c.out_dir / o.at("path").get<std::string>()) == o.at("sha256"));
    }
    for (const auto& u : m.at("upstream")) {
      CHECK(sha256_file(c.out_dir / u.at("manifest").get<std::string>()) == u.at("sha256"));
    }
  }
  CHECK(manifests[0].at("seeds").at("generator") == bundled_config("two").seed);
  CHECK(manifests[3].at("summary").at("k") == 2);

  std::ifstream grid(c.out_dir / "grid" / "grid_numeric.csv");
  std::string line;
  std::size_t rows = 0;
  std::getline(grid, line);
  while (std::getline(grid, line)) ++rows;
  CHECK(rows == 10);

  const auto kb = json::parse(read_file(c.out_dir / "kb" / "knowledge_base.json"));
  CHECK(kb == json::parse(read_file(layout.ruleset_json())));
}
