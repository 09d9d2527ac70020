#include "pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "amlprof/csv.hpp"
#include "amlprof/parallel.hpp"
#include "amlprof/profile_io.hpp"
#include "amlprof/profiling.hpp"
#include "amlprof/synthgen.hpp"

namespace amlprof::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- configuration -------------------------------------------------------------------------

namespace {

template <typename T, typename Parse>
std::vector<T> parse_list(const json& j, Parse parse) {
  std::vector<T> out;
  for (const auto& v : j) out.push_back(parse(v.get<std::string>()));
  return out;
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j) {
  reject_unknown(j,
                 {"paths", "phase", "window", "ingest", "discretize", "concentration_threshold", "clustering", "rules",
                  "split", "grid", "synth", "jobs"},
                 "pipeline config");
  PipelineConfig c;
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    reject_unknown(p, {"transactions", "register", "ground_truth", "out_dir"}, "paths");
    c.transactions = p.value("transactions", c.transactions);
    c.register_file = p.value("register", c.register_file);
    c.ground_truth = p.value("ground_truth", c.ground_truth);
    if (p.contains("out_dir")) c.out_dir = p.at("out_dir").get<std::string>();
  }
  c.phase = j.value("phase", c.phase);
  if (c.phase != 1 && c.phase != 2) throw ConfigError("phase must be 1 or 2");
  if (j.contains("window")) {
    c.window = DateRange::parse(j.at("window").at("first").get<std::string>(),
                                j.at("window").at("last").get<std::string>());
  }
  if (j.contains("ingest")) c.ingest = IngestConfig::from_json(j.at("ingest"));
  c.discretize = j.value("discretize", c.discretize);
  c.concentration_threshold = j.value("concentration_threshold", c.concentration_threshold);
  if (!(c.concentration_threshold > 0.0 && c.concentration_threshold <= 1.0)) {
    throw ConfigError("concentration_threshold must be in (0,1]");
  }
  if (j.contains("clustering")) {
    const auto& k = j.at("clustering");
    reject_unknown(k, {"k", "restarts", "seed", "distance", "max_iter", "k_min", "k_max", "runs", "silhouette_sample"},
                   "clustering");
    auto& cl = c.clustering;
    cl.k = k.value("k", cl.k);
    cl.restarts = k.value("restarts", cl.restarts);
    cl.seed = k.value("seed", cl.seed);
    if (k.contains("distance")) cl.distance = parse_distance_kind(k.at("distance").get<std::string>());
    cl.max_iter = k.value("max_iter", cl.max_iter);
    cl.k_min = k.value("k_min", cl.k_min);
    cl.k_max = k.value("k_max", cl.k_max);
    cl.runs = k.value("runs", cl.runs);
    cl.silhouette_sample = k.value("silhouette_sample", cl.silhouette_sample);
    if (cl.k < 0 || cl.restarts < 1 || cl.max_iter < 1) throw ConfigError("invalid clustering settings");
    if (cl.k_min < 2 || cl.k_max < cl.k_min || cl.runs < 2) {
      throw ConfigError("clustering sweep needs 2 <= k_min <= k_max and runs >= 2");
    }
  }
  if (j.contains("rules")) {
    json r = j.at("rules");
    if (r.contains("algorithm")) {
      c.algorithm = parse_algorithm(r.at("algorithm").get<std::string>());
      r.erase("algorithm");
    }
    reject_unknown(r,
                   {"min_instances", "reduced_error_pruning", "pruning_confidence", "folds_for_rep", "seed",
                    "optimization_passes", "mdl_slack_bits"},
                   "rules");
    c.induction = InductionParams::from_json(r);
  }
  if (j.contains("split")) {
    const auto& s = j.at("split");
    reject_unknown(s, {"mode", "train_fraction", "folds", "seed", "stratified"}, "split");
    if (s.contains("mode")) c.split.mode = parse_split_mode(s.at("mode").get<std::string>());
    c.split.train_fraction = s.value("train_fraction", c.split.train_fraction);
    c.split.folds = s.value("folds", c.split.folds);
    c.split.seed = s.value("seed", c.split.seed);
    c.split.stratified = s.value("stratified", c.split.stratified);
    c.split.validate();
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    reject_unknown(g, {"algorithms", "min_instances", "split_modes", "attribute_kinds", "sweep_steps", "sweep_algorithms"},
                   "grid");
    auto& gr = c.grid;
    if (g.contains("algorithms")) gr.algorithms = parse_list<Algorithm>(g.at("algorithms"), parse_algorithm);
    if (g.contains("min_instances")) gr.min_instances = g.at("min_instances").get<std::vector<int>>();
    if (g.contains("split_modes")) gr.split_modes = parse_list<SplitMode>(g.at("split_modes"), parse_split_mode);
    if (g.contains("attribute_kinds")) gr.attribute_kinds = g.at("attribute_kinds").get<std::vector<std::string>>();
    gr.sweep_steps = g.value("sweep_steps", gr.sweep_steps);
    if (g.contains("sweep_algorithms")) {
      gr.sweep_algorithms = parse_list<Algorithm>(g.at("sweep_algorithms"), parse_algorithm);
    }
    for (const auto& kind : gr.attribute_kinds) {
      if (kind != "numeric" && kind != "nominal") throw ConfigError("attribute kind must be numeric or nominal");
    }
    for (int m : gr.min_instances) {
      if (m < 1) throw ConfigError("grid min_instances must be >= 1");
    }
    if (gr.sweep_steps < 0) throw ConfigError("sweep_steps must be >= 0");
  }
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    reject_unknown(s, {"generator", "n_customers", "seed"}, "synth");
    if (s.contains("generator")) c.synth = s.at("generator");
    c.synth_customers = s.value("n_customers", c.synth_customers);
    if (s.contains("seed") && !s.at("seed").is_null()) c.synth_seed = s.at("seed").get<std::uint64_t>();
  }
  c.jobs = j.value("jobs", c.jobs);
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  return c;
}

json PipelineConfig::to_json() const {
  json j;
  j["paths"] = {{"transactions", transactions},
                {"register", register_file},
                {"ground_truth", ground_truth},
                {"out_dir", out_dir.generic_string()}};
  j["phase"] = phase;
  if (window) j["window"] = {{"first", format_date(window->first)}, {"last", format_date(window->last)}};
  j["ingest"] = ingest.to_json();
  j["discretize"] = discretize;
  j["concentration_threshold"] = concentration_threshold;
  j["clustering"] = {{"k", clustering.k},
                     {"restarts", clustering.restarts},
                     {"seed", clustering.seed},
                     {"distance", std::string(to_string(clustering.distance))},
                     {"max_iter", clustering.max_iter},
                     {"k_min", clustering.k_min},
                     {"k_max", clustering.k_max},
                     {"runs", clustering.runs},
                     {"silhouette_sample", clustering.silhouette_sample}};
  j["rules"] = induction.to_json();
  j["rules"]["algorithm"] = std::string(to_string(algorithm));
  j["split"] = split.to_json();
  auto names = [](const auto& list) {
    std::vector<std::string> out;
    for (auto v : list) out.emplace_back(to_string(v));
    return out;
  };
  j["grid"] = {{"algorithms", names(grid.algorithms)},
               {"min_instances", grid.min_instances},
               {"split_modes", names(grid.split_modes)},
               {"attribute_kinds", grid.attribute_kinds},
               {"sweep_steps", grid.sweep_steps},
               {"sweep_algorithms", names(grid.sweep_algorithms)}};
  j["synth"] = {{"generator", synth}, {"n_customers", synth_customers}};
  j["synth"]["seed"] = synth_seed ? json(*synth_seed) : json(nullptr);
  j["jobs"] = jobs;
  return j;
}

void PipelineConfig::override_seed(std::uint64_t seed) {
  clustering.seed = seed;
  induction.seed = seed;
  split.seed = seed;
  synth_seed = seed;
}

PipelineConfig load_config(const GlobalFlags& flags) {
  PipelineConfig cfg;
  if (flags.config) {
    std::ifstream in(*flags.config, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + flags.config->string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config " + flags.config->string() + " is not valid JSON: " + e.what());
    }
    cfg = PipelineConfig::from_json(j);
  }
  if (flags.seed) cfg.override_seed(*flags.seed);
  if (flags.jobs) {
    if (*flags.jobs < 1) throw ConfigError("--jobs must be >= 1");
    cfg.jobs = *flags.jobs;
  }
  if (flags.out_dir) cfg.out_dir = *flags.out_dir;
  return cfg;
}

std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 unavailable");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

// ---- manifests ----------------------------------------------------------------------------------

namespace {

std::string display_path(const fs::path& p, const fs::path& root) {
  const auto rel = p.lexically_normal().lexically_relative(root.lexically_normal());
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

void require(const fs::path& p, const std::string& stage) {
  if (!fs::exists(p)) throw MissingArtifact(p, stage);
}

/// Collects what a stage read and wrote. No timestamps, so reruns are byte-identical.
class Manifest {
 public:
  Manifest(const PipelineConfig& cfg, std::string stage) : layout_{cfg.out_dir}, stage_(std::move(stage)) {
    config_ = cfg.to_json();
    config_["paths"].erase("out_dir");
    config_.erase("jobs");
    fs::create_directories(layout_.stage_dir(stage_));
  }

  void input(const fs::path& p) { inputs_.push_back(entry(p)); }
  void output(const fs::path& p) { outputs_.push_back(entry(p)); }
  void upstream(const std::string& stage) {
    const auto m = layout_.manifest(stage);
    require(m, stage);
    upstream_.push_back({{"stage", stage}, {"manifest", display_path(m, layout_.root)}, {"sha256", sha256_file(m)}});
  }
  void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  void note(const std::string& key, json value) { extra_[key] = std::move(value); }

  json finish() const {
    json j{{"stage", stage_},
           {"tool", "amlprof"},
           {"version", "0.1.0"},
           {"config", config_},
           {"seeds", seeds_},
           {"inputs", inputs_},
           {"outputs", outputs_},
           {"upstream", upstream_}};
    if (!extra_.empty()) j["summary"] = extra_;
    write_file(layout_.manifest(stage_), j.dump(2) + "\n");
    return j;
  }

  const Layout& layout() const { return layout_; }

 private:
  json entry(const fs::path& p) const {
    return {{"path", display_path(p, layout_.root)}, {"sha256", sha256_file(p)}};
  }

  Layout layout_;
  std::string stage_;
  json config_;
  json seeds_ = json::object();
  json inputs_ = json::array();
  json outputs_ = json::array();
  json upstream_ = json::array();
  json extra_ = json::object();
};

fs::path synth_default(const PipelineConfig& cfg, const std::string& value, const char* file) {
  return value.empty() ? cfg.out_dir / "synth" / file : fs::path(value);
}

DateRange resolve_window(const PipelineConfig& cfg) {
  if (cfg.window) return *cfg.window;
  const auto gen = cfg.out_dir / "synth" / "generator.json";
  if (fs::exists(gen)) return GeneratorConfig::from_json(json::parse(read_file(gen))).window;
  throw ConfigError("no analysis window: set \"window\" in the config or run stage 'synth' first");
}

ProfileTable load_stage_profiles(const Layout& layout, bool nominal, Manifest* m) {
  const auto stem = layout.profiles_stem(nominal);
  require(stem.string() + ".csv", "profile");
  require(stem.string() + ".schema.json", "profile");
  if (m) {
    m->input(stem.string() + ".csv");
    m->input(stem.string() + ".schema.json");
  }
  return load_profiles(stem);
}

int model_k(const Layout& layout, Manifest* m) {
  require(layout.model(), "cluster");
  if (m) m->input(layout.model());
  return ClusterModel::from_json(json::parse(read_file(layout.model()))).k;
}

/// Profiles of the configured kind, labelled by the cluster stage.
Instances labelled_instances(const PipelineConfig& cfg, bool nominal, Manifest* m) {
  Layout layout{cfg.out_dir};
  auto table = load_stage_profiles(layout, nominal, m);
  require(layout.labels(), "cluster");
  if (m) m->input(layout.labels());
  std::ifstream in(layout.labels(), std::ios::binary);
  const auto labels = read_labels_csv(in);
  attach_labels(table, labels);
  return Instances::from_table(table, model_k(layout, m));
}

Inducer inducer_for(Algorithm a) {
  return [a](const Instances& d, const InductionParams& p) { return induce(a, d, p); };
}

std::vector<int> truth_for(const ProfileTable& table, const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open ground truth " + path.string());
  const auto rows = read_labels_csv(in);
  std::unordered_map<std::string_view, int> by_id;
  for (const auto& [id, label] : rows) by_id.emplace(id, label);
  std::vector<int> out;
  out.reserve(table.size());
  for (const auto& p : table.profiles) {
    auto it = by_id.find(p.customer_id);
    if (it == by_id.end()) throw DataError("no ground-truth label for customer " + p.customer_id);
    out.push_back(it->second);
  }
  return out;
}

std::string fmt(double v) { return csv::format_double(v); }

}  // namespace

// ---- synth ------------------------------------------------------------------------------------------

json cmd_synth(const PipelineConfig& cfg) {
  Manifest m(cfg, "synth");
  GeneratorConfig gen = cfg.synth.is_string() ? bundled_config(cfg.synth.get<std::string>(), cfg.synth_customers)
                                              : GeneratorConfig::from_json(cfg.synth);
  if (!cfg.synth.is_string() && cfg.synth_customers) gen.n_customers = cfg.synth_customers;
  if (cfg.synth_seed) gen.seed = *cfg.synth_seed;
  gen.validate();
  const auto dir = m.layout().stage_dir("synth");
  const auto files = generate_to_files(gen, dir, cfg.jobs);
  const auto gen_path = dir / "generator.json";
  write_file(gen_path, gen.to_json().dump(2) + "\n");
  m.seed("generator", gen.seed);
  m.output(files.transactions);
  m.output(files.customers);
  m.output(files.ground_truth);
  m.output(gen_path);
  m.note("customers", gen.n_customers);
  m.note("transactions", files.transaction_count);
  return m.finish();
}

// ---- profile ----------------------------------------------------------------------------------------

json cmd_profile(const PipelineConfig& cfg) {
  Manifest m(cfg, "profile");
  const auto& layout = m.layout();
  const auto txn_path = synth_default(cfg, cfg.transactions, "transactions.csv");
  const auto reg_path = synth_default(cfg, cfg.register_file, "customers.csv");
  if (!fs::exists(txn_path)) {
    if (cfg.transactions.empty()) throw MissingArtifact(txn_path, "synth");
    throw DataError("transaction file " + txn_path.string() + " does not exist");
  }
  if (!fs::exists(reg_path)) {
    if (cfg.register_file.empty()) throw MissingArtifact(reg_path, "synth");
    throw DataError("register file " + reg_path.string() + " does not exist");
  }
  if (cfg.transactions.empty() && fs::exists(layout.manifest("synth"))) m.upstream("synth");
  const DateRange window = resolve_window(cfg);
  if (window.month_count() < 1) throw ConfigError("window must cover at least one month");

  std::ifstream txn_in(txn_path, std::ios::binary);
  TransactionReader reader(txn_in, cfg.ingest.columns, cfg.ingest.options);
  ProfileAccumulator acc(cfg.phase == 1 ? ProfilePhase::phase1 : ProfilePhase::phase2, window);
  TransactionRecord r;
  FilterStats filter;
  std::size_t outside = 0;
  while (reader.next(r)) {
    if (!window.contains(day_of(r.timestamp))) {
      ++outside;
      continue;
    }
    if (!cfg.ingest.filter.admits(r)) {
      ++filter.dropped;
      continue;
    }
    ++filter.passed;
    acc.add(r);
  }
  if (filter.passed == 0) throw DataError("no transactions left after filtering and windowing");

  std::ifstream reg_in(reg_path, std::ios::binary);
  IngestOptions reg_opts = cfg.ingest.options;
  reg_opts.window = window;
  IngestSummary reg_summary;
  const auto reg = parse_customers(reg_in, cfg.ingest.register_columns, reg_opts, &reg_summary);
  const ProfileTable table = acc.finish(reg);

  const int phase = cfg.phase;
  save_profiles(layout.profiles_stem(false), table, ProfileSidecar{table.schema, phase, "numeric", std::nullopt});
  const auto dschema = fit_discretization(table, cfg.concentration_threshold);
  const auto nominal = apply_discretization(table, dschema);
  save_profiles(layout.profiles_stem(true), nominal, ProfileSidecar{nominal.schema, phase, "nominal", dschema});

  const auto dir = layout.stage_dir("profile");
  std::ostringstream rejected;
  write_rejected_rows(rejected, reader.summary());
  write_file(dir / "rejected_rows.csv", rejected.str());
  json summary{{"transactions_accepted", reader.summary().accepted},
               {"transactions_rejected", reader.summary().rejected},
               {"transactions_outside_window", outside},
               {"transactions_filtered", filter.dropped},
               {"transactions_profiled", filter.passed},
               {"register_accepted", reg_summary.accepted},
               {"register_rejected", reg_summary.rejected},
               {"customers", table.size()},
               {"discretization_warnings", dschema.warnings()}};
  write_file(dir / "ingest_summary.json", summary.dump(2) + "\n");

  m.input(txn_path);
  m.input(reg_path);
  for (bool nom : {false, true}) {
    m.output(layout.profiles_stem(nom).string() + ".csv");
    m.output(layout.profiles_stem(nom).string() + ".schema.json");
  }
  m.output(dir / "rejected_rows.csv");
  m.output(dir / "ingest_summary.json");
  m.note("customers", table.size());
  m.note("transactions_profiled", filter.passed);
  return m.finish();
}

// ---- sweep ------------------------------------------------------------------------------------------

json cmd_sweep(const PipelineConfig& cfg) {
  Manifest m(cfg, "sweep");
  const auto& layout = m.layout();
  const auto table = load_stage_profiles(layout, false, &m);
  m.upstream("profile");
  SweepOptions opts;
  opts.k_min = cfg.clustering.k_min;
  opts.k_max = cfg.clustering.k_max;
  opts.runs = cfg.clustering.runs;
  opts.base_seed = cfg.clustering.seed;
  opts.distance = cfg.clustering.distance;
  opts.max_iter = cfg.clustering.max_iter;
  opts.silhouette_sample = cfg.clustering.silhouette_sample;
  opts.jobs = cfg.jobs;
  const auto result = k_sweep(table, opts);

  const auto dir = layout.stage_dir("sweep");
  std::ostringstream csv_out;
  write_sweep_csv(csv_out, result);
  write_file(dir / "sweep.csv", csv_out.str());
  write_file(layout.recommendations(), result.recommendations_json().dump(2) + "\n");
  m.seed("base_seed", opts.base_seed);
  m.output(dir / "sweep.csv");
  m.output(layout.recommendations());
  return m.finish();
}

// ---- cluster ----------------------------------------------------------------------------------------

json cmd_cluster(const PipelineConfig& cfg) {
  Manifest m(cfg, "cluster");
  const auto& layout = m.layout();
  auto table = load_stage_profiles(layout, false, &m);
  m.upstream("profile");
  int k = cfg.clustering.k;
  if (k == 0) {
    require(layout.recommendations(), "sweep");
    m.input(layout.recommendations());
    m.upstream("sweep");
    k = json::parse(read_file(layout.recommendations())).at("recommended_k").at("silhouette").get<int>();
  }
  KMeansParams params;
  params.k = k;
  params.distance = cfg.clustering.distance;
  params.seed = cfg.clustering.seed;
  params.max_iter = cfg.clustering.max_iter;
  const Matrix x = table.matrix();
  const auto fit = kmeans_best_of(x, table.schema, params, cfg.clustering.restarts, cfg.jobs);
  for (std::size_t i = 0; i < table.size(); ++i) table.profiles[i].label = fit.labels[i];

  const auto dir = layout.stage_dir("cluster");
  write_file(layout.model(), fit.model.to_json().dump(2) + "\n");
  std::ostringstream labels;
  write_labels_csv(labels, table);
  write_file(layout.labels(), labels.str());
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k));
  for (int c : fit.labels) ++sizes[static_cast<std::size_t>(c)];
  json fit_info{{"k", k},
                {"restarts", cfg.clustering.restarts},
                {"chosen_seed", fit.model.seed},
                {"sse", fit.model.sse},
                {"sse_trace", fit.sse_trace},
                {"cluster_sizes", sizes}};
  write_file(dir / "fit.json", fit_info.dump(2) + "\n");
  m.seed("seed", cfg.clustering.seed);
  m.output(layout.model());
  m.output(layout.labels());
  m.output(dir / "fit.json");

  // Classes-to-clusters against planted labels: fit on the training part, score both parts.
  const auto truth_path = synth_default(cfg, cfg.ground_truth, "ground_truth.csv");
  if (fs::exists(truth_path)) {
    m.input(truth_path);
    const auto truth = truth_for(table, truth_path);
    const auto part = holdout_split(table.size(), cfg.split.train_fraction, cfg.split.seed);
    const Matrix x_train = x.select_rows(part.train);
    const Matrix x_test = x.select_rows(part.test);
    std::vector<int> t_train, t_test;
    for (auto i : part.train) t_train.push_back(truth[i]);
    for (auto i : part.test) t_test.push_back(truth[i]);
    const auto train_fit = kmeans_best_of(x_train, table.schema, params, cfg.clustering.restarts, cfg.jobs);
    json c2c{{"all", classes_to_clusters(fit.labels, truth, k).to_json()},
             {"train", classes_to_clusters(train_fit.labels, t_train, k).to_json()},
             {"train_fraction", cfg.split.train_fraction},
             {"split_seed", cfg.split.seed}};
    c2c["test"] = part.test.empty() ? json(nullptr) : classes_to_clusters(train_fit.model, x_test, t_test).to_json();
    write_file(dir / "classes_to_clusters.json", c2c.dump(2) + "\n");
    m.seed("split_seed", cfg.split.seed);
    m.output(dir / "classes_to_clusters.json");
  }
  m.note("k", k);
  m.note("sse", fit.model.sse);
  return m.finish();
}

// ---- rules and eval ---------------------------------------------------------------------------------

json cmd_rules(const PipelineConfig& cfg) {
  Manifest m(cfg, "rules");
  const auto& layout = m.layout();
  const auto data = labelled_instances(cfg, cfg.discretize, &m);
  m.upstream("profile");
  m.upstream("cluster");
  const RuleSet rs = induce(cfg.algorithm, data, cfg.induction);
  const auto dir = layout.stage_dir("rules");
  write_file(dir / "ruleset.txt", rs.to_text());
  write_file(layout.ruleset_json(), rs.to_kb_json().dump(2) + "\n");
  m.seed("seed", cfg.induction.seed);
  m.output(dir / "ruleset.txt");
  m.output(layout.ruleset_json());
  m.note("number_of_rules", rs.number_of_rules());
  return m.finish();
}

json cmd_eval(const PipelineConfig& cfg) {
  Manifest m(cfg, "eval");
  const auto& layout = m.layout();
  const auto data = labelled_instances(cfg, cfg.discretize, &m);
  m.upstream("profile");
  m.upstream("cluster");
  const auto report = run_split(inducer_for(cfg.algorithm), data, cfg.split, cfg.induction, cfg.jobs);
  const auto dir = layout.stage_dir("eval");
  write_file(dir / "report.json", report.to_json().dump(2) + "\n");
  std::ostringstream csv_out;
  csv_out << "class,precision,recall,roc_area\n";
  for (int c = 0; c < report.matrix.num_classes(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    csv_out << c << ',' << fmt(report.precision[i]) << ',' << fmt(report.recall[i]) << ',' << fmt(report.roc_area[i])
            << '\n';
  }
  write_file(dir / "report.csv", csv_out.str());
  m.seed("split_seed", cfg.split.seed);
  m.seed("induction_seed", cfg.induction.seed);
  m.output(dir / "report.json");
  m.output(dir / "report.csv");
  m.note("percent_correct", report.percent_correct);
  m.note("kappa", report.kappa);
  return m.finish();
}

// ---- grid -------------------------------------------------------------------------------------------

std::vector<GridCell> grid_cells(const GridConfig& grid, const std::string& attribute_kind) {
  std::vector<GridCell> out;
  for (SplitMode split : grid.split_modes) {
    for (Algorithm a : grid.algorithms) {
      for (int mi : grid.min_instances) {
        const std::vector<std::optional<bool>> prunings =
            a == Algorithm::jrip ? std::vector<std::optional<bool>>{std::nullopt}
                                 : std::vector<std::optional<bool>>{true, false};
        for (const auto& rep : prunings) {
          GridCell c;
          c.index = out.size();
          c.attribute_kind = attribute_kind;
          c.split = split;
          c.algorithm = a;
          c.min_instances = mi;
          c.reduced_error_pruning = rep;
          out.push_back(std::move(c));
        }
      }
    }
  }
  return out;
}

std::vector<int> geometric_steps(int from, int to, int steps) {
  if (steps < 1) return {};
  from = std::max(from, 1);
  to = std::max(to, from);
  std::vector<int> out;
  for (int i = 0; i < steps; ++i) {
    const double t = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    out.push_back(static_cast<int>(std::lround(from * std::pow(static_cast<double>(to) / from, t))));
  }
  // Rounding collapses the low end; push repeats apart when the range has room.
  if (to - from + 1 >= steps) {
    for (int i = 1; i < steps; ++i) {
      const auto u = static_cast<std::size_t>(i);
      out[u] = std::max(out[u], out[u - 1] + 1);
    }
    for (int i = steps - 2; i >= 0; --i) {
      const auto u = static_cast<std::size_t>(i);
      out[u] = std::min(out[u], out[u + 1] - 1);
    }
  }
  return out;
}

namespace {

EvaluationReport evaluate_cell(const Instances& data, const PipelineConfig& cfg, Algorithm a, SplitMode mode,
                               int min_instances, bool rep) {
  SplitSpec split = cfg.split;
  split.mode = mode;
  InductionParams params = cfg.induction;
  params.min_instances = min_instances;
  params.reduced_error_pruning = rep;
  return run_split(inducer_for(a), data, split, params, 1);
}

void write_metrics(std::ostream& out, const std::optional<EvaluationReport>& r, const std::string& error) {
  if (r) {
    out << fmt(r->percent_correct) << ',' << fmt(r->kappa) << ',' << fmt(r->weighted_roc_area) << ','
        << r->number_of_rules << ',';
  } else {
    out << ",,,,";
  }
  out << csv::escape(error) << '\n';
}

}  // namespace

std::vector<GridRow> run_grid(const std::vector<GridCell>& cells, const Instances& data, const PipelineConfig& cfg) {
  std::vector<GridRow> rows(cells.size());
  parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
    rows[i].cell = cells[i];
    try {
      rows[i].report = evaluate_cell(data, cfg, cells[i].algorithm, cells[i].split, cells[i].min_instances,
                                     cells[i].reduced_error_pruning.value_or(false));
    } catch (const std::exception& e) {
      rows[i].error = std::string("error: ") + e.what();
    }
  });
  return rows;
}

void write_grid_csv(std::ostream& out, const std::vector<GridRow>& rows) {
  out << "config,attribute_kind,split,algorithm,min_instances,reduced_error_pruning,percent_correct,kappa,"
         "weighted_roc_area,number_of_rules,error\n";
  for (const auto& r : rows) {
    const auto& c = r.cell;
    out << c.index << ',' << c.attribute_kind << ',' << to_string(c.split) << ',' << to_string(c.algorithm) << ','
        << c.min_instances << ',' << (c.reduced_error_pruning ? (*c.reduced_error_pruning ? "yes" : "no") : "built-in")
        << ',';
    write_metrics(out, r.report, r.error);
  }
}

std::vector<SweepRow> run_min_instances_sweep(const Instances& data, const PipelineConfig& cfg) {
  std::vector<double> counts(static_cast<std::size_t>(data.num_classes));
  for (int c : data.y) ++counts[static_cast<std::size_t>(c)];
  double smallest = static_cast<double>(data.size());
  for (double c : counts) {
    if (c > 0) smallest = std::min(smallest, c);
  }
  const auto steps = geometric_steps(2, static_cast<int>(smallest), cfg.grid.sweep_steps);
  std::vector<SweepRow> rows;
  for (Algorithm a : cfg.grid.sweep_algorithms) {
    for (std::size_t s = 0; s < steps.size(); ++s) {
      SweepRow r;
      r.algorithm = a;
      r.step = static_cast<int>(s);
      r.min_instances = steps[s];
      rows.push_back(r);
    }
  }
  parallel_for(rows.size(), cfg.jobs, [&](std::size_t i) {
    try {
      rows[i].report =
          evaluate_cell(data, cfg, rows[i].algorithm, cfg.split.mode, rows[i].min_instances, cfg.induction.reduced_error_pruning);
    } catch (const std::exception& e) {
      rows[i].error = std::string("error: ") + e.what();
    }
  });
  return rows;
}

void write_min_instances_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "algorithm,step,min_instances,percent_correct,kappa,weighted_roc_area,number_of_rules,error\n";
  for (const auto& r : rows) {
    out << to_string(r.algorithm) << ',' << r.step << ',' << r.min_instances << ',';
    write_metrics(out, r.report, r.error);
  }
}

json cmd_grid(const PipelineConfig& cfg) {
  if (cfg.grid.algorithms.empty() || cfg.grid.min_instances.empty() || cfg.grid.split_modes.empty() ||
      cfg.grid.attribute_kinds.empty()) {
    throw ConfigError("grid is empty; list algorithms, min_instances, split_modes and attribute_kinds");
  }
  Manifest m(cfg, "grid");
  const auto& layout = m.layout();
  const auto dir = layout.stage_dir("grid");
  json counts = json::object();
  for (const auto& kind : cfg.grid.attribute_kinds) {
    const auto data = labelled_instances(cfg, kind == "nominal", &m);
    const auto rows = run_grid(grid_cells(cfg.grid, kind), data, cfg);
    std::ostringstream out;
    write_grid_csv(out, rows);
    write_file(dir / ("grid_" + kind + ".csv"), out.str());
    m.output(dir / ("grid_" + kind + ".csv"));
    counts[kind] = rows.size();
    if (cfg.grid.sweep_steps > 0 && !cfg.grid.sweep_algorithms.empty()) {
      const auto sweep = run_min_instances_sweep(data, cfg);
      std::ostringstream sout;
      write_min_instances_csv(sout, sweep);
      write_file(dir / ("min_instances_" + kind + ".csv"), sout.str());
      m.output(dir / ("min_instances_" + kind + ".csv"));
    }
  }
  m.upstream("profile");
  m.upstream("cluster");
  m.seed("split_seed", cfg.split.seed);
  m.seed("induction_seed", cfg.induction.seed);
  m.note("rows", counts);
  return m.finish();
}

// ---- export-kb --------------------------------------------------------------------------------------

json cmd_export_kb(const PipelineConfig& cfg, const std::optional<fs::path>& output) {
  Manifest m(cfg, "kb");
  const auto& layout = m.layout();
  require(layout.ruleset_json(), "rules");
  m.input(layout.ruleset_json());
  m.upstream("rules");
  const RuleSet rs = RuleSet::from_kb_json(json::parse(read_file(layout.ruleset_json())));
  const fs::path target = output ? *output : layout.stage_dir("kb") / "knowledge_base.json";
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  write_file(target, rs.to_kb_json().dump(2) + "\n");
  m.output(target);
  m.note("number_of_rules", rs.number_of_rules());
  return m.finish();
}

}  // namespace amlprof::cli
