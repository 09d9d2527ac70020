#include "amlprof/rules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "amlprof/csv.hpp"
#include "amlprof/part.hpp"
#include "amlprof/ripper.hpp"
#include "amlprof/tree.hpp"

namespace amlprof {

// ---- Instances -------------------------------------------------------------------------

Instances Instances::subset(std::span<const std::size_t> rows) const {
  Instances out;
  out.schema = schema;
  out.num_classes = num_classes;
  out.x = x.select_rows(rows);
  out.y.reserve(rows.size());
  for (std::size_t r : rows) out.y.push_back(y[r]);
  return out;
}

void Instances::validate() const {
  if (x.rows() != y.size()) throw DataError("instances: label count does not match the data");
  if (!y.empty() && x.cols() != schema.size()) throw DataError("instances: data does not match the attribute schema");
  if (num_classes < 1) throw DataError("instances: at least one class is required");
  for (int c : y) {
    if (c < 0 || c >= num_classes) throw DataError("instances: class label out of range");
  }
}

Instances Instances::from_table(const ProfileTable& table, int num_classes) {
  Instances out;
  out.schema = table.schema;
  out.x = table.matrix();
  out.y = table.labels();
  int top = 0;
  for (int c : out.y) {
    if (c < 0) throw DataError("class labels must be non-negative");
    top = std::max(top, c + 1);
  }
  out.num_classes = std::max(num_classes, top);
  return out;
}

// ---- InductionParams -------------------------------------------------------------------

void InductionParams::validate() const {
  if (min_instances < 1) throw ConfigError("min_instances must be >= 1");
  if (!(pruning_confidence > 0.0 && pruning_confidence < 1.0)) throw ConfigError("pruning_confidence must be in (0,1)");
  if (pruning_confidence > 0.5) throw ConfigError("pruning_confidence above 0.5 is not supported");
  if (folds_for_rep < 2) throw ConfigError("folds_for_rep must be >= 2");
  if (optimization_passes < 0) throw ConfigError("optimization_passes must be >= 0");
  if (!(mdl_slack_bits >= 0.0)) throw ConfigError("mdl_slack_bits must be >= 0");
}

nlohmann::json InductionParams::to_json() const {
  return {{"min_instances", min_instances},
          {"reduced_error_pruning", reduced_error_pruning},
          {"pruning_confidence", pruning_confidence},
          {"folds_for_rep", folds_for_rep},
          {"seed", seed},
          {"optimization_passes", optimization_passes},
          {"mdl_slack_bits", mdl_slack_bits}};
}

InductionParams InductionParams::from_json(const nlohmann::json& j) {
  InductionParams p;
  p.min_instances = j.value("min_instances", p.min_instances);
  p.reduced_error_pruning = j.value("reduced_error_pruning", p.reduced_error_pruning);
  p.pruning_confidence = j.value("pruning_confidence", p.pruning_confidence);
  p.folds_for_rep = j.value("folds_for_rep", p.folds_for_rep);
  p.seed = j.value("seed", p.seed);
  p.optimization_passes = j.value("optimization_passes", p.optimization_passes);
  p.mdl_slack_bits = j.value("mdl_slack_bits", p.mdl_slack_bits);
  p.validate();
  return p;
}

// ---- conditions ---------------------------------------------------------------------------

std::vector<Condition> normalize_conditions(std::span<const Condition> conditions) {
  std::vector<Condition> out;
  for (const auto& c : conditions) {
    auto same = std::find_if(out.begin(), out.end(),
                             [&](const Condition& o) { return o.attribute == c.attribute && o.op == c.op; });
    if (same == out.end()) {
      out.push_back(c);
    } else if (c.op == Op::le) {
      same->value = std::min(same->value, c.value);
    } else if (c.op == Op::gt) {
      same->value = std::max(same->value, c.value);
    } else if (c.value != same->value) {
      out.push_back(c);
    }
  }
  return out;
}

bool has_conflicts(const Rule& rule) {
  const auto& cs = rule.conditions;
  for (std::size_t a = 0; a < cs.size(); ++a) {
    for (std::size_t b = a + 1; b < cs.size(); ++b) {
      if (cs[a].attribute != cs[b].attribute) continue;
      if (cs[a].op == cs[b].op) return true;
      if (cs[a].op == Op::eq || cs[b].op == Op::eq) return true;
      const double upper = cs[a].op == Op::le ? cs[a].value : cs[b].value;
      const double lower = cs[a].op == Op::gt ? cs[a].value : cs[b].value;
      if (lower >= upper) return true;
    }
  }
  return false;
}

// ---- RuleSet ---------------------------------------------------------------------------------

int RuleSet::fired(std::span<const double> row) const {
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (rules[i].matches(row)) return static_cast<int>(i);
  }
  return -1;
}

int RuleSet::predict(std::span<const double> row) const {
  const int f = fired(row);
  return f < 0 ? default_class : rules[static_cast<std::size_t>(f)].predicted_class;
}

std::vector<double> RuleSet::scores(std::span<const double> row) const {
  const int f = fired(row);
  const auto& counts = f < 0 ? default_counts : rules[static_cast<std::size_t>(f)].class_counts;
  std::vector<double> out(static_cast<std::size_t>(num_classes), 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < out.size() && c < counts.size(); ++c) total += counts[c];
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = ((c < counts.size() ? counts[c] : 0.0) + 1.0) / (total + static_cast<double>(num_classes));
  }
  return out;
}

void RuleSet::recount(const Instances& data) {
  const auto k = static_cast<std::size_t>(num_classes);
  for (auto& r : rules) r.class_counts.assign(k, 0.0);
  default_counts.assign(k, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int f = fired(data.x.row(i));
    auto& counts = f < 0 ? default_counts : rules[static_cast<std::size_t>(f)].class_counts;
    counts[static_cast<std::size_t>(data.y[i])] += 1.0;
  }
  for (auto& r : rules) {
    const double total = std::accumulate(r.class_counts.begin(), r.class_counts.end(), 0.0);
    r.coverage = static_cast<std::size_t>(total);
    r.confidence = total > 0.0 ? r.class_counts[static_cast<std::size_t>(r.predicted_class)] / total : 0.0;
  }
}

namespace {

std::string op_text(Op op) {
  switch (op) {
    case Op::le: return "<=";
    case Op::gt: return ">";
    case Op::eq: return "=";
  }
  return "?";
}

Op parse_op(const std::string& s) {
  if (s == "<=") return Op::le;
  if (s == ">") return Op::gt;
  if (s == "=") return Op::eq;
  throw DataError("unknown rule operator '" + s + "'");
}

std::string class_name(int c) { return "cluster_" + std::to_string(c); }

void append_stats(std::string& out, std::span<const double> counts, int predicted) {
  double total = 0.0;
  for (double v : counts) total += v;
  const double correct =
      predicted >= 0 && static_cast<std::size_t>(predicted) < counts.size() ? counts[static_cast<std::size_t>(predicted)]
                                                                             : 0.0;
  out += " (" + csv::format_double(total);
  if (total - correct > 0.0) out += "/" + csv::format_double(total - correct);
  out += ")";
}

}  // namespace

std::string detail::format_value(const AttributeSchema& schema, const Condition& c) {
  if (c.op == Op::eq && schema.is_nominal(c.attribute)) {
    return schema[c.attribute].levels.at(static_cast<std::size_t>(c.value));
  }
  return csv::format_double(c.value);
}

std::string RuleSet::to_text() const {
  std::string out;
  for (const auto& r : rules) {
    for (std::size_t i = 0; i < r.conditions.size(); ++i) {
      const auto& c = r.conditions[i];
      if (i) out += " AND ";
      out += schema[c.attribute].name + " " + op_text(c.op) + " " + detail::format_value(schema, c);
    }
    out += " : " + class_name(r.predicted_class);
    append_stats(out, r.class_counts, r.predicted_class);
    out += '\n';
  }
  out += ": " + class_name(default_class);
  append_stats(out, default_counts, default_class);
  out += "\n\nNumber of Rules : " + std::to_string(rules.size()) + "\n";
  return out;
}

nlohmann::json RuleSet::to_kb_json() const {
  nlohmann::json j;
  j["algorithm"] = algorithm;
  j["params"] = params.to_json();
  j["num_classes"] = num_classes;
  j["schema"] = schema.to_json();
  auto& rs = j["rules"] = nlohmann::json::array();
  for (const auto& r : rules) {
    nlohmann::json conds = nlohmann::json::array();
    for (const auto& c : r.conditions) {
      nlohmann::json value = schema.is_nominal(c.attribute) && c.op == Op::eq
                                 ? nlohmann::json(detail::format_value(schema, c))
                                 : nlohmann::json(c.value);
      conds.push_back({{"attr", schema[c.attribute].name}, {"op", op_text(c.op)}, {"value", value}});
    }
    rs.push_back({{"conditions", conds},
                  {"class", r.predicted_class},
                  {"coverage", r.coverage},
                  {"confidence", r.confidence},
                  {"class_counts", r.class_counts}});
  }
  j["default_class"] = default_class;
  j["default_counts"] = default_counts;
  return j;
}

RuleSet RuleSet::from_kb_json(const nlohmann::json& j) {
  RuleSet rs;
  rs.algorithm = j.at("algorithm").get<std::string>();
  rs.params = InductionParams::from_json(j.at("params"));
  rs.num_classes = j.at("num_classes").get<int>();
  rs.schema = AttributeSchema::from_json(j.at("schema"));
  for (const auto& jr : j.at("rules")) {
    Rule r;
    for (const auto& jc : jr.at("conditions")) {
      Condition c;
      const auto name = jc.at("attr").get<std::string>();
      const auto idx = rs.schema.index_of(name);
      if (!idx) throw DataError("rule references unknown attribute " + name);
      c.attribute = *idx;
      c.op = parse_op(jc.at("op").get<std::string>());
      if (jc.at("value").is_string()) {
        const auto label = jc.at("value").get<std::string>();
        const auto& levels = rs.schema[c.attribute].levels;
        auto it = std::find(levels.begin(), levels.end(), label);
        if (it == levels.end()) throw DataError("rule references unknown level " + label);
        c.value = static_cast<double>(it - levels.begin());
      } else {
        c.value = jc.at("value").get<double>();
      }
      r.conditions.push_back(c);
    }
    r.predicted_class = jr.at("class").get<int>();
    r.coverage = jr.at("coverage").get<std::size_t>();
    r.confidence = jr.at("confidence").get<double>();
    r.class_counts = jr.at("class_counts").get<std::vector<double>>();
    rs.rules.push_back(std::move(r));
  }
  rs.default_class = j.at("default_class").get<int>();
  rs.default_counts = j.at("default_counts").get<std::vector<double>>();
  return rs;
}

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::part: return "part";
    case Algorithm::j48: return "j48";
    case Algorithm::jrip: return "jrip";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view s) {
  if (s == "part") return Algorithm::part;
  if (s == "j48") return Algorithm::j48;
  if (s == "jrip") return Algorithm::jrip;
  throw ConfigError("unknown algorithm '" + std::string(s) + "' (expected part, j48 or jrip)");
}

RuleSet induce(Algorithm algorithm, const Instances& data, const InductionParams& params) {
  switch (algorithm) {
    case Algorithm::part: return part_induce(data, params);
    case Algorithm::j48: return j48_induce(data, params);
    case Algorithm::jrip: return ripper_induce(data, params);
  }
  throw ConfigError("unknown algorithm");
}

// ---- shared helpers ----------------------------------------------------------------------

namespace detail {

double entropy(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

std::vector<double> class_counts(const Instances& data, std::span<const std::size_t> rows) {
  std::vector<double> counts(static_cast<std::size_t>(data.num_classes), 0.0);
  for (std::size_t r : rows) counts[static_cast<std::size_t>(data.y[r])] += 1.0;
  return counts;
}

int majority(std::span<const double> counts) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return static_cast<int>(best);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(const Instances& data,
                                                                                std::span<const std::size_t> rows,
                                                                                int folds, std::mt19937_64& rng) {
  std::vector<std::size_t> order(rows.begin(), rows.end());
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data.y[a] < data.y[b]; });
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
  for (std::size_t p = 0; p < order.size(); ++p) {
    (p % static_cast<std::size_t>(folds) == static_cast<std::size_t>(folds - 1) ? out.second : out.first)
        .push_back(order[p]);
  }
  std::sort(out.first.begin(), out.first.end());
  std::sort(out.second.begin(), out.second.end());
  return out;
}

double split_point(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid >= hi ? lo : mid;
}

double pessimistic_extra_errors(double n, double e, double confidence) {
  if (n <= 0.0) return 0.0;
  if (e < 1.0) {
    const double base = n * (1.0 - std::pow(confidence, 1.0 / n));
    if (e == 0.0) return base;
    return base + e * (pessimistic_extra_errors(n, 1.0, confidence) - base);
  }
  if (e + 0.5 >= n) return std::max(n - e, 0.0);
  static const boost::math::normal_distribution<double> standard;
  const double z = boost::math::quantile(standard, 1.0 - confidence);
  const double f = (e + 0.5) / n;
  const double r = (f + z * z / (2.0 * n) + z * std::sqrt(f / n - f * f / n + z * z / (4.0 * n * n))) / (1.0 + z * z / n);
  return r * n - e;
}

}  // namespace detail

}  // namespace amlprof
