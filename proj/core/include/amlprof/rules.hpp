#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "amlprof/matrix.hpp"
#include "amlprof/profiling.hpp"

namespace amlprof {

/// Labelled training data for the rule learners. Classes are 0..num_classes-1.
struct Instances {
  AttributeSchema schema;
  Matrix x;
  std::vector<int> y;
  int num_classes = 0;

  std::size_t size() const { return y.size(); }
  Instances subset(std::span<const std::size_t> rows) const;
  /// Throws DataError on shape mismatches or labels outside [0, num_classes).
  void validate() const;

  /// Uses profile labels; num_classes is one more than the largest label unless given.
  static Instances from_table(const ProfileTable& table, int num_classes = 0);
};

struct InductionParams {
  int min_instances = 2;
  bool reduced_error_pruning = false;
  double pruning_confidence = 0.25;
  int folds_for_rep = 3;
  std::uint64_t seed = 1;
  int optimization_passes = 2;
  double mdl_slack_bits = 64.0;

  void validate() const;
  nlohmann::json to_json() const;
  static InductionParams from_json(const nlohmann::json& j);

  friend bool operator==(const InductionParams&, const InductionParams&) = default;
};

enum class Op : std::uint8_t { le, gt, eq };

struct Condition {
  std::size_t attribute = 0;
  Op op = Op::eq;
  double value = 0.0;

  bool matches(std::span<const double> row) const {
    const double v = row[attribute];
    switch (op) {
      case Op::le: return v <= value;
      case Op::gt: return v > value;
      case Op::eq: return v == value;
    }
    return false;
  }

  friend bool operator==(const Condition&, const Condition&) = default;
};

struct Rule {
  std::vector<Condition> conditions;
  int predicted_class = 0;
  /// Training instances for which this rule fires first in the decision list.
  std::size_t coverage = 0;
  double confidence = 0.0;
  std::vector<double> class_counts;

  bool matches(std::span<const double> row) const {
    for (const auto& c : conditions) {
      if (!c.matches(row)) return false;
    }
    return true;
  }

  friend bool operator==(const Rule&, const Rule&) = default;
};

/// Merges numeric bounds on one attribute into at most one `<=` and one `>` test and
/// drops repeated equality tests. The result accepts exactly the same rows.
std::vector<Condition> normalize_conditions(std::span<const Condition> conditions);

/// True when the rule carries contradictory numeric bounds (lower >= upper), two
/// bounds of one direction, or more than one equality test on an attribute.
bool has_conflicts(const Rule& rule);

/// Ordered decision list. The first matching rule decides; unmatched rows get the
/// default class.
struct RuleSet {
  AttributeSchema schema;
  int num_classes = 0;
  std::vector<Rule> rules;
  int default_class = 0;
  std::vector<double> default_counts;
  std::string algorithm;
  InductionParams params;

  std::size_t number_of_rules() const { return rules.size(); }
  /// Index of the first matching rule, or -1.
  int fired(std::span<const double> row) const;
  int predict(std::span<const double> row) const;
  /// Laplace-smoothed class distribution of the deciding rule.
  std::vector<double> scores(std::span<const double> row) const;

  /// Recomputes coverage, class counts and confidence by first match on `data`.
  void recount(const Instances& data);

  /// One line per rule, `attr <= v AND attr2 = level : cluster_c (coverage/errors)`.
  std::string to_text() const;
  nlohmann::json to_kb_json() const;
  static RuleSet from_kb_json(const nlohmann::json& j);

  friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

enum class Algorithm : std::uint8_t { part, j48, jrip };
std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view s);

/// Runs the named learner and returns its rule set.
RuleSet induce(Algorithm algorithm, const Instances& data, const InductionParams& params);

namespace detail {

double entropy(std::span<const double> counts);
std::vector<double> class_counts(const Instances& data, std::span<const std::size_t> rows);
/// Largest count, lowest class on ties.
int majority(std::span<const double> counts);
/// Stratified split of `rows` into `folds` parts; returns (rest, part `fold`).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(const Instances& data,
                                                                                std::span<const std::size_t> rows,
                                                                                int folds, std::mt19937_64& rng);
/// Midpoint of two consecutive distinct values, kept inside [lo, hi).
double split_point(double lo, double hi);
/// Upper-confidence extra errors for a leaf with `n` instances and `e` errors.
double pessimistic_extra_errors(double n, double e, double confidence);
std::string format_value(const AttributeSchema& schema, const Condition& c);

}  // namespace detail

}  // namespace amlprof
