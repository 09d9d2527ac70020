#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "amlprof/clustering.hpp"
#include "amlprof/rules.hpp"

namespace amlprof {

/// Square count matrix indexed by (actual, predicted).
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int num_classes);

  int num_classes() const { return k_; }
  std::int64_t at(int actual, int predicted) const {
    return counts_[static_cast<std::size_t>(actual) * static_cast<std::size_t>(k_) + static_cast<std::size_t>(predicted)];
  }
  void add(int actual, int predicted, std::int64_t count = 1);
  void merge(const ConfusionMatrix& other);

  std::int64_t total() const;
  std::int64_t correct() const;
  double percent_correct() const;
  /// Cohen's kappa. When chance agreement is 1 the result is 1 for perfect agreement, else 0.
  double kappa() const;
  /// Per-class precision and recall; 0 where the denominator is 0.
  std::vector<double> precision() const;
  std::vector<double> recall() const;

  nlohmann::json to_json() const;
  static ConfusionMatrix from_json(const nlohmann::json& j);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int k_ = 0;
  std::vector<std::int64_t> counts_;
};

/// Area under the ROC curve via the Mann-Whitney statistic, ties counting 1/2.
/// Returns NaN when there are no positives or no negatives.
double roc_area(std::span<const double> scores, std::span<const char> positive);

struct Prediction {
  int actual = 0;
  int predicted = 0;
  std::vector<double> scores;
};

struct EvaluationReport {
  ConfusionMatrix matrix;
  double percent_correct = 0.0;
  double kappa = 0.0;
  /// Prevalence-weighted one-vs-rest ROC area over classes where it is defined.
  double weighted_roc_area = 0.0;
  std::size_t number_of_rules = 0;
  std::vector<double> precision;
  std::vector<double> recall;
  /// NaN for classes excluded from the weighted ROC area.
  std::vector<double> roc_area;
  std::vector<std::string> notes;
  std::vector<EvaluationReport> folds;

  nlohmann::json to_json() const;
};

EvaluationReport report_from_predictions(std::span<const Prediction> predictions, int num_classes,
                                         std::size_t number_of_rules);

/// Scores `test` with the decision list. Throws DataError for an empty test set.
EvaluationReport evaluate(const RuleSet& model, const Instances& test);

enum class SplitMode : std::uint8_t { holdout, cross_validation };
std::string_view to_string(SplitMode m);
SplitMode parse_split_mode(std::string_view s);

struct SplitSpec {
  SplitMode mode = SplitMode::holdout;
  double train_fraction = 0.66;
  int folds = 10;
  std::uint64_t seed = 1;
  bool stratified = true;

  void validate() const;
  nlohmann::json to_json() const;
};

/// ceil(fraction * n), treating products within rounding noise of an integer as that integer.
std::size_t holdout_train_size(std::size_t n, double train_fraction);

struct Partition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded shuffle; the first holdout_train_size rows train, the rest test.
Partition holdout_split(std::size_t n, double train_fraction, std::uint64_t seed);

struct FoldAssignment {
  /// Test rows of each fold, ascending.
  std::vector<std::vector<std::size_t>> folds;
  std::vector<std::string> warnings;
};

/// Seeded folds with sizes differing by at most one. When stratified, each class is
/// dealt round-robin so its per-fold counts also differ by at most one.
FoldAssignment cv_folds(std::span<const int> labels, int folds, std::uint64_t seed, bool stratified = true);

using Inducer = std::function<RuleSet(const Instances&, const InductionParams&)>;

/// Trains on the holdout training part and evaluates on the rest.
EvaluationReport holdout_evaluate(const Inducer& inducer, const Instances& data, const SplitSpec& spec,
                                  const InductionParams& params);
/// Pools predictions of every fold into one matrix. number_of_rules is that of a model
/// trained on all of `data`. Folds run on up to `jobs` threads.
EvaluationReport cross_validate(const Inducer& inducer, const Instances& data, const SplitSpec& spec,
                                const InductionParams& params, int jobs = 1);
/// Dispatches on spec.mode.
EvaluationReport run_split(const Inducer& inducer, const Instances& data, const SplitSpec& spec,
                           const InductionParams& params, int jobs = 1);

struct ClassesToClusters {
  /// Reference label assigned to each cluster; -1 for clusters with no members.
  std::vector<int> mapping;
  std::size_t incorrect = 0;
  std::size_t total = 0;
  double incorrect_rate = 0.0;

  nlohmann::json to_json() const;
};

/// Maps every cluster to the majority reference label of its members (lowest label on
/// ties) and counts members whose label differs.
ClassesToClusters classes_to_clusters(std::span<const int> clusters, std::span<const int> labels, int k);
ClassesToClusters classes_to_clusters(const ClusterModel& model, const Matrix& raw, std::span<const int> labels);

}  // namespace amlprof
