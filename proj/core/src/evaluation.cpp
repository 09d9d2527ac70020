#include "amlprof/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "amlprof/parallel.hpp"

namespace amlprof {

// ---- ConfusionMatrix ---------------------------------------------------------------------

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : k_(num_classes), counts_(static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_classes), 0) {
  if (num_classes < 1) throw DataError("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(int actual, int predicted, std::int64_t count) {
  if (actual < 0 || actual >= k_ || predicted < 0 || predicted >= k_) throw DataError("class index out of range");
  counts_[static_cast<std::size_t>(actual) * static_cast<std::size_t>(k_) + static_cast<std::size_t>(predicted)] +=
      count;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw DataError("cannot merge confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::int64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0}); }

std::int64_t ConfusionMatrix::correct() const {
  std::int64_t s = 0;
  for (int c = 0; c < k_; ++c) s += at(c, c);
  return s;
}

double ConfusionMatrix::percent_correct() const {
  const auto t = total();
  return t > 0 ? 100.0 * static_cast<double>(correct()) / static_cast<double>(t) : 0.0;
}

double ConfusionMatrix::kappa() const {
  // (t*correct - sum row*col) / (t^2 - sum row*col), in exact integers until the final division.
  const int128 t = total();
  if (t <= 0) return 0.0;
  int128 chance = 0;
  for (int c = 0; c < k_; ++c) {
    int128 row = 0, col = 0;
    for (int o = 0; o < k_; ++o) {
      row += at(c, o);
      col += at(o, c);
    }
    chance += row * col;
  }
  const int128 den = t * t - chance;
  if (den == 0) return correct() == total() ? 1.0 : 0.0;
  return static_cast<double>(t * correct() - chance) / static_cast<double>(den);
}

std::vector<double> ConfusionMatrix::precision() const {
  std::vector<double> out(static_cast<std::size_t>(k_), 0.0);
  for (int c = 0; c < k_; ++c) {
    double col = 0.0;
    for (int o = 0; o < k_; ++o) col += static_cast<double>(at(o, c));
    if (col > 0.0) out[static_cast<std::size_t>(c)] = static_cast<double>(at(c, c)) / col;
  }
  return out;
}

std::vector<double> ConfusionMatrix::recall() const {
  std::vector<double> out(static_cast<std::size_t>(k_), 0.0);
  for (int c = 0; c < k_; ++c) {
    double row = 0.0;
    for (int o = 0; o < k_; ++o) row += static_cast<double>(at(c, o));
    if (row > 0.0) out[static_cast<std::size_t>(c)] = static_cast<double>(at(c, c)) / row;
  }
  return out;
}

nlohmann::json ConfusionMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (int a = 0; a < k_; ++a) {
    std::vector<std::int64_t> r;
    for (int p = 0; p < k_; ++p) r.push_back(at(a, p));
    rows.push_back(r);
  }
  return {{"num_classes", k_}, {"counts", rows}};
}

ConfusionMatrix ConfusionMatrix::from_json(const nlohmann::json& j) {
  ConfusionMatrix m(j.at("num_classes").get<int>());
  const auto& rows = j.at("counts");
  if (rows.size() != static_cast<std::size_t>(m.k_)) throw DataError("confusion matrix JSON has the wrong shape");
  for (int a = 0; a < m.k_; ++a) {
    const auto r = rows.at(static_cast<std::size_t>(a)).get<std::vector<std::int64_t>>();
    if (r.size() != static_cast<std::size_t>(m.k_)) throw DataError("confusion matrix JSON has the wrong shape");
    for (int p = 0; p < m.k_; ++p) m.add(a, p, r[static_cast<std::size_t>(p)]);
  }
  return m;
}

// ---- ROC ---------------------------------------------------------------------------------------

double roc_area(std::span<const double> scores, std::span<const char> positive) {
  if (scores.size() != positive.size()) throw DataError("roc_area: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t q = i; q < j; ++q) {
      if (positive[order[q]]) {
        pos += 1.0;
        rank_sum += avg_rank;
      }
    }
    i = j;
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

// ---- reports -----------------------------------------------------------------------------------

EvaluationReport report_from_predictions(std::span<const Prediction> predictions, int num_classes,
                                         std::size_t number_of_rules) {
  if (predictions.empty()) throw DataError("cannot evaluate on an empty test set");
  EvaluationReport rep;
  rep.matrix = ConfusionMatrix(num_classes);
  for (const auto& p : predictions) rep.matrix.add(p.actual, p.predicted);
  rep.percent_correct = rep.matrix.percent_correct();
  rep.kappa = rep.matrix.kappa();
  rep.precision = rep.matrix.precision();
  rep.recall = rep.matrix.recall();
  rep.number_of_rules = number_of_rules;

  const auto k = static_cast<std::size_t>(num_classes);
  rep.roc_area.assign(k, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> scores(predictions.size());
  std::vector<char> positive(predictions.size());
  double weighted = 0.0, weight = 0.0;
  std::vector<int> excluded;
  for (std::size_t c = 0; c < k; ++c) {
    double prevalence = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      scores[i] = c < predictions[i].scores.size() ? predictions[i].scores[c] : 0.0;
      positive[i] = predictions[i].actual == static_cast<int>(c) ? 1 : 0;
      prevalence += positive[i];
    }
    const double auc = roc_area(scores, positive);
    rep.roc_area[c] = auc;
    if (std::isnan(auc)) {
      excluded.push_back(static_cast<int>(c));
      continue;
    }
    weighted += prevalence * auc;
    weight += prevalence;
  }
  rep.weighted_roc_area = weight > 0.0 ? weighted / weight : std::numeric_limits<double>::quiet_NaN();
  if (!excluded.empty()) {
    std::string note = "ROC area undefined for classes";
    for (int c : excluded) note += " " + std::to_string(c);
    rep.notes.push_back(note + "; excluded from the weighted average");
  }
  return rep;
}

namespace {

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::vector<Prediction> predict_all(const RuleSet& model, const Instances& test) {
  std::vector<Prediction> out;
  out.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto row = test.x.row(i);
    out.push_back({test.y[i], model.predict(row), model.scores(row)});
  }
  return out;
}

}  // namespace

nlohmann::json EvaluationReport::to_json() const {
  nlohmann::json j;
  j["percent_correct"] = percent_correct;
  j["kappa"] = kappa;
  j["weighted_roc_area"] = number_or_null(weighted_roc_area);
  j["number_of_rules"] = number_of_rules;
  j["precision"] = precision;
  j["recall"] = recall;
  auto& roc = j["roc_area"] = nlohmann::json::array();
  for (double v : roc_area) roc.push_back(number_or_null(v));
  j["confusion_matrix"] = matrix.to_json();
  j["notes"] = notes;
  if (!folds.empty()) {
    auto& f = j["folds"] = nlohmann::json::array();
    for (const auto& r : folds) {
      f.push_back({{"percent_correct", r.percent_correct},
                   {"kappa", r.kappa},
                   {"weighted_roc_area", number_or_null(r.weighted_roc_area)},
                   {"number_of_rules", r.number_of_rules},
                   {"confusion_matrix", r.matrix.to_json()}});
    }
  }
  return j;
}

EvaluationReport evaluate(const RuleSet& model, const Instances& test) {
  if (test.size() == 0) throw DataError("cannot evaluate on an empty test set");
  if (!(test.schema == model.schema)) throw DataError("test data does not match the rule set schema");
  const int k = std::max(model.num_classes, test.num_classes);
  return report_from_predictions(predict_all(model, test), k, model.number_of_rules());
}

// ---- splitting ---------------------------------------------------------------------------------

std::string_view to_string(SplitMode m) { return m == SplitMode::holdout ? "holdout" : "cv"; }

SplitMode parse_split_mode(std::string_view s) {
  if (s == "holdout") return SplitMode::holdout;
  if (s == "cv" || s == "cross_validation") return SplitMode::cross_validation;
  throw ConfigError("unknown split mode '" + std::string(s) + "' (expected holdout or cv)");
}

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must be in (0,1)");
  if (folds < 2) throw ConfigError("folds must be >= 2");
}

nlohmann::json SplitSpec::to_json() const {
  return {{"mode", std::string(to_string(mode))},
          {"train_fraction", train_fraction},
          {"folds", folds},
          {"seed", seed},
          {"stratified", stratified}};
}

std::size_t holdout_train_size(std::size_t n, double train_fraction) {
  const double x = train_fraction * static_cast<double>(n);
  const double nearest = std::round(x);
  const double size = std::abs(x - nearest) <= 1e-9 * std::max(1.0, x) ? nearest : std::ceil(x);
  return static_cast<std::size_t>(size);
}

Partition holdout_split(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (n < 2) throw DataError("holdout split needs at least 2 instances");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must be in (0,1)");
  const std::size_t train = std::min(std::max<std::size_t>(holdout_train_size(n, train_fraction), 1), n - 1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  Partition p;
  p.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train));
  p.test.assign(order.begin() + static_cast<std::ptrdiff_t>(train), order.end());
  std::sort(p.train.begin(), p.train.end());
  std::sort(p.test.begin(), p.test.end());
  return p;
}

FoldAssignment cv_folds(std::span<const int> labels, int folds, std::uint64_t seed, bool stratified) {
  const std::size_t n = labels.size();
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (n < static_cast<std::size_t>(folds)) throw DataError("fewer instances than folds");
  FoldAssignment out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  if (stratified) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
    std::vector<int> small;
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && labels[order[j]] == labels[order[i]]) ++j;
      if (j - i < static_cast<std::size_t>(folds)) small.push_back(labels[order[i]]);
      i = j;
    }
    if (!small.empty()) {
      std::string w = "classes with fewer instances than folds:";
      for (int c : small) w += " " + std::to_string(c);
      out.warnings.push_back(w + "; some folds miss them");
    }
  }
  out.folds.resize(static_cast<std::size_t>(folds));
  for (std::size_t p = 0; p < n; ++p) out.folds[p % static_cast<std::size_t>(folds)].push_back(order[p]);
  for (auto& f : out.folds) std::sort(f.begin(), f.end());
  return out;
}

// ---- harnesses ---------------------------------------------------------------------------------

EvaluationReport holdout_evaluate(const Inducer& inducer, const Instances& data, const SplitSpec& spec,
                                  const InductionParams& params) {
  spec.validate();
  const auto part = holdout_split(data.size(), spec.train_fraction, spec.seed);
  const RuleSet model = inducer(data.subset(part.train), params);
  return evaluate(model, data.subset(part.test));
}

EvaluationReport cross_validate(const Inducer& inducer, const Instances& data, const SplitSpec& spec,
                                const InductionParams& params, int jobs) {
  spec.validate();
  const auto assignment = cv_folds(data.y, spec.folds, spec.seed, spec.stratified);
  const auto folds = assignment.folds.size();
  std::vector<std::vector<Prediction>> preds(folds);
  std::vector<EvaluationReport> fold_reports(folds);
  RuleSet full;
  // Slot `folds` trains the model on all data for the rule count.
  parallel_for(folds + 1, jobs, [&](std::size_t f) {
    if (f == folds) {
      full = inducer(data, params);
      return;
    }
    std::vector<char> in_test(data.size(), 0);
    for (std::size_t r : assignment.folds[f]) in_test[r] = 1;
    std::vector<std::size_t> train;
    for (std::size_t r = 0; r < data.size(); ++r) {
      if (!in_test[r]) train.push_back(r);
    }
    const RuleSet model = inducer(data.subset(train), params);
    preds[f] = predict_all(model, data.subset(assignment.folds[f]));
    fold_reports[f] = report_from_predictions(preds[f], data.num_classes, model.number_of_rules());
  });
  std::vector<Prediction> pooled;
  for (auto& p : preds) pooled.insert(pooled.end(), p.begin(), p.end());
  EvaluationReport rep = report_from_predictions(pooled, data.num_classes, full.number_of_rules());
  rep.notes.insert(rep.notes.begin(), assignment.warnings.begin(), assignment.warnings.end());
  rep.folds = std::move(fold_reports);
  return rep;
}

EvaluationReport run_split(const Inducer& inducer, const Instances& data, const SplitSpec& spec,
                           const InductionParams& params, int jobs) {
  return spec.mode == SplitMode::holdout ? holdout_evaluate(inducer, data, spec, params)
                                         : cross_validate(inducer, data, spec, params, jobs);
}

// ---- classes to clusters --------------------------------------------------------------------

nlohmann::json ClassesToClusters::to_json() const {
  return {{"mapping", mapping}, {"incorrect", incorrect}, {"total", total}, {"incorrect_rate", incorrect_rate}};
}

ClassesToClusters classes_to_clusters(std::span<const int> clusters, std::span<const int> labels, int k) {
  if (clusters.size() != labels.size()) throw DataError("classes_to_clusters: length mismatch");
  int num_labels = 0;
  for (int l : labels) {
    if (l < 0) throw DataError("reference labels must be non-negative");
    num_labels = std::max(num_labels, l + 1);
  }
  std::vector<std::vector<std::size_t>> counts(static_cast<std::size_t>(k),
                                               std::vector<std::size_t>(static_cast<std::size_t>(num_labels), 0));
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (clusters[i] < 0 || clusters[i] >= k) throw DataError("cluster index out of range");
    ++counts[static_cast<std::size_t>(clusters[i])][static_cast<std::size_t>(labels[i])];
  }
  ClassesToClusters out;
  out.mapping.assign(static_cast<std::size_t>(k), -1);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const auto& row = counts[c];
    if (std::accumulate(row.begin(), row.end(), std::size_t{0}) == 0) continue;
    out.mapping[c] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  out.total = clusters.size();
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (out.mapping[static_cast<std::size_t>(clusters[i])] != labels[i]) ++out.incorrect;
  }
  out.incorrect_rate = out.total ? static_cast<double>(out.incorrect) / static_cast<double>(out.total) : 0.0;
  return out;
}

ClassesToClusters classes_to_clusters(const ClusterModel& model, const Matrix& raw, std::span<const int> labels) {
  return classes_to_clusters(assign(model, raw), labels, model.k);
}

}  // namespace amlprof
