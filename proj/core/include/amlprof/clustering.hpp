#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "amlprof/matrix.hpp"
#include "amlprof/profiling.hpp"

namespace amlprof {

enum class DistanceKind : std::uint8_t { euclidean, manhattan };

std::string_view to_string(DistanceKind k);
DistanceKind parse_distance_kind(std::string_view s);

/// Per-attribute min-max scaling fitted on training data. Nominal attributes are
/// left untouched; constant numeric attributes map to 0. Values outside the fitted
/// range are not clamped.
struct Normalization {
  std::vector<double> min;
  std::vector<double> max;
  std::vector<bool> numeric;

  static Normalization fit(const Matrix& raw, const AttributeSchema& schema);
  void apply(std::span<double> row) const;
  Matrix apply(const Matrix& raw) const;

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

/// Mixed-attribute distance: numeric attributes contribute their difference, nominal
/// attributes contribute 0 when equal and 1 otherwise.
class Metric {
 public:
  Metric(const AttributeSchema& schema, DistanceKind kind);

  DistanceKind kind() const { return kind_; }
  std::size_t dimension() const { return nominal_.size(); }

  double distance(std::span<const double> a, std::span<const double> b) const;
  /// Squared Euclidean distance with the 0/1 nominal rule. This is the SSE objective
  /// regardless of the assignment metric.
  double squared_euclidean(std::span<const double> a, std::span<const double> b) const;
  /// Squared distance under the configured kind; k-means++ seeding weight.
  double squared(std::span<const double> a, std::span<const double> b) const;

 private:
  DistanceKind kind_;
  std::vector<bool> nominal_;
};

/// Checked distance between two normalized rows sharing `schema`.
double distance(std::span<const double> a, std::span<const double> b, const AttributeSchema& schema,
                DistanceKind kind);

struct ClusterModel {
  AttributeSchema schema;
  int k = 0;
  /// k rows in normalized space; nominal entries hold the modal level index.
  Matrix centroids;
  DistanceKind distance = DistanceKind::euclidean;
  Normalization normalization;
  std::uint64_t seed = 0;
  int iterations_run = 0;
  double sse = 0.0;

  /// Nearest centroid of an already normalized row; ties go to the lowest index.
  int nearest(std::span<const double> normalized_row) const;

  nlohmann::json to_json() const;
  static ClusterModel from_json(const nlohmann::json& j);

  friend bool operator==(const ClusterModel&, const ClusterModel&) = default;
};

struct KMeansParams {
  int k = 2;
  DistanceKind distance = DistanceKind::euclidean;
  std::uint64_t seed = 1;
  int max_iter = 500;
};

struct KMeansFit {
  ClusterModel model;
  /// Final training assignment; equals assign(model, training data).
  std::vector<int> labels;
  /// SSE after the seeding assignment and after every Lloyd iteration.
  std::vector<double> sse_trace;
};

/// k-means++ seeding followed by Lloyd iterations until the assignment stops changing
/// or max_iter assignment passes have run. Numeric centroids are means, nominal ones
/// modes (lowest level on ties). A cluster left empty is re-seeded with the instance
/// farthest from its own centroid.
KMeansFit kmeans_fit(const Matrix& raw, const AttributeSchema& schema, const KMeansParams& params);
KMeansFit kmeans_fit(const ProfileTable& table, const KMeansParams& params);

/// Fits with seeds params.seed, params.seed + 1, ... and keeps the lowest SSE (earliest
/// restart on ties). Restarts run on up to `jobs` threads.
KMeansFit kmeans_best_of(const Matrix& raw, const AttributeSchema& schema, const KMeansParams& params, int restarts,
                         int jobs = 1);

/// Labels raw (unnormalized) rows with the model's stored normalization.
std::vector<int> assign(const ClusterModel& model, const Matrix& raw);
std::vector<int> assign(const ClusterModel& model, const ProfileTable& table);

/// Indices of the k-means++ seeds: first uniform, then proportional to the squared
/// distance to the nearest seed chosen so far.
std::vector<std::size_t> kmeanspp_seeds(const Matrix& normalized, const Metric& metric, int k,
                                        std::mt19937_64& rng);

/// Number of distinct rows.
std::size_t count_distinct_rows(const Matrix& m);

}  // namespace amlprof
