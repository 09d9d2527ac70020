#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "amlprof/clustering.hpp"

namespace amlprof {

/// Mean silhouette of the rows of `x` (already normalized). When sample_size < n the
/// coefficient is computed within a seeded uniform sample of that many rows; otherwise
/// every row is used and the seed is ignored. Points alone in their cluster score 0.
/// Throws DataError when fewer than two clusters are present.
double silhouette(const Matrix& x, std::span<const int> labels, const AttributeSchema& schema, DistanceKind kind,
                  std::size_t sample_size = 2000, std::uint64_t seed = 1);

/// Sum of squared distances of the rows of `x` (normalized) to their labelled centroid.
double sse(const Matrix& x, std::span<const int> labels, const Matrix& centroids, const AttributeSchema& schema);
/// SSE of raw profiles under the model's own normalization and assignment.
double sse(const Matrix& raw, const ClusterModel& model);

/// Variance ratio criterion (Calinski-Harabasz) on normalized rows. Nominal attributes
/// use modes and the squared 0/1 distance. Returns +infinity when the within-cluster
/// dispersion is zero. Throws DataError unless 2 <= k <= n-1 non-empty clusters exist.
double vrc(const Matrix& x, std::span<const int> labels, const AttributeSchema& schema);

struct PartitionAgreement {
  double rand = 0.0;
  std::int64_t van_dongen_raw = 0;
  /// van_dongen_raw / 2n.
  double van_dongen_normalized = 0.0;

  double van_dongen_stability() const { return 1.0 - van_dongen_normalized; }
};

/// Rand index and Van Dongen distance from the contingency table of two labelings.
PartitionAgreement partition_agreement(std::span<const int> a, std::span<const int> b);

struct SweepOptions {
  int k_min = 2;
  int k_max = 10;
  int runs = 10;
  std::uint64_t base_seed = 1;
  DistanceKind distance = DistanceKind::euclidean;
  int max_iter = 500;
  std::size_t silhouette_sample = 2000;
  int jobs = 1;

  nlohmann::json to_json() const;
};

struct RunMetrics {
  std::uint64_t seed = 0;
  int iterations = 0;
  double sse = 0.0;
  double silhouette = 0.0;
  double vrc = 0.0;
  /// Mean agreement of this run's labels with every other run at the same k.
  double rand_stability = 0.0;
  double van_dongen_stability = 0.0;
};

struct ValidityReport {
  int k = 0;
  int runs = 0;
  double sse_mean = 0.0;
  double sse_min = 0.0;
  double silhouette_mean = 0.0;
  double vrc_mean = 0.0;
  double rand_stability_mean = 0.0;
  double van_dongen_stability_mean = 0.0;
  std::vector<RunMetrics> per_run;
};

struct SweepRecommendation {
  int silhouette = 0;
  int vrc = 0;
  int rand = 0;
  int van_dongen = 0;
  /// k with the largest positive second difference of mean SSE; k_min when none.
  int sse_elbow = 0;
};

struct SweepResult {
  SweepOptions options;
  std::vector<ValidityReport> reports;
  SweepRecommendation recommended;

  nlohmann::json recommendations_json() const;
};

/// Fits `runs` models per k with seeds base_seed, base_seed+1, ... and scores them.
SweepResult k_sweep(const Matrix& raw, const AttributeSchema& schema, const SweepOptions& options);
SweepResult k_sweep(const ProfileTable& table, const SweepOptions& options);

/// One row per (k, run) followed by one `mean` row per k.
void write_sweep_csv(std::ostream& out, const SweepResult& result);

}  // namespace amlprof
