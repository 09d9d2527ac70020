#include "amlprof/clustering.hpp"

#include "amlprof/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace amlprof {

std::string_view to_string(DistanceKind k) { return k == DistanceKind::euclidean ? "euclidean" : "manhattan"; }

DistanceKind parse_distance_kind(std::string_view s) {
  if (s == "euclidean") return DistanceKind::euclidean;
  if (s == "manhattan") return DistanceKind::manhattan;
  throw ConfigError("unknown distance kind '" + std::string(s) + "'");
}

// ---- Normalization -------------------------------------------------------------------

Normalization Normalization::fit(const Matrix& raw, const AttributeSchema& schema) {
  if (raw.cols() != schema.size()) throw DataError("matrix width does not match the attribute schema");
  Normalization n;
  const std::size_t d = schema.size();
  n.min.assign(d, 0.0);
  n.max.assign(d, 0.0);
  n.numeric.assign(d, false);
  for (std::size_t j = 0; j < d; ++j) n.numeric[j] = !schema.is_nominal(j);
  if (raw.rows() == 0) return n;
  for (std::size_t j = 0; j < d; ++j) {
    if (!n.numeric[j]) continue;
    double lo = raw(0, j), hi = raw(0, j);
    for (std::size_t i = 1; i < raw.rows(); ++i) {
      lo = std::min(lo, raw(i, j));
      hi = std::max(hi, raw(i, j));
    }
    n.min[j] = lo;
    n.max[j] = hi;
  }
  return n;
}

void Normalization::apply(std::span<double> row) const {
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (!numeric[j]) continue;
    const double range = max[j] - min[j];
    row[j] = range > 0.0 ? (row[j] - min[j]) / range : 0.0;
  }
}

Matrix Normalization::apply(const Matrix& raw) const {
  if (raw.cols() != numeric.size()) throw DataError("matrix width does not match the normalization");
  Matrix out = raw;
  for (std::size_t i = 0; i < out.rows(); ++i) apply(out.row(i));
  return out;
}

// ---- Metric ------------------------------------------------------------------------------

Metric::Metric(const AttributeSchema& schema, DistanceKind kind) : kind_(kind), nominal_(schema.size()) {
  for (std::size_t j = 0; j < schema.size(); ++j) nominal_[j] = schema.is_nominal(j);
}

double Metric::squared_euclidean(std::span<const double> a, std::span<const double> b) const {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (nominal_[j]) {
      s += a[j] != b[j] ? 1.0 : 0.0;
    } else {
      const double d = a[j] - b[j];
      s += d * d;
    }
  }
  return s;
}

double Metric::distance(std::span<const double> a, std::span<const double> b) const {
  if (kind_ == DistanceKind::euclidean) return std::sqrt(squared_euclidean(a, b));
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    s += nominal_[j] ? (a[j] != b[j] ? 1.0 : 0.0) : std::abs(a[j] - b[j]);
  }
  return s;
}

double Metric::squared(std::span<const double> a, std::span<const double> b) const {
  if (kind_ == DistanceKind::euclidean) return squared_euclidean(a, b);
  const double d = distance(a, b);
  return d * d;
}

double distance(std::span<const double> a, std::span<const double> b, const AttributeSchema& schema,
                DistanceKind kind) {
  if (a.size() != schema.size() || b.size() != schema.size()) {
    throw DataError("distance: vectors do not match the attribute schema");
  }
  return Metric(schema, kind).distance(a, b);
}

// ---- ClusterModel ------------------------------------------------------------------------

int ClusterModel::nearest(std::span<const double> x) const {
  const Metric metric(schema, distance);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < k; ++c) {
    const double d = metric.squared(x, centroids.row(static_cast<std::size_t>(c)));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

nlohmann::json ClusterModel::to_json() const {
  nlohmann::json j;
  j["k"] = k;
  j["seed"] = seed;
  j["distance"] = std::string(to_string(distance));
  j["iterations"] = iterations_run;
  j["sse"] = sse;
  j["schema"] = schema.to_json();
  j["normalization"] = {{"min", normalization.min}, {"max", normalization.max}};
  auto& rows = j["centroids"] = nlohmann::json::array();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    auto r = centroids.row(c);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return j;
}

ClusterModel ClusterModel::from_json(const nlohmann::json& j) {
  ClusterModel m;
  m.k = j.at("k").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.distance = parse_distance_kind(j.at("distance").get<std::string>());
  m.iterations_run = j.at("iterations").get<int>();
  m.sse = j.at("sse").get<double>();
  m.schema = AttributeSchema::from_json(j.at("schema"));
  m.normalization.min = j.at("normalization").at("min").get<std::vector<double>>();
  m.normalization.max = j.at("normalization").at("max").get<std::vector<double>>();
  m.normalization.numeric.resize(m.schema.size());
  for (std::size_t i = 0; i < m.schema.size(); ++i) m.normalization.numeric[i] = !m.schema.is_nominal(i);
  for (const auto& row : j.at("centroids")) m.centroids.append_row(row.get<std::vector<double>>());
  if (m.k < 1 || m.centroids.rows() != static_cast<std::size_t>(m.k) || m.centroids.cols() != m.schema.size() ||
      m.normalization.min.size() != m.schema.size()) {
    throw DataError("cluster model JSON is inconsistent");
  }
  return m;
}

// ---- k-means -------------------------------------------------------------------------------

std::size_t count_distinct_rows(const Matrix& m) {
  if (m.rows() == 0) return 0;
  std::vector<std::size_t> idx(m.rows());
  std::iota(idx.begin(), idx.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    auto ra = m.row(a), rb = m.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::sort(idx.begin(), idx.end(), less);
  std::size_t distinct = 1;
  for (std::size_t i = 1; i < idx.size(); ++i) {
    if (less(idx[i - 1], idx[i])) ++distinct;
  }
  return distinct;
}

std::vector<std::size_t> kmeanspp_seeds(const Matrix& x, const Metric& metric, int k, std::mt19937_64& rng) {
  const std::size_t n = x.rows();
  std::vector<std::size_t> seeds;
  seeds.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  std::vector<double> weight(n);
  for (std::size_t i = 0; i < n; ++i) weight[i] = metric.squared(x.row(i), x.row(seeds[0]));
  while (static_cast<int>(seeds.size()) < k) {
    double total = 0.0;
    for (double w : weight) total += w;
    if (!(total > 0.0)) throw DataError("k-means++: fewer distinct points than clusters");
    const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    double acc = 0.0;
    std::size_t pick = n;
    std::size_t last_positive = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (weight[i] <= 0.0) continue;
      last_positive = i;
      acc += weight[i];
      if (acc > u) {
        pick = i;
        break;
      }
    }
    if (pick == n) pick = last_positive;
    seeds.push_back(pick);
    for (std::size_t i = 0; i < n; ++i) weight[i] = std::min(weight[i], metric.squared(x.row(i), x.row(pick)));
  }
  return seeds;
}

namespace {

struct Assignment {
  std::vector<int> labels;
  double sse = 0.0;
};

Assignment assign_all(const Matrix& x, const Matrix& centroids, const Metric& metric) {
  Assignment a;
  a.labels.resize(x.rows());
  const std::size_t k = centroids.rows();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double d = metric.squared(row, centroids.row(c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    a.labels[i] = static_cast<int>(best);
    a.sse += metric.kind() == DistanceKind::euclidean ? best_d : metric.squared_euclidean(row, centroids.row(best));
  }
  return a;
}

// Means for numeric attributes, lowest-index modes for nominal ones. Summation runs in
// instance order so the result is reproducible. Returns the sizes of each cluster.
std::vector<std::size_t> update_centroids(const Matrix& x, const std::vector<int>& labels, const AttributeSchema& schema,
                                          Matrix& centroids) {
  const std::size_t k = centroids.rows();
  const std::size_t d = x.cols();
  std::vector<std::size_t> sizes(k, 0);
  Matrix sums(k, d, 0.0);
  std::vector<std::vector<std::vector<std::size_t>>> level_counts(k, std::vector<std::vector<std::size_t>>(d));
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      if (schema.is_nominal(j)) level_counts[c][j].assign(schema.level_count(j), 0);
    }
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    ++sizes[c];
    auto row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      if (schema.is_nominal(j)) {
        ++level_counts[c][j][static_cast<std::size_t>(row[j])];
      } else {
        sums(c, j) += row[j];
      }
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] == 0) continue;
    for (std::size_t j = 0; j < d; ++j) {
      if (schema.is_nominal(j)) {
        const auto& counts = level_counts[c][j];
        centroids(c, j) = static_cast<double>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      } else {
        centroids(c, j) = sums(c, j) / static_cast<double>(sizes[c]);
      }
    }
  }
  return sizes;
}

void reseed_empty(const Matrix& x, const std::vector<int>& labels, const std::vector<std::size_t>& sizes,
                  const Metric& metric, Matrix& centroids) {
  std::vector<bool> taken(x.rows(), false);
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] != 0) continue;
    std::size_t far = x.rows();
    double far_d = -1.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (taken[i]) continue;
      const double d = metric.squared(x.row(i), centroids.row(static_cast<std::size_t>(labels[i])));
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    taken[far] = true;
    auto src = x.row(far);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
  }
}

}  // namespace

KMeansFit kmeans_fit(const Matrix& raw, const AttributeSchema& schema, const KMeansParams& params) {
  if (raw.cols() != schema.size()) throw DataError("matrix width does not match the attribute schema");
  if (params.k < 1) throw ConfigError("k must be >= 1");
  if (params.max_iter < 1) throw ConfigError("max_iter must be >= 1");
  for (double v : raw.data()) {
    if (!std::isfinite(v)) throw DataError("k-means input contains non-finite values");
  }
  const std::size_t distinct = count_distinct_rows(raw);
  if (static_cast<std::size_t>(params.k) > distinct) {
    throw DataError("k = " + std::to_string(params.k) + " exceeds the " + std::to_string(distinct) +
                    " distinct profiles");
  }

  KMeansFit fit;
  ClusterModel& model = fit.model;
  model.schema = schema;
  model.k = params.k;
  model.distance = params.distance;
  model.seed = params.seed;
  model.normalization = Normalization::fit(raw, schema);
  const Matrix x = model.normalization.apply(raw);
  const Metric metric(schema, params.distance);

  std::mt19937_64 rng(params.seed);
  const auto seeds = kmeanspp_seeds(x, metric, params.k, rng);
  Matrix centroids = x.select_rows(seeds);

  Assignment current = assign_all(x, centroids, metric);
  fit.sse_trace.push_back(current.sse);
  int iterations = 1;
  while (iterations < params.max_iter) {
    Matrix next_centroids = centroids;
    const auto sizes = update_centroids(x, current.labels, schema, next_centroids);
    const bool any_empty = std::find(sizes.begin(), sizes.end(), 0) != sizes.end();
    if (any_empty) reseed_empty(x, current.labels, sizes, metric, next_centroids);
    Assignment next = assign_all(x, next_centroids, metric);
    ++iterations;
    const bool converged = !any_empty && next.labels == current.labels;
    centroids = std::move(next_centroids);
    current = std::move(next);
    fit.sse_trace.push_back(current.sse);
    if (converged) break;
  }

  model.centroids = std::move(centroids);
  model.iterations_run = iterations;
  model.sse = current.sse;
  fit.labels = std::move(current.labels);
  return fit;
}

KMeansFit kmeans_fit(const ProfileTable& table, const KMeansParams& params) {
  return kmeans_fit(table.matrix(), table.schema, params);
}

KMeansFit kmeans_best_of(const Matrix& raw, const AttributeSchema& schema, const KMeansParams& params, int restarts,
                         int jobs) {
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
  std::vector<KMeansFit> fits(static_cast<std::size_t>(restarts));
  parallel_for(fits.size(), jobs, [&](std::size_t r) {
    KMeansParams p = params;
    p.seed = params.seed + r;
    fits[r] = kmeans_fit(raw, schema, p);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < fits.size(); ++r) {
    if (fits[r].model.sse < fits[best].model.sse) best = r;
  }
  return std::move(fits[best]);
}

std::vector<int> assign(const ClusterModel& model, const Matrix& raw) {
  if (raw.cols() != model.schema.size()) throw DataError("profiles do not match the cluster model schema");
  const Matrix x = model.normalization.apply(raw);
  return assign_all(x, model.centroids, Metric(model.schema, model.distance)).labels;
}

std::vector<int> assign(const ClusterModel& model, const ProfileTable& table) {
  if (!(table.schema == model.schema)) throw DataError("profile schema does not match the cluster model");
  return assign(model, table.matrix());
}

}  // namespace amlprof
