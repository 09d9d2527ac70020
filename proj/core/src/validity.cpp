#include "amlprof/validity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "amlprof/csv.hpp"
#include "amlprof/parallel.hpp"

namespace amlprof {

namespace {

// Maps arbitrary labels to 0..m-1 in order of first appearance of the sorted values.
std::vector<int> compact_labels(std::span<const int> labels, int& count) {
  std::map<int, int> ids;
  for (int l : labels) ids.emplace(l, 0);
  int next = 0;
  for (auto& [l, id] : ids) id = next++;
  count = next;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = ids[labels[i]];
  return out;
}

// Numeric means and nominal modes of the rows listed per group.
Matrix group_centers(const Matrix& x, std::span<const int> groups, int group_count, const AttributeSchema& schema) {
  const std::size_t d = x.cols();
  Matrix centers(static_cast<std::size_t>(group_count), d, 0.0);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(group_count), 0);
  std::vector<std::vector<std::size_t>> counts(static_cast<std::size_t>(group_count) * d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto g = static_cast<std::size_t>(groups[i]);
    ++sizes[g];
    for (std::size_t j = 0; j < d; ++j) {
      if (schema.is_nominal(j)) {
        auto& c = counts[g * d + j];
        if (c.empty()) c.assign(schema.level_count(j), 0);
        ++c[static_cast<std::size_t>(x(i, j))];
      } else {
        centers(g, j) += x(i, j);
      }
    }
  }
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    for (std::size_t j = 0; j < d; ++j) {
      if (schema.is_nominal(j)) {
        const auto& c = counts[g * d + j];
        if (!c.empty()) centers(g, j) = static_cast<double>(std::max_element(c.begin(), c.end()) - c.begin());
      } else if (sizes[g] > 0) {
        centers(g, j) /= static_cast<double>(sizes[g]);
      }
    }
  }
  return centers;
}

double mean_of(const std::vector<RunMetrics>& runs, double RunMetrics::*field) {
  double s = 0.0;
  for (const auto& r : runs) s += r.*field;
  return s / static_cast<double>(runs.size());
}

}  // namespace

double silhouette(const Matrix& x, std::span<const int> labels, const AttributeSchema& schema, DistanceKind kind,
                  std::size_t sample_size, std::uint64_t seed) {
  const std::size_t n = x.rows();
  if (labels.size() != n) throw DataError("silhouette: label count does not match the data");
  if (x.cols() != schema.size()) throw DataError("silhouette: data does not match the attribute schema");
  int k = 0;
  const auto all_groups = compact_labels(labels, k);
  if (k < 2) throw DataError("silhouette is undefined for a single cluster");

  std::vector<std::size_t> pick(n);
  std::iota(pick.begin(), pick.end(), 0);
  if (sample_size < n) {
    if (sample_size < 2) throw ConfigError("silhouette sample size must be >= 2");
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < sample_size; ++i) {
      std::uniform_int_distribution<std::size_t> u(i, n - 1);
      std::swap(pick[i], pick[u(rng)]);
    }
    pick.resize(sample_size);
    std::sort(pick.begin(), pick.end());
  }

  const Metric metric(schema, kind);
  const std::size_t m = pick.size();
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (std::size_t i : pick) ++sizes[static_cast<std::size_t>(all_groups[i])];

  double total = 0.0;
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (std::size_t a = 0; a < m; ++a) {
    const std::size_t i = pick[a];
    const auto own = static_cast<std::size_t>(all_groups[i]);
    if (sizes[own] < 2) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t b = 0; b < m; ++b) {
      if (b == a) continue;
      const std::size_t j = pick[b];
      sums[static_cast<std::size_t>(all_groups[j])] += metric.distance(x.row(i), x.row(j));
    }
    const double ai = sums[own] / static_cast<double>(sizes[own] - 1);
    double bi = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c) {
      if (c == own || sizes[c] == 0) continue;
      bi = std::min(bi, sums[c] / static_cast<double>(sizes[c]));
    }
    if (!std::isfinite(bi)) continue;
    const double denom = std::max(ai, bi);
    if (denom > 0.0) total += (bi - ai) / denom;
  }
  return total / static_cast<double>(m);
}

double sse(const Matrix& x, std::span<const int> labels, const Matrix& centroids, const AttributeSchema& schema) {
  if (labels.size() != x.rows()) throw DataError("sse: label count does not match the data");
  const Metric metric(schema, DistanceKind::euclidean);
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    s += metric.squared_euclidean(x.row(i), centroids.row(static_cast<std::size_t>(labels[i])));
  }
  return s;
}

double sse(const Matrix& raw, const ClusterModel& model) {
  const auto labels = assign(model, raw);
  return sse(model.normalization.apply(raw), labels, model.centroids, model.schema);
}

double vrc(const Matrix& x, std::span<const int> labels, const AttributeSchema& schema) {
  const std::size_t n = x.rows();
  if (labels.size() != n) throw DataError("vrc: label count does not match the data");
  int k = 0;
  const auto groups = compact_labels(labels, k);
  if (k < 2 || static_cast<std::size_t>(k) >= n) throw DataError("vrc requires 2 <= k <= n-1 clusters");

  const Metric metric(schema, DistanceKind::euclidean);
  const Matrix centers = group_centers(x, groups, k, schema);
  const std::vector<int> one(n, 0);
  const Matrix global = group_centers(x, one, 1, schema);

  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  double w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = static_cast<std::size_t>(groups[i]);
    ++sizes[g];
    w += metric.squared_euclidean(x.row(i), centers.row(g));
  }
  double b = 0.0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    b += static_cast<double>(sizes[c]) * metric.squared_euclidean(centers.row(c), global.row(0));
  }
  if (w == 0.0) return std::numeric_limits<double>::infinity();
  return (b / static_cast<double>(k - 1)) / (w / static_cast<double>(n - static_cast<std::size_t>(k)));
}

PartitionAgreement partition_agreement(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DataError("partition_agreement: labelings differ in length");
  const std::size_t n = a.size();
  if (n < 2) throw DataError("partition_agreement needs at least two instances");
  int ka = 0, kb = 0;
  const auto ga = compact_labels(a, ka);
  const auto gb = compact_labels(b, kb);
  std::vector<std::int64_t> table(static_cast<std::size_t>(ka) * static_cast<std::size_t>(kb), 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++table[static_cast<std::size_t>(ga[i]) * static_cast<std::size_t>(kb) + static_cast<std::size_t>(gb[i])];
  }
  auto pairs = [](std::int64_t c) { return c * (c - 1) / 2; };
  std::int64_t both = 0, row_pairs = 0, col_pairs = 0, row_max = 0, col_max = 0;
  std::vector<std::int64_t> col_tot(static_cast<std::size_t>(kb), 0), col_best(static_cast<std::size_t>(kb), 0);
  for (int r = 0; r < ka; ++r) {
    std::int64_t tot = 0, best = 0;
    for (int c = 0; c < kb; ++c) {
      const std::int64_t v = table[static_cast<std::size_t>(r) * static_cast<std::size_t>(kb) + static_cast<std::size_t>(c)];
      both += pairs(v);
      tot += v;
      best = std::max(best, v);
      col_tot[static_cast<std::size_t>(c)] += v;
      col_best[static_cast<std::size_t>(c)] = std::max(col_best[static_cast<std::size_t>(c)], v);
    }
    row_pairs += pairs(tot);
    row_max += best;
  }
  for (int c = 0; c < kb; ++c) {
    col_pairs += pairs(col_tot[static_cast<std::size_t>(c)]);
    col_max += col_best[static_cast<std::size_t>(c)];
  }
  const auto nn = static_cast<std::int64_t>(n);
  const std::int64_t total_pairs = pairs(nn);
  const std::int64_t agree = total_pairs + 2 * both - row_pairs - col_pairs;
  PartitionAgreement out;
  out.rand = static_cast<double>(agree) / static_cast<double>(total_pairs);
  out.van_dongen_raw = 2 * nn - row_max - col_max;
  out.van_dongen_normalized = static_cast<double>(out.van_dongen_raw) / static_cast<double>(2 * nn);
  return out;
}

nlohmann::json SweepOptions::to_json() const {
  return {{"k_min", k_min},
          {"k_max", k_max},
          {"runs", runs},
          {"base_seed", base_seed},
          {"distance", std::string(to_string(distance))},
          {"max_iter", max_iter},
          {"silhouette_sample", silhouette_sample}};
}

SweepResult k_sweep(const Matrix& raw, const AttributeSchema& schema, const SweepOptions& options) {
  if (options.runs < 2) throw ConfigError("k_sweep needs at least 2 runs per k");
  if (options.k_min < 2 || options.k_max < options.k_min) throw ConfigError("k range must satisfy 2 <= k_min <= k_max");
  if (static_cast<std::size_t>(options.k_max) > raw.rows() - 1 || raw.rows() < 3) {
    throw ConfigError("k_max must be <= n-1");
  }
  const std::size_t ks = static_cast<std::size_t>(options.k_max - options.k_min + 1);
  const std::size_t runs = static_cast<std::size_t>(options.runs);
  const Matrix x = Normalization::fit(raw, schema).apply(raw);

  std::vector<RunMetrics> metrics(ks * runs);
  std::vector<std::vector<int>> labels(ks * runs);
  parallel_for(ks * runs, options.jobs, [&](std::size_t cell) {
    const int k = options.k_min + static_cast<int>(cell / runs);
    const std::uint64_t seed = options.base_seed + cell % runs;
    KMeansParams p{k, options.distance, seed, options.max_iter};
    auto fit = kmeans_fit(raw, schema, p);
    RunMetrics& m = metrics[cell];
    m.seed = seed;
    m.iterations = fit.model.iterations_run;
    m.sse = fit.model.sse;
    m.silhouette = silhouette(x, fit.labels, schema, options.distance, options.silhouette_sample, seed);
    m.vrc = vrc(x, fit.labels, schema);
    labels[cell] = std::move(fit.labels);
  });

  SweepResult result;
  result.options = options;
  for (std::size_t ki = 0; ki < ks; ++ki) {
    ValidityReport rep;
    rep.k = options.k_min + static_cast<int>(ki);
    rep.runs = options.runs;
    rep.per_run.assign(metrics.begin() + static_cast<std::ptrdiff_t>(ki * runs),
                       metrics.begin() + static_cast<std::ptrdiff_t>((ki + 1) * runs));
    for (std::size_t r = 0; r < runs; ++r) {
      for (std::size_t s = r + 1; s < runs; ++s) {
        const auto pa = partition_agreement(labels[ki * runs + r], labels[ki * runs + s]);
        rep.per_run[r].rand_stability += pa.rand;
        rep.per_run[s].rand_stability += pa.rand;
        rep.per_run[r].van_dongen_stability += pa.van_dongen_stability();
        rep.per_run[s].van_dongen_stability += pa.van_dongen_stability();
      }
    }
    for (auto& m : rep.per_run) {
      m.rand_stability /= static_cast<double>(runs - 1);
      m.van_dongen_stability /= static_cast<double>(runs - 1);
    }
    rep.sse_mean = mean_of(rep.per_run, &RunMetrics::sse);
    rep.sse_min = std::min_element(rep.per_run.begin(), rep.per_run.end(),
                                   [](const RunMetrics& a, const RunMetrics& b) { return a.sse < b.sse; })
                      ->sse;
    rep.silhouette_mean = mean_of(rep.per_run, &RunMetrics::silhouette);
    rep.vrc_mean = mean_of(rep.per_run, &RunMetrics::vrc);
    rep.rand_stability_mean = mean_of(rep.per_run, &RunMetrics::rand_stability);
    rep.van_dongen_stability_mean = mean_of(rep.per_run, &RunMetrics::van_dongen_stability);
    result.reports.push_back(std::move(rep));
  }

  auto argmax = [&](double ValidityReport::*field) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.reports.size(); ++i) {
      if (result.reports[i].*field > result.reports[best].*field) best = i;
    }
    return result.reports[best].k;
  };
  auto& rec = result.recommended;
  rec.silhouette = argmax(&ValidityReport::silhouette_mean);
  rec.vrc = argmax(&ValidityReport::vrc_mean);
  rec.rand = argmax(&ValidityReport::rand_stability_mean);
  rec.van_dongen = argmax(&ValidityReport::van_dongen_stability_mean);
  rec.sse_elbow = options.k_min;
  double best_curv = 0.0;
  for (std::size_t i = 1; i + 1 < result.reports.size(); ++i) {
    const double curv =
        result.reports[i - 1].sse_mean - 2.0 * result.reports[i].sse_mean + result.reports[i + 1].sse_mean;
    if (curv > best_curv) {
      best_curv = curv;
      rec.sse_elbow = result.reports[i].k;
    }
  }
  return result;
}

SweepResult k_sweep(const ProfileTable& table, const SweepOptions& options) {
  return k_sweep(table.matrix(), table.schema, options);
}

nlohmann::json SweepResult::recommendations_json() const {
  nlohmann::json j;
  j["options"] = options.to_json();
  j["recommended_k"] = {{"silhouette", recommended.silhouette},
                        {"vrc", recommended.vrc},
                        {"rand", recommended.rand},
                        {"van_dongen", recommended.van_dongen},
                        {"sse_elbow", recommended.sse_elbow}};
  auto& per_k = j["per_k"] = nlohmann::json::array();
  for (const auto& r : reports) {
    per_k.push_back({{"k", r.k},
                     {"sse_mean", r.sse_mean},
                     {"sse_min", r.sse_min},
                     {"silhouette_mean", r.silhouette_mean},
                     {"vrc_mean", std::isfinite(r.vrc_mean) ? nlohmann::json(r.vrc_mean) : nlohmann::json("inf")},
                     {"rand_stability_mean", r.rand_stability_mean},
                     {"van_dongen_stability_mean", r.van_dongen_stability_mean}});
  }
  return j;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "k,run,seed,iterations,sse,silhouette,vrc,rand_stability,van_dongen_stability\n";
  auto row = [&](int k, const std::string& run, const std::string& seed, const std::string& iters, double s,
                 double sil, double v, double r, double vd) {
    out << k << ',' << run << ',' << seed << ',' << iters << ',' << csv::format_double(s) << ','
        << csv::format_double(sil) << ',' << csv::format_double(v) << ',' << csv::format_double(r) << ','
        << csv::format_double(vd) << '\n';
  };
  for (const auto& rep : result.reports) {
    for (std::size_t i = 0; i < rep.per_run.size(); ++i) {
      const auto& m = rep.per_run[i];
      row(rep.k, std::to_string(i), std::to_string(m.seed), std::to_string(m.iterations), m.sse, m.silhouette, m.vrc,
          m.rand_stability, m.van_dongen_stability);
    }
  }
  for (const auto& rep : result.reports) {
    row(rep.k, "mean", "", "", rep.sse_mean, rep.silhouette_mean, rep.vrc_mean, rep.rand_stability_mean,
        rep.van_dongen_stability_mean);
  }
}

}  // namespace amlprof
