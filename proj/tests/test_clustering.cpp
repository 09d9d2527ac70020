#include <random>
#include <set>

#include "amlprof/clustering.hpp"
#include "amlprof/validity.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace amlprof;

namespace {

AttributeSchema mixed_schema(std::size_t numeric, std::size_t nominal) {
  std::vector<Attribute> a;
  for (std::size_t j = 0; j < numeric; ++j) a.push_back({"n" + std::to_string(j), AttributeKind::numeric, {}});
  for (std::size_t j = 0; j < nominal; ++j) a.push_back({"c" + std::to_string(j), AttributeKind::nominal, {"a", "b", "c"}});
  return AttributeSchema(std::move(a));
}

// Gaussian blobs around `centers` random centres in the numeric columns.
Matrix blobs(std::mt19937_64& rng, std::size_t n, const AttributeSchema& s, int centers, double spread,
             std::vector<int>* truth = nullptr) {
  std::normal_distribution<double> g(0.0, spread);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_int_distribution<int> pick(0, centers - 1), lev(0, 2);
  std::vector<std::vector<double>> mu(static_cast<std::size_t>(centers), std::vector<double>(s.size()));
  for (auto& m : mu) {
    for (auto& v : m) v = u(rng);
  }
  Matrix x(n, s.size());
  for (std::size_t i = 0; i < n; ++i) {
    const int c = pick(rng);
    if (truth) truth->push_back(c);
    for (std::size_t j = 0; j < s.size(); ++j) {
      x(i, j) = s.is_nominal(j) ? (i % 5 == 0 ? lev(rng) : c % 3) : mu[static_cast<std::size_t>(c)][j] + g(rng);
    }
  }
  return x;
}

}  // namespace

TEST_CASE("normalization matches a from-scratch min-max") {
  std::mt19937_64 rng(1);
  const auto s = mixed_schema(4, 2);
  const Matrix raw = blobs(rng, 300, s, 3, 1.0);
  const auto expect = oracle::min_max(raw, s);
  const Matrix got = Normalization::fit(raw, s).apply(raw);
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    for (std::size_t j = 0; j < raw.cols(); ++j) CHECK(got(i, j) == doctest::Approx(expect(i, j)).epsilon(1e-12));
  }
}

TEST_CASE("assignment equals an exhaustive nearest-centroid scan") {
  std::mt19937_64 rng(2);
  for (auto kind : {DistanceKind::euclidean, DistanceKind::manhattan}) {
    const auto s = mixed_schema(5, 2);
    const Matrix raw = blobs(rng, 1000, s, 6, 2.0);
    KMeansParams p;
    p.k = 6;
    p.distance = kind;
    const auto fit = kmeans_fit(raw, s, p);
    const auto labels = assign(fit.model, raw);
    CHECK(labels == fit.labels);
    const Matrix x = oracle::min_max(raw, s);
    for (std::size_t i = 0; i < raw.rows(); ++i) {
      CHECK(labels[i] == oracle::nearest(x, i, fit.model.centroids, s, kind == DistanceKind::manhattan));
    }
  }
}

TEST_CASE("SSE never increases across iterations and the final value matches a recomputation") {
  std::mt19937_64 rng(3);
  const auto s = mixed_schema(3, 1);
  const Matrix raw = blobs(rng, 800, s, 5, 2.5);
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    KMeansParams p;
    p.k = 5;
    p.seed = seed;
    const auto fit = kmeans_fit(raw, s, p);
    for (std::size_t t = 1; t < fit.sse_trace.size(); ++t) CHECK(fit.sse_trace[t] <= fit.sse_trace[t - 1] + 1e-9);
    CHECK(fit.model.sse == doctest::Approx(sse(raw, fit.model)).epsilon(1e-12));
    CHECK(fit.model.sse == doctest::Approx(fit.sse_trace.back()).epsilon(1e-12));
  }
}

TEST_CASE("fits are reproducible and restarts keep the best") {
  std::mt19937_64 rng(4);
  const auto s = mixed_schema(4, 0);
  const Matrix raw = blobs(rng, 500, s, 7, 1.5);
  KMeansParams p;
  p.k = 7;
  p.seed = 9;
  CHECK(kmeans_fit(raw, s, p).model == kmeans_fit(raw, s, p).model);
  const auto best = kmeans_best_of(raw, s, p, 6, 3);
  double lowest = 1e300;
  for (std::uint64_t r = 0; r < 6; ++r) {
    auto q = p;
    q.seed = p.seed + r;
    lowest = std::min(lowest, kmeans_fit(raw, s, q).model.sse);
  }
  CHECK(best.model.sse == lowest);
  CHECK(kmeans_best_of(raw, s, p, 6, 1).model == best.model);
}

TEST_CASE("k-means++ picks distinct rows") {
  std::mt19937_64 rng(5);
  const auto s = mixed_schema(2, 0);
  const Matrix raw = blobs(rng, 200, s, 4, 0.5);
  const Matrix x = Normalization::fit(raw, s).apply(raw);
  std::mt19937_64 seeder(1);
  const auto seeds = kmeanspp_seeds(x, Metric(s, DistanceKind::euclidean), 10, seeder);
  CHECK(std::set<std::size_t>(seeds.begin(), seeds.end()).size() == 10);
}

TEST_CASE("k larger than the distinct rows is rejected") {
  const auto s = mixed_schema(1, 0);
  Matrix raw(5, 1, 1.0);
  raw(0, 0) = 2.0;
  KMeansParams p;
  p.k = 3;
  CHECK_THROWS(kmeans_fit(raw, s, p));
}

TEST_CASE("cluster model JSON round-trip preserves assignments") {
  std::mt19937_64 rng(6);
  const auto s = mixed_schema(3, 2);
  const Matrix raw = blobs(rng, 400, s, 4, 1.0);
  KMeansParams p;
  p.k = 4;
  const auto fit = kmeans_fit(raw, s, p);
  const auto back = ClusterModel::from_json(fit.model.to_json());
  CHECK(back == fit.model);
  CHECK(assign(back, raw) == fit.labels);
}

TEST_CASE("well separated blobs are recovered") {
  std::mt19937_64 rng(7);
  const auto s = mixed_schema(4, 0);
  std::vector<int> truth;
  const Matrix raw = blobs(rng, 900, s, 3, 0.2, &truth);
  KMeansParams p;
  p.k = 3;
  const auto fit = kmeans_best_of(raw, s, p, 5);
  CHECK(oracle::rand_index(fit.labels, truth) == 1.0);
}
