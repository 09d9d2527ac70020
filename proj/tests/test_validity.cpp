#include <random>
#include <sstream>

#include "amlprof/validity.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace amlprof;

namespace {

AttributeSchema schema_with(std::size_t numeric, std::size_t nominal) {
  std::vector<Attribute> a;
  for (std::size_t j = 0; j < numeric; ++j) a.push_back({"n" + std::to_string(j), AttributeKind::numeric, {}});
  for (std::size_t j = 0; j < nominal; ++j) a.push_back({"c" + std::to_string(j), AttributeKind::nominal, {"a", "b"}});
  return AttributeSchema(std::move(a));
}

}  // namespace

TEST_CASE("silhouette over all rows equals the quadratic definition") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> bit(0, 1);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = 20 + static_cast<std::size_t>(trial) * 40;
    const int k = 2 + trial % 5;
    const auto s = schema_with(3, 1);
    Matrix x(n, 4);
    std::vector<int> labels(n);
    std::uniform_int_distribution<int> lab(0, k - 1);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = lab(rng);
      for (std::size_t j = 0; j < 3; ++j) x(i, j) = u(rng) + 0.3 * labels[i];
      x(i, 3) = bit(rng);
    }
    for (bool manhattan : {false, true}) {
      const auto kind = manhattan ? DistanceKind::manhattan : DistanceKind::euclidean;
      const double exact = oracle::silhouette(x, labels, s, manhattan);
      CHECK(std::fabs(silhouette(x, labels, s, kind, n, 77) - exact) <= 1e-9);
      CHECK(std::fabs(silhouette(x, labels, s, kind, n + 5000, 3) - exact) <= 1e-9);
    }
  }
}

TEST_CASE("silhouette edge cases") {
  const auto s = schema_with(1, 0);
  Matrix x(4, 1);
  for (std::size_t i = 0; i < 4; ++i) x(i, 0) = static_cast<double>(i);
  std::vector<int> one{0, 0, 0, 0};
  CHECK_THROWS_AS(silhouette(x, one, s, DistanceKind::euclidean), DataError);
  // A singleton contributes 0 to the mean.
  std::vector<int> lone{0, 0, 0, 1};
  CHECK(silhouette(x, lone, s, DistanceKind::euclidean) ==
        doctest::Approx(oracle::silhouette(x, lone, s, false)));
}

TEST_CASE("Rand and Van Dongen equal pair and contingency brute force") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> size(2, 50), kk(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(size(rng));
    std::uniform_int_distribution<int> la(0, kk(rng) - 1), lb(0, kk(rng) - 1);
    std::vector<int> a(n), b(n);
    for (auto& v : a) v = la(rng);
    for (auto& v : b) v = lb(rng) * 3 + 1;
    const auto got = partition_agreement(a, b);
    CHECK(got.rand == doctest::Approx(oracle::rand_index(a, b)).epsilon(1e-12));
    CHECK(got.van_dongen_raw == oracle::van_dongen(a, b));
    CHECK(got.van_dongen_normalized == doctest::Approx(static_cast<double>(oracle::van_dongen(a, b)) / (2.0 * n)));
  }
}

TEST_CASE("variance ratio criterion on a hand example") {
  const auto s = schema_with(1, 0);
  Matrix x(6, 1);
  const double v[] = {0, 1, 2, 10, 11, 12};
  for (std::size_t i = 0; i < 6; ++i) x(i, 0) = v[i];
  std::vector<int> labels{0, 0, 0, 1, 1, 1};
  // B = 6 * 5^2 = 150 over k-1 = 1; W = 4 over n-k = 4.
  CHECK(vrc(x, labels, s) == doctest::Approx(150.0));
  std::vector<int> all{0, 0, 0, 0, 0, 0};
  CHECK_THROWS_AS(vrc(x, all, s), DataError);
}

TEST_CASE("sweep reports one row per run plus a mean row per k") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 0.3);
  const auto s = schema_with(2, 0);
  Matrix x(240, 2);
  for (std::size_t i = 0; i < 240; ++i) {
    const double c = static_cast<double>(i % 4);
    x(i, 0) = c * 5 + g(rng);
    x(i, 1) = (c == 1 || c == 3 ? 5 : 0) + g(rng);
  }
  SweepOptions o;
  o.k_min = 2;
  o.k_max = 6;
  o.runs = 4;
  o.silhouette_sample = 240;
  o.jobs = 2;
  const auto r = k_sweep(x, s, o);
  REQUIRE(r.reports.size() == 5);
  CHECK(r.recommended.silhouette == 4);
  CHECK(r.recommended.vrc == 4);
  std::ostringstream csv;
  write_sweep_csv(csv, r);
  std::size_t lines = 0;
  for (char c : csv.str()) lines += c == '\n';
  CHECK(lines == 1 + 5 * 4 + 5);
  o.jobs = 1;
  std::ostringstream again;
  write_sweep_csv(again, k_sweep(x, s, o));
  CHECK(again.str() == csv.str());
  const auto j = r.recommendations_json();
  CHECK(j.at("recommended_k").at("silhouette") == 4);
}
