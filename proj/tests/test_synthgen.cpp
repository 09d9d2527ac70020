#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "amlprof/profile_io.hpp"
#include "amlprof/synthgen.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace amlprof;

TEST_CASE("largest-remainder allocation sums to n") {
  const std::vector<double> p{0.5, 0.3, 0.2};
  CHECK(allocate_customers(p, 10) == std::vector<std::size_t>{5, 3, 2});
  CHECK(allocate_customers(p, 7) == std::vector<std::size_t>{4, 2, 1});
  const std::vector<double> thirds{1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(allocate_customers(thirds, 4) == std::vector<std::size_t>{2, 1, 1});
  for (std::size_t n = 1; n < 200; ++n) {
    const auto a = allocate_customers(p, n);
    CHECK(std::accumulate(a.begin(), a.end(), std::size_t{0}) == n);
  }
}

TEST_CASE("bundled configurations validate and round-trip") {
  for (const char* name : {"seven", "six", "two"}) {
    const auto c = bundled_config(name);
    c.validate();
    CHECK(GeneratorConfig::from_json(c.to_json()).to_json() == c.to_json());
  }
  CHECK(bundled_config("seven").archetypes.size() == 7);
  CHECK(bundled_config("six").archetypes.size() == 6);
  CHECK(bundled_config("seven", 1234).n_customers == 1234);
  CHECK_THROWS_AS(bundled_config("eight"), ConfigError);
}

TEST_CASE("infeasible dials are rejected") {
  auto c = bundled_config("two", 100);
  c.archetypes[0].interbank_ratio = 0.7;
  c.archetypes[0].intrabank_ratio = 0.7;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = bundled_config("two", 100);
  c.archetypes[0].proportion = 0.9;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(bundled_config("two", 1), ConfigError);
  c = bundled_config("two", 100);
  c.archetypes[1].lag_days = {0, 400};
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("generation is deterministic, ordered and inside the window") {
  auto c = bundled_config("seven", 140);
  std::vector<GeneratedCustomer> one, three;
  generate(c, [&](GeneratedCustomer&& g) { one.push_back(std::move(g)); }, 1);
  generate(c, [&](GeneratedCustomer&& g) { three.push_back(std::move(g)); }, 3);
  REQUIRE(one.size() == 140);
  std::map<int, std::size_t> per_group;
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].index == i);
    CHECK(one[i].transactions == three[i].transactions);
    CHECK(one[i].archetype == three[i].archetype);
    CHECK(one[i].record.account_open_date <= c.window.last);
    ++per_group[one[i].archetype];
    for (std::size_t t = 0; t < one[i].transactions.size(); ++t) {
      const auto& r = one[i].transactions[t];
      CHECK(r.customer_id == one[i].record.customer_id);
      CHECK(c.window.contains(day_of(r.timestamp)));
      CHECK(r.amount.cents() > 0);
      if (t > 0) CHECK(one[i].transactions[t - 1].timestamp <= r.timestamp);
    }
  }
  const std::vector<double> shares{0.40, 0.20, 0.06, 0.06, 0.12, 0.10, 0.06};
  const auto expect = allocate_customers(shares, 140);
  for (std::size_t g = 0; g < expect.size(); ++g) CHECK(per_group[static_cast<int>(g)] == expect[g]);
}

TEST_CASE("below-threshold amounts stay under the reporting threshold") {
  auto c = bundled_config("seven", 70);
  std::size_t seen = 0;
  generate(c, [&](GeneratedCustomer&& g) {
    if (c.archetypes[static_cast<std::size_t>(g.archetype)].amount_mode != AmountMode::below_threshold) return;
    for (const auto& t : g.transactions) {
      if (t.direction != Direction::credit) continue;
      ++seen;
      CHECK(t.amount.units() < c.reporting_threshold);
      CHECK(t.amount.units() >= c.reporting_threshold * (1 - c.threshold_band) - 0.01);
    }
  });
  CHECK(seen > 0);
}

TEST_CASE("files written by the generator parse back") {
  const auto dir = testing::scratch_dir("synth-files");
  auto c = bundled_config("two", 30);
  const auto files = generate_to_files(c, dir, 2);
  std::ifstream tin(files.transactions);
  IngestSummary s;
  const auto txns = parse_transactions(tin, {}, {}, &s);
  CHECK(s.rejected == 0);
  CHECK(txns.size() == files.transaction_count);
  std::ifstream cin(files.customers);
  CHECK(parse_customers(cin).size() == 30);
  std::ifstream gin(files.ground_truth);
  const auto truth = read_labels_csv(gin);
  CHECK(truth.size() == 30);
}
