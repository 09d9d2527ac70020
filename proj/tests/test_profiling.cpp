#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "amlprof/profile_io.hpp"
#include "amlprof/profiling.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace amlprof;

namespace {

const DateRange kWindow = DateRange::parse("2014-01-01", "2014-04-30");

std::vector<TransactionRecord> random_ledger(std::mt19937_64& rng, int customers, int per_customer) {
  std::vector<TransactionRecord> out;
  std::uniform_int_distribution<int> day(0, kWindow.days() - 1), svc(0, 12), cents(1, 500000), hour(0, 23);
  std::bernoulli_distribution debit(0.5), inter(0.3);
  for (int c = 0; c < customers; ++c) {
    for (int i = 0; i < per_customer; ++i) {
      TransactionRecord r;
      r.customer_id = "C" + std::to_string(c);
      r.account_id = "A" + std::to_string(c);
      r.timestamp = std::chrono::sys_seconds(kWindow.first) + std::chrono::days(day(rng)) + std::chrono::hours(hour(rng));
      r.amount = Money::from_cents(cents(rng));
      r.direction = debit(rng) ? Direction::debit : Direction::credit;
      r.service_code = svc(rng);
      r.txn_type_code = 3;
      if (r.direction == Direction::debit && inter(rng)) r.counterparty_bank = "B1";
      out.push_back(r);
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::vector<CustomerRecord> register_for(int customers) {
  std::vector<CustomerRecord> reg;
  for (int c = 0; c < customers; ++c) {
    reg.push_back({"C" + std::to_string(c), kWindow.first - std::chrono::days(100 * c)});
  }
  return reg;
}

}  // namespace

TEST_CASE("phase-1 profile matches a direct recomputation") {
  std::mt19937_64 rng(11);
  const auto ledger = random_ledger(rng, 12, 80);
  const auto reg = register_for(12);
  const auto table = build_profiles_phase1(ledger, reg, kWindow);
  REQUIRE(table.size() == 12);
  CHECK(table.schema.size() == 13);
  std::map<std::string, Date> open;
  for (const auto& c : reg) open[c.customer_id] = c.account_open_date;
  for (const auto& p : table.profiles) {
    std::vector<TransactionRecord> mine;
    for (const auto& t : ledger) {
      if (t.customer_id == p.customer_id) mine.push_back(t);
    }
    const auto expect = oracle::phase1_profile(mine, kWindow, open[p.customer_id]);
    REQUIRE(expect.size() == p.values.size());
    for (std::size_t j = 0; j < expect.size(); ++j) {
      CHECK(p.values[j] == doctest::Approx(expect[j]).epsilon(1e-9));
    }
  }
}

TEST_CASE("profiles do not depend on input order or accumulator merging") {
  std::mt19937_64 rng(12);
  auto ledger = random_ledger(rng, 20, 60);
  const auto reg = register_for(20);
  const auto whole = build_profiles_phase2(ledger, reg, kWindow);
  std::shuffle(ledger.begin(), ledger.end(), rng);
  ProfileAccumulator a(ProfilePhase::phase2, kWindow), b(ProfilePhase::phase2, kWindow);
  for (std::size_t i = 0; i < ledger.size(); ++i) (i % 3 == 0 ? a : b).add(ledger[i]);
  a.merge(std::move(b));
  CHECK(a.finish(reg) == whole);
}

TEST_CASE("phase-2 flow attributes on a hand-built ledger") {
  using testing::txn;
  std::vector<TransactionRecord> l{
      txn("C1", "2014-01-01T09:00:00", 100000, Direction::credit),
      txn("C1", "2014-01-04T09:00:00", 40000, Direction::debit, 0, 3, std::string("B2")),
      txn("C1", "2014-01-11T09:00:00", 40000, Direction::debit, 0, 3),
      txn("C1", "2014-01-11T10:00:00", 20000, Direction::debit, 0, 1)};
  const auto t = build_profiles_phase2(l, std::vector<CustomerRecord>{{"C1", testing::day("2010-01-01")}}, kWindow);
  const auto& s = t.schema;
  const auto& v = t.profiles[0].values;
  CHECK(v[*s.index_of("total_credited")] == 1000.0);
  CHECK(v[*s.index_of("total_debited")] == 1000.0);
  CHECK(v[*s.index_of("interbank_outflow_ratio")] == doctest::Approx(0.4));
  CHECK(v[*s.index_of("intrabank_transfer_ratio")] == doctest::Approx(0.4));
  // 400 after 3 days, 600 after 10 days.
  CHECK(v[*s.index_of("in_out_lag_days")] == doctest::Approx(7.2));
  CHECK(v[*s.index_of("outflow_share")] == doctest::Approx(0.5));
}

TEST_CASE("FIFO lag equals a cent-by-cent simulation") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> amount(0, 30), gap(1, 4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::array<std::int64_t, 3>> flows;
    std::int64_t d = 0;
    for (int i = 0; i < 12; ++i) {
      d += gap(rng);
      flows.push_back({d, amount(rng), amount(rng)});
    }
    const auto fast = fifo_in_out_lag(flows);
    const auto slow = oracle::fifo_lag_by_cent(flows);
    REQUIRE(fast.has_value() == slow.has_value());
    if (fast) CHECK(*fast == doctest::Approx(*slow).epsilon(1e-12));
  }
}

TEST_CASE("accumulator contract violations") {
  ProfileAccumulator acc(ProfilePhase::phase2, kWindow);
  CHECK_THROWS_AS(acc.add(testing::txn("C1", "2014-05-01", 1, Direction::credit)), DataError);
  acc.add(testing::txn("C9", "2014-02-01", 1, Direction::credit));
  CHECK_THROWS_AS(acc.finish(register_for(2)), DataError);
  CHECK_THROWS_AS(ProfileAccumulator(ProfilePhase::phase1, DateRange::parse("2014-01-01", "2014-01-10")),
                  ConfigError);
}

namespace {

ProfileTable one_column(const std::vector<double>& values) {
  ProfileTable t;
  t.schema = AttributeSchema({{"x", AttributeKind::numeric, {}}});
  for (std::size_t i = 0; i < values.size(); ++i) t.profiles.push_back({"C" + std::to_string(i), {values[i]}, {}});
  return t;
}

}  // namespace

TEST_CASE("equal-frequency cuts and the concentration fallback") {
  const auto d = fit_discretization(one_column({1, 2, 3, 4, 5, 6, 7, 8, 9}));
  REQUIRE(d.attributes[0].cuts == std::vector<double>{3, 6});
  CHECK(d.attributes[0].bin(3) == 0);
  CHECK(d.attributes[0].bin(3.5) == 1);
  CHECK(d.attributes[0].bin(100) == 2);

  const auto z = fit_discretization(one_column({0, 0, 0, 0, 0, 1, 2, 3, 4}));
  CHECK(z.attributes[0].cuts == std::vector<double>{0});

  const auto top = fit_discretization(one_column({1, 2, 5, 5, 5, 5, 5}));
  CHECK(top.attributes[0].cuts == std::vector<double>{2});

  const auto flat = fit_discretization(one_column({4, 4, 4}));
  CHECK(flat.attributes[0].excluded);
  CHECK(apply_discretization(one_column({4, 4, 4}), flat).schema.size() == 0);
  CHECK(flat.warnings().size() == 1);

  const auto tied = fit_discretization(one_column({1, 2, 2, 2, 2, 3, 4}), 0.9);
  CHECK(tied.attributes[0].cuts.size() == 1);
}

TEST_CASE("discretization bins hold roughly a third of the rows each") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::vector<double> v(3000);
  for (auto& x : v) x = g(rng);
  const auto t = one_column(v);
  const auto nom = apply_discretization(t, fit_discretization(t));
  std::array<int, 3> counts{};
  for (const auto& p : nom.profiles) ++counts[static_cast<std::size_t>(p.values[0])];
  for (int c : counts) CHECK(c == 1000);
  nom.validate();
}

TEST_CASE("profiles and sidecars round-trip through files") {
  std::mt19937_64 rng(21);
  const auto table = build_profiles_phase2(random_ledger(rng, 6, 30), register_for(6), kWindow);
  const auto dir = testing::scratch_dir("profile-io");
  save_profiles(dir / "p", table, ProfileSidecar{table.schema, 2, "numeric", std::nullopt});
  ProfileSidecar side;
  CHECK(load_profiles(dir / "p", &side) == table);
  CHECK(side.phase == 2);

  const auto ds = fit_discretization(table);
  const auto nom = apply_discretization(table, ds);
  save_profiles(dir / "n", nom, ProfileSidecar{nom.schema, 2, "nominal", ds});
  CHECK(load_profiles(dir / "n", &side) == nom);
  REQUIRE(side.discretization);
  CHECK(*side.discretization == ds);

  auto labelled = table;
  for (std::size_t i = 0; i < labelled.size(); ++i) labelled.profiles[i].label = static_cast<int>(i % 2);
  std::ostringstream out;
  write_labels_csv(out, labelled);
  std::istringstream in(out.str());
  auto copy = table;
  attach_labels(copy, read_labels_csv(in));
  CHECK(copy.labels() == labelled.labels());
}
