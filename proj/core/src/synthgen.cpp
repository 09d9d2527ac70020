#include "amlprof/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "amlprof/parallel.hpp"

namespace amlprof {

namespace {

void check_ratio(double v, const std::string& what) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(what + " must be in [0,1]");
}

std::string amount_mode_name(AmountMode m) { return m == AmountMode::lognormal ? "lognormal" : "below_threshold"; }

AmountMode parse_amount_mode(const std::string& s) {
  if (s == "lognormal") return AmountMode::lognormal;
  if (s == "below_threshold") return AmountMode::below_threshold;
  throw ConfigError("unknown amount mode '" + s + "'");
}

std::string padded(char prefix, std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, value);
  return buf;
}

}  // namespace

// ---- configuration -------------------------------------------------------------------------

void ArchetypeSpec::validate(int window_days) const {
  const std::string who = "archetype '" + name + "': ";
  if (name.empty()) throw ConfigError("archetype without a name");
  if (!(proportion >= 0.0)) throw ConfigError(who + "proportion must be >= 0");
  if (!(credits_per_month >= 0.0)) throw ConfigError(who + "credits_per_month must be >= 0");
  if (debits_per_credit < 0) throw ConfigError(who + "debits_per_credit must be >= 0");
  check_ratio(outflow_share, who + "outflow_share");
  check_ratio(interbank_ratio, who + "interbank_ratio");
  check_ratio(intrabank_ratio, who + "intrabank_ratio");
  check_ratio(service_share, who + "service_share");
  if (interbank_ratio + intrabank_ratio > 1.0 + 1e-12) throw ConfigError(who + "transfer ratios sum above 1");
  if (!(amount_median > 0.0) || !(amount_sigma >= 0.0)) throw ConfigError(who + "invalid amount distribution");
  if (lag_days[0] < 0 || lag_days[1] < lag_days[0]) throw ConfigError(who + "lag_days must satisfy 0 <= min <= max");
  if (lag_days[1] >= window_days) throw ConfigError(who + "lag_days exceed the generation window");
  if (services < 1 || services > 40) throw ConfigError(who + "services must be in 1..40");
  if (account_age_years[0] < 0.0 || account_age_years[1] < account_age_years[0]) {
    throw ConfigError(who + "account_age_years must satisfy 0 <= min <= max");
  }
}

nlohmann::json ArchetypeSpec::to_json() const {
  return {{"name", name},
          {"proportion", proportion},
          {"credits_per_month", credits_per_month},
          {"debits_per_credit", debits_per_credit},
          {"outflow_share", outflow_share},
          {"amount_mode", amount_mode_name(amount_mode)},
          {"amount_median", amount_median},
          {"amount_sigma", amount_sigma},
          {"lag_days", lag_days},
          {"interbank_ratio", interbank_ratio},
          {"intrabank_ratio", intrabank_ratio},
          {"service_share", service_share},
          {"services", services},
          {"account_age_years", account_age_years}};
}

ArchetypeSpec ArchetypeSpec::from_json(const nlohmann::json& j) {
  ArchetypeSpec a;
  a.name = j.at("name").get<std::string>();
  a.proportion = j.at("proportion").get<double>();
  a.credits_per_month = j.value("credits_per_month", a.credits_per_month);
  a.debits_per_credit = j.value("debits_per_credit", a.debits_per_credit);
  a.outflow_share = j.value("outflow_share", a.outflow_share);
  a.amount_mode = parse_amount_mode(j.value("amount_mode", std::string("lognormal")));
  a.amount_median = j.value("amount_median", a.amount_median);
  a.amount_sigma = j.value("amount_sigma", a.amount_sigma);
  a.lag_days = j.value("lag_days", a.lag_days);
  a.interbank_ratio = j.value("interbank_ratio", a.interbank_ratio);
  a.intrabank_ratio = j.value("intrabank_ratio", a.intrabank_ratio);
  a.service_share = j.value("service_share", a.service_share);
  a.services = j.value("services", a.services);
  a.account_age_years = j.value("account_age_years", a.account_age_years);
  return a;
}

void GeneratorConfig::validate() const {
  if (archetypes.empty()) throw ConfigError("generator needs at least one archetype");
  if (n_customers < archetypes.size()) throw ConfigError("n_customers must be >= the number of archetypes");
  if (n_customers > 9'999'999) throw ConfigError("n_customers must be below 10,000,000");
  if (!(noise >= 0.0 && noise < 1.0)) throw ConfigError("noise must be in [0,1)");
  if (!(heterogeneity >= 0.0)) throw ConfigError("heterogeneity must be >= 0");
  if (!(reporting_threshold > 0.0)) throw ConfigError("reporting_threshold must be > 0");
  if (!(threshold_band > 0.0 && threshold_band < 1.0)) throw ConfigError("threshold_band must be in (0,1)");
  if (fees_per_month < 0) throw ConfigError("fees_per_month must be >= 0");
  if (counterparty_banks < 1 || counterparty_banks > 999) throw ConfigError("counterparty_banks must be in 1..999");
  if (window.last < window.first) throw ConfigError("window ends before it starts");
  double total = 0.0;
  for (const auto& a : archetypes) {
    a.validate(window.days());
    total += a.proportion;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("archetype proportions must sum to 1");
}

nlohmann::json GeneratorConfig::to_json() const {
  nlohmann::json arch = nlohmann::json::array();
  for (const auto& a : archetypes) arch.push_back(a.to_json());
  return {{"n_customers", n_customers},
          {"window", {{"first", format_date(window.first)}, {"last", format_date(window.last)}}},
          {"seed", seed},
          {"noise", noise},
          {"heterogeneity", heterogeneity},
          {"reporting_threshold", reporting_threshold},
          {"threshold_band", threshold_band},
          {"fees_per_month", fees_per_month},
          {"counterparty_banks", counterparty_banks},
          {"archetypes", arch}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.n_customers = j.at("n_customers").get<std::size_t>();
  c.window = DateRange::parse(j.at("window").at("first").get<std::string>(),
                              j.at("window").at("last").get<std::string>());
  c.seed = j.value("seed", c.seed);
  c.noise = j.value("noise", c.noise);
  c.heterogeneity = j.value("heterogeneity", c.heterogeneity);
  c.reporting_threshold = j.value("reporting_threshold", c.reporting_threshold);
  c.threshold_band = j.value("threshold_band", c.threshold_band);
  c.fees_per_month = j.value("fees_per_month", c.fees_per_month);
  c.counterparty_banks = j.value("counterparty_banks", c.counterparty_banks);
  for (const auto& a : j.at("archetypes")) c.archetypes.push_back(ArchetypeSpec::from_json(a));
  c.validate();
  return c;
}

// ---- bundled configurations -------------------------------------------------------------------

namespace {

ArchetypeSpec make(std::string name, double proportion) {
  ArchetypeSpec a;
  a.name = std::move(name);
  a.proportion = proportion;
  return a;
}

std::vector<ArchetypeSpec> seven_archetypes() {
  std::vector<ArchetypeSpec> v;

  auto standard = make("standard", 0.40);
  standard.credits_per_month = 4.0;
  standard.debits_per_credit = 2;
  standard.outflow_share = 0.85;
  standard.amount_median = 1250.0;
  standard.amount_sigma = 0.25;
  standard.lag_days = {2, 10};
  standard.interbank_ratio = 0.0;
  standard.intrabank_ratio = 0.0;
  standard.service_share = 1.0;
  standard.services = 2;
  standard.account_age_years = {5.0, 7.0};
  v.push_back(standard);

  auto services = make("high_service", 0.20);
  services.credits_per_month = 6.0;
  services.debits_per_credit = 2;
  services.outflow_share = 0.90;
  services.amount_median = 3000.0;
  services.amount_sigma = 0.25;
  services.lag_days = {1, 5};
  services.interbank_ratio = 0.0;
  services.intrabank_ratio = 1.0;
  services.service_share = 1.0;
  services.services = 6;
  services.account_age_years = {15.0, 17.0};
  v.push_back(services);

  auto pass = make("same_day_pass_through", 0.06);
  pass.credits_per_month = 3.0;
  pass.debits_per_credit = 1;
  pass.outflow_share = 0.98;
  pass.amount_median = 20000.0;
  pass.amount_sigma = 0.0;
  pass.lag_days = {0, 0};
  pass.interbank_ratio = 1.0;
  pass.intrabank_ratio = 0.0;
  pass.service_share = 0.0;
  pass.services = 1;
  pass.account_age_years = {0.5, 1.0};
  v.push_back(pass);

  auto legal = make("legal_limits", 0.06);
  legal.credits_per_month = 10.0;
  legal.debits_per_credit = 1;
  legal.outflow_share = 0.95;
  legal.amount_mode = AmountMode::below_threshold;
  legal.lag_days = {10, 14};
  legal.interbank_ratio = 0.0;
  legal.intrabank_ratio = 0.0;
  legal.service_share = 0.0;
  legal.services = 1;
  legal.account_age_years = {8.0, 9.0};
  v.push_back(legal);

  auto saver = make("saver", 0.12);
  saver.credits_per_month = 2.0;
  saver.debits_per_credit = 1;
  saver.outflow_share = 0.15;
  saver.amount_median = 4000.0;
  saver.lag_days = {20, 24};
  saver.interbank_ratio = 0.0;
  saver.intrabank_ratio = 1.0;
  saver.amount_sigma = 0.0;
  saver.service_share = 0.0;
  saver.services = 1;
  saver.account_age_years = {26.0, 28.0};
  v.push_back(saver);

  auto business = make("business", 0.10);
  business.credits_per_month = 25.0;
  business.debits_per_credit = 2;
  business.outflow_share = 0.92;
  business.amount_median = 900.0;
  business.amount_sigma = 0.25;
  business.lag_days = {1, 7};
  business.interbank_ratio = 0.05;
  business.intrabank_ratio = 0.70;
  business.service_share = 1.0;
  business.services = 6;
  business.account_age_years = {11.0, 13.0};
  v.push_back(business);

  auto dormant = make("dormant", 0.06);
  dormant.credits_per_month = 2.0;
  dormant.debits_per_credit = 0;
  dormant.outflow_share = 0.0;
  dormant.amount_median = 300.0;
  dormant.lag_days = {0, 0};
  dormant.interbank_ratio = 0.0;
  dormant.intrabank_ratio = 0.0;
  dormant.service_share = 0.0;
  dormant.services = 1;
  dormant.account_age_years = {0.0, 1.0};
  v.push_back(dormant);
  return v;
}

}  // namespace

GeneratorConfig bundled_config(std::string_view name, std::size_t n_customers) {
  GeneratorConfig c;
  c.window = DateRange::parse("2014-01-01", "2014-12-31");
  c.seed = 2014;
  c.heterogeneity = 0.02;
  auto seven = seven_archetypes();
  if (name == "seven") {
    c.n_customers = 50'000;
    c.archetypes = seven;
  } else if (name == "six") {
    c.n_customers = 3'000;
    // Without the dormant group, and with the risk groups large enough that a seeded
    // k-means run rarely misses them.
    seven.erase(seven.begin() + 6);
    const std::array<double, 6> shares{0.30, 0.18, 0.12, 0.12, 0.14, 0.14};
    for (std::size_t i = 0; i < shares.size(); ++i) seven[i].proportion = shares[i];
    c.archetypes = seven;
  } else if (name == "two") {
    c.n_customers = 1'000;
    auto a = seven[0];
    auto b = seven[2];
    a.proportion = 0.5;
    b.proportion = 0.5;
    c.archetypes = {a, b};
  } else {
    throw ConfigError("unknown bundled generator config '" + std::string(name) + "' (expected seven, six or two)");
  }
  if (n_customers) c.n_customers = n_customers;
  // Proportions rescaled above may drift by an ulp; absorb it in the first group.
  double total = 0.0;
  for (const auto& a : c.archetypes) total += a.proportion;
  c.archetypes[0].proportion += 1.0 - total;
  c.validate();
  return c;
}

std::vector<std::size_t> allocate_customers(std::span<const double> proportions, std::size_t n) {
  std::vector<std::size_t> counts(proportions.size());
  std::vector<std::pair<double, std::size_t>> rest;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < proportions.size(); ++i) {
    const double exact = proportions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    rest.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++counts[rest[r % rest.size()].second];
  return counts;
}

// ---- generation ---------------------------------------------------------------------------------

namespace {

struct Plan {
  std::vector<int> archetype;
  std::vector<int> partner;
  std::vector<double> weight;
};

Plan make_plan(const GeneratorConfig& config) {
  const std::size_t n = config.n_customers;
  std::vector<double> props;
  for (const auto& a : config.archetypes) props.push_back(a.proportion);
  const auto counts = allocate_customers(props, n);
  Plan plan;
  for (std::size_t a = 0; a < counts.size(); ++a) plan.archetype.insert(plan.archetype.end(), counts[a], static_cast<int>(a));
  std::mt19937_64 rng(mix_seed(config.seed, 0xA5C1));
  std::shuffle(plan.archetype.begin(), plan.archetype.end(), rng);

  plan.partner.assign(n, -1);
  plan.weight.assign(n, 0.0);
  const auto noisy = static_cast<std::size_t>(std::llround(config.noise * static_cast<double>(n)));
  if (noisy > 0 && config.archetypes.size() > 1) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const int k = static_cast<int>(config.archetypes.size());
    for (std::size_t q = 0; q < noisy; ++q) {
      const std::size_t i = order[q];
      int other = std::uniform_int_distribution<int>(0, k - 2)(rng);
      if (other >= plan.archetype[i]) ++other;
      plan.partner[i] = other;
      plan.weight[i] = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    }
  }
  return plan;
}

ArchetypeSpec blend(const ArchetypeSpec& a, const ArchetypeSpec& b, double w) {
  auto mix = [w](double x, double y) { return (1.0 - w) * x + w * y; };
  auto mix_int = [&](int x, int y) { return static_cast<int>(std::lround(mix(x, y))); };
  ArchetypeSpec s = a;
  s.credits_per_month = mix(a.credits_per_month, b.credits_per_month);
  s.debits_per_credit = mix_int(a.debits_per_credit, b.debits_per_credit);
  s.outflow_share = mix(a.outflow_share, b.outflow_share);
  s.amount_median = std::exp(mix(std::log(a.amount_median), std::log(b.amount_median)));
  s.amount_sigma = mix(a.amount_sigma, b.amount_sigma);
  s.lag_days = {mix_int(a.lag_days[0], b.lag_days[0]), mix_int(a.lag_days[1], b.lag_days[1])};
  s.interbank_ratio = mix(a.interbank_ratio, b.interbank_ratio);
  s.intrabank_ratio = mix(a.intrabank_ratio, b.intrabank_ratio);
  s.service_share = mix(a.service_share, b.service_share);
  s.services = mix_int(a.services, b.services);
  s.account_age_years = {mix(a.account_age_years[0], b.account_age_years[0]),
                         mix(a.account_age_years[1], b.account_age_years[1])};
  return s;
}

Timestamp at(Date day, std::mt19937_64& rng, int from_hour, int to_hour) {
  const auto seconds = std::uniform_int_distribution<int>(from_hour * 3600, to_hour * 3600 - 1)(rng);
  return Timestamp(day) + std::chrono::seconds(seconds);
}

GeneratedCustomer make_customer(const GeneratorConfig& config, const Plan& plan, std::size_t i) {
  std::mt19937_64 rng(mix_seed(config.seed, i));
  const int a = plan.archetype[i];
  const ArchetypeSpec spec = plan.partner[i] < 0 ? config.archetypes[static_cast<std::size_t>(a)]
                                                 : blend(config.archetypes[static_cast<std::size_t>(a)],
                                                         config.archetypes[static_cast<std::size_t>(plan.partner[i])],
                                                         plan.weight[i]);
  GeneratedCustomer out;
  out.index = i;
  out.archetype = a;
  out.noisy = plan.partner[i] >= 0;
  out.record.customer_id = padded('C', i + 1, 7);
  const std::string account = padded('A', i + 1, 7);

  std::normal_distribution<double> standard(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double amount_mult = std::exp(config.heterogeneity * standard(rng));

  std::vector<int> codes(40);
  std::iota(codes.begin(), codes.end(), 1);
  std::shuffle(codes.begin(), codes.end(), rng);
  codes.resize(static_cast<std::size_t>(spec.services));

  const double age = spec.account_age_years[0] + unit(rng) * (spec.account_age_years[1] - spec.account_age_years[0]);
  out.record.account_open_date = config.window.last - std::chrono::days(std::llround(age * 365.25));

  // Customers cycle through their own services, so a regular user touches the whole set
  // each month instead of a random subset.
  std::size_t next_service = std::uniform_int_distribution<std::size_t>(0, codes.size() - 1)(rng);
  auto service = [&]() {
    if (unit(rng) >= spec.service_share) return 0;
    return codes[next_service++ % codes.size()];
  };
  auto add = [&](Timestamp ts, std::int64_t cents, Direction dir, int type, std::optional<std::string> bank) {
    TransactionRecord r;
    r.customer_id = out.record.customer_id;
    r.account_id = account;
    r.timestamp = ts;
    r.amount = Money::from_cents(std::max<std::int64_t>(cents, 1));
    r.direction = dir;
    r.service_code = service();
    r.txn_type_code = type;
    r.counterparty_bank = std::move(bank);
    out.transactions.push_back(std::move(r));
  };
  auto credit_cents = [&]() -> std::int64_t {
    if (spec.amount_mode == AmountMode::below_threshold) {
      const auto cap = static_cast<std::int64_t>(std::llround(config.reporting_threshold * 100.0));
      const double low = config.reporting_threshold * (1.0 - config.threshold_band);
      const auto c = static_cast<std::int64_t>(std::floor((low + unit(rng) * (config.reporting_threshold - low)) * 100.0));
      return std::min(c, cap - 1);
    }
    const double v = spec.amount_median * amount_mult * std::exp(spec.amount_sigma * standard(rng));
    return static_cast<std::int64_t>(std::llround(v * 100.0));
  };

  const auto& w = config.window;
  std::uniform_int_distribution<int> bank_pick(1, config.counterparty_banks);
  for (Date month_first = w.first; month_first <= w.last;) {
    const std::chrono::year_month_day ymd{month_first};
    const Date next_month = std::chrono::sys_days{(ymd.year() / ymd.month() / 1) + std::chrono::months(1)};
    const Date month_last = std::min(next_month - std::chrono::days(1), w.last);
    const int days = static_cast<int>((month_last - month_first).count()) + 1;
    const Date calendar_first = std::chrono::sys_days{ymd.year() / ymd.month() / 1};
    const double month_days = static_cast<double>((next_month - calendar_first).count());
    const double mean = spec.credits_per_month * days / month_days;
    // Regular arrivals: the integer part every month plus one more with the fractional
    // probability. Keeps month-to-month variation low, as for salaries and rents.
    const int credits = static_cast<int>(std::floor(mean)) + (unit(rng) < mean - std::floor(mean) ? 1 : 0);
    for (int c = 0; c < credits; ++c) {
      // When the lag allows it, the credit lands early enough for its debits to fall in
      // the same month.
      const int latest = spec.lag_days[1] < days ? days - 1 - spec.lag_days[1] : days - 1;
      const Date day = month_first + std::chrono::days(std::uniform_int_distribution<int>(0, latest)(rng));
      const std::int64_t cents = credit_cents();
      add(at(day, rng, 8, 12), cents, Direction::credit, txn_type::deposit, std::nullopt);
      if (spec.debits_per_credit == 0 || spec.outflow_share <= 0.0) continue;
      std::vector<double> parts(static_cast<std::size_t>(spec.debits_per_credit));
      for (auto& p : parts) p = 0.5 + unit(rng);
      const double part_total = std::accumulate(parts.begin(), parts.end(), 0.0);
      const double outflow = static_cast<double>(cents) * spec.outflow_share;
      for (double p : parts) {
        const int lag = std::uniform_int_distribution<int>(spec.lag_days[0], spec.lag_days[1])(rng);
        const Date debit_day = std::min(day + std::chrono::days(lag), w.last);
        const auto debit_cents = static_cast<std::int64_t>(std::llround(outflow * p / part_total));
        const double u = unit(rng);
        if (u < spec.interbank_ratio) {
          add(at(debit_day, rng, 12, 20), debit_cents, Direction::debit, txn_type::transfer,
              padded('B', static_cast<std::size_t>(bank_pick(rng)), 3));
        } else if (u < spec.interbank_ratio + spec.intrabank_ratio) {
          add(at(debit_day, rng, 12, 20), debit_cents, Direction::debit, txn_type::transfer, std::nullopt);
        } else {
          add(at(debit_day, rng, 12, 20), debit_cents, Direction::debit, unit(rng) < 0.5 ? txn_type::cash : txn_type::card,
              std::nullopt);
        }
      }
    }
    for (int f = 0; f < config.fees_per_month; ++f) {
      add(at(month_last, rng, 20, 24), 250, Direction::debit, txn_type::bank_fee, std::nullopt);
    }
    month_first = next_month;
  }
  std::stable_sort(out.transactions.begin(), out.transactions.end(),
                   [](const TransactionRecord& x, const TransactionRecord& y) { return x.timestamp < y.timestamp; });
  return out;
}

}  // namespace

void generate(const GeneratorConfig& config, const std::function<void(GeneratedCustomer&&)>& sink, int jobs) {
  config.validate();
  const Plan plan = make_plan(config);
  constexpr std::size_t kBatch = 1024;
  std::vector<GeneratedCustomer> batch;
  for (std::size_t start = 0; start < config.n_customers; start += kBatch) {
    const std::size_t count = std::min(kBatch, config.n_customers - start);
    batch.assign(count, {});
    parallel_for(count, jobs, [&](std::size_t q) { batch[q] = make_customer(config, plan, start + q); });
    for (auto& c : batch) sink(std::move(c));
  }
}

GeneratedFiles generate_to_files(const GeneratorConfig& config, const std::filesystem::path& dir, int jobs) {
  std::filesystem::create_directories(dir);
  GeneratedFiles files{dir / "transactions.csv", dir / "customers.csv", dir / "ground_truth.csv", 0};
  std::ofstream txn_out(files.transactions, std::ios::binary | std::ios::trunc);
  std::ofstream reg_out(files.customers, std::ios::binary | std::ios::trunc);
  std::ofstream truth_out(files.ground_truth, std::ios::binary | std::ios::trunc);
  if (!txn_out || !reg_out || !truth_out) throw DataError("cannot write generator output to " + dir.string());
  TransactionCsvWriter writer(txn_out);
  reg_out << "customer_id,account_open_date\n";
  truth_out << "customer_id,archetype\n";
  generate(
      config,
      [&](GeneratedCustomer&& c) {
        for (const auto& t : c.transactions) writer.write(t);
        files.transaction_count += c.transactions.size();
        reg_out << c.record.customer_id << ',' << format_date(c.record.account_open_date) << '\n';
        truth_out << c.record.customer_id << ',' << c.archetype << '\n';
      },
      jobs);
  txn_out.flush();
  if (!txn_out || !reg_out.flush() || !truth_out.flush()) throw DataError("failed writing generator output");
  return files;
}

}  // namespace amlprof
