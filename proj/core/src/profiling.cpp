#include "amlprof/profiling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_set>

namespace amlprof {
namespace {

const char* const kPhase1Names[] = {
    "svc_distinct_mavg", "svc_distinct_msd", "svc_uses_mavg", "svc_uses_msd", "txn_mavg",
    "txn_msd",           "debit_mavg",       "debit_msd",     "credit_mavg",  "credit_msd",
    "amount_avg",        "amount_sd",        "account_age_years",
};

const char* const kPhase2Extra[] = {
    "total_credited",  "total_debited",   "interbank_outflow_ratio", "intrabank_transfer_ratio",
    "in_out_lag_days", "outflow_share",
};

// Population mean and standard deviation of a monthly series.
template <typename Get>
std::pair<double, double> monthly_moments(const std::vector<auto>& months, Get get) {
  const double m = static_cast<double>(months.size());
  double sum = 0.0;
  for (const auto& ms : months) sum += get(ms);
  const double mean = sum / m;
  double ss = 0.0;
  for (const auto& ms : months) {
    const double d = get(ms) - mean;
    ss += d * d;
  }
  return {mean, std::sqrt(ss / m)};
}

}  // namespace

// ---- AttributeSchema -------------------------------------------------------------

AttributeSchema::AttributeSchema(std::vector<Attribute> attributes) : attrs_(std::move(attributes)) {
  std::unordered_set<std::string> seen;
  for (const auto& a : attrs_) {
    if (!seen.insert(a.name).second) throw ConfigError("duplicate attribute name '" + a.name + "'");
    if (a.kind == AttributeKind::nominal && a.levels.size() < 2) {
      throw ConfigError("nominal attribute '" + a.name + "' needs at least 2 levels");
    }
  }
}

std::optional<std::size_t> AttributeSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < attrs_.size(); ++i) {
    if (attrs_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<AttributeKind> AttributeSchema::kinds() const {
  std::vector<AttributeKind> out;
  out.reserve(attrs_.size());
  for (const auto& a : attrs_) out.push_back(a.kind);
  return out;
}

bool AttributeSchema::all_nominal() const {
  return std::all_of(attrs_.begin(), attrs_.end(), [](const Attribute& a) { return a.kind == AttributeKind::nominal; });
}

nlohmann::json AttributeSchema::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& a : attrs_) {
    nlohmann::json j{{"name", a.name}, {"kind", a.kind == AttributeKind::numeric ? "numeric" : "nominal"}};
    if (a.kind == AttributeKind::nominal) j["levels"] = a.levels;
    arr.push_back(std::move(j));
  }
  return arr;
}

AttributeSchema AttributeSchema::from_json(const nlohmann::json& j) {
  std::vector<Attribute> attrs;
  for (const auto& e : j) {
    Attribute a;
    a.name = e.at("name").get<std::string>();
    const auto kind = e.at("kind").get<std::string>();
    if (kind == "numeric") {
      a.kind = AttributeKind::numeric;
    } else if (kind == "nominal") {
      a.kind = AttributeKind::nominal;
      a.levels = e.at("levels").get<std::vector<std::string>>();
    } else {
      throw ConfigError("unknown attribute kind '" + kind + "'");
    }
    attrs.push_back(std::move(a));
  }
  return AttributeSchema(std::move(attrs));
}

// ---- ProfileTable ------------------------------------------------------------------

Matrix ProfileTable::matrix() const {
  Matrix m(profiles.size(), schema.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    auto row = m.row(i);
    std::copy(profiles[i].values.begin(), profiles[i].values.end(), row.begin());
  }
  return m;
}

std::vector<int> ProfileTable::labels() const {
  std::vector<int> out;
  out.reserve(profiles.size());
  for (const auto& p : profiles) {
    if (!p.label) throw DataError("profile " + p.customer_id + " has no cluster label");
    out.push_back(*p.label);
  }
  return out;
}

void ProfileTable::validate() const {
  for (const auto& p : profiles) {
    if (p.values.size() != schema.size()) {
      throw DataError("profile " + p.customer_id + " has " + std::to_string(p.values.size()) +
                      " values, schema has " + std::to_string(schema.size()));
    }
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const double v = p.values[j];
      if (!std::isfinite(v)) throw DataError("profile " + p.customer_id + " has a non-finite value");
      if (schema.is_nominal(j) && (v < 0 || v >= static_cast<double>(schema.level_count(j)) || v != std::floor(v))) {
        throw DataError("profile " + p.customer_id + " has an invalid level index for " + schema[j].name);
      }
    }
  }
}

AttributeSchema phase1_schema() {
  std::vector<Attribute> attrs;
  for (const char* n : kPhase1Names) attrs.push_back({n, AttributeKind::numeric, {}});
  return AttributeSchema(std::move(attrs));
}

AttributeSchema phase2_schema() {
  std::vector<Attribute> attrs = phase1_schema().attributes();
  for (const char* n : kPhase2Extra) attrs.push_back({n, AttributeKind::numeric, {}});
  return AttributeSchema(std::move(attrs));
}

// ---- FIFO lag ------------------------------------------------------------------------

std::optional<double> fifo_in_out_lag(std::span<const std::array<std::int64_t, 3>> flows) {
  struct Lot {
    std::int64_t day;
    std::int64_t remaining;
  };
  std::vector<Lot> queue;
  std::size_t head = 0;
  int128 weighted = 0;
  int128 matched = 0;
  for (const auto& [day, credit, debit] : flows) {
    if (credit > 0) queue.push_back({day, credit});
    std::int64_t need = debit;
    while (need > 0 && head < queue.size()) {
      Lot& lot = queue[head];
      const std::int64_t take = std::min(need, lot.remaining);
      weighted += static_cast<int128>(take) * (day - lot.day);
      matched += take;
      lot.remaining -= take;
      need -= take;
      if (lot.remaining == 0) ++head;
    }
  }
  if (matched == 0) return std::nullopt;
  return static_cast<double>(static_cast<long double>(weighted) / static_cast<long double>(matched));
}

// ---- ProfileAccumulator ------------------------------------------------------------

ProfileAccumulator::ProfileAccumulator(ProfilePhase phase, DateRange window, ProfileOptions options)
    : phase_(phase), window_(window), options_(std::move(options)), months_(window.month_count()) {
  if (window_.days() < 28) throw ConfigError("profiling window must span at least one month");
}

void ProfileAccumulator::compact_days(CustomerState& s) {
  auto& d = s.days;
  std::sort(d.begin(), d.end(), [](const DayFlow& a, const DayFlow& b) { return a.day < b.day; });
  std::size_t w = 0;
  for (std::size_t r = 0; r < d.size(); ++r) {
    if (w > 0 && d[w - 1].day == d[r].day) {
      d[w - 1].credit += d[r].credit;
      d[w - 1].debit += d[r].debit;
    } else {
      d[w++] = d[r];
    }
  }
  d.resize(w);
}

void ProfileAccumulator::add(const TransactionRecord& r) {
  const Date day = day_of(r.timestamp);
  if (!window_.contains(day)) {
    throw DataError("transaction of " + r.customer_id + " dated " + format_date(day) + " is outside the window");
  }
  CustomerState* s = last_state_;
  if (s == nullptr || r.customer_id != last_id_) {
    auto [it, inserted] = customers_.try_emplace(r.customer_id);
    s = &it->second;
    if (inserted) s->months.resize(static_cast<std::size_t>(months_));
    last_id_ = r.customer_id;
    last_state_ = s;
  }

  const std::int64_t cents = r.amount.cents();
  const bool debit = r.direction == Direction::debit;
  MonthStats& m = s->months[static_cast<std::size_t>(window_.month_index(day))];
  ++m.txns;
  if (debit) {
    ++m.debits;
  } else {
    ++m.credits;
  }
  if (r.service_code > 0) {
    ++m.service_uses;
    m.service_mask |= std::uint64_t{1} << r.service_code;
  }
  ++s->count;
  s->amount_sum += cents;
  s->amount_sq_sum += static_cast<uint128>(cents) * static_cast<uint128>(cents);

  if (phase_ == ProfilePhase::phase2) {
    if (debit) {
      s->debited += cents;
      if (r.counterparty_bank) {
        s->interbank_debited += cents;
      } else if (options_.transfer_txn_type_codes.contains(r.txn_type_code)) {
        s->intrabank_transfer_debited += cents;
      }
    } else {
      s->credited += cents;
    }
    const auto offset = static_cast<std::int32_t>((day - window_.first).count());
    auto& days = s->days;
    if (!days.empty() && days.back().day == offset) {
      (debit ? days.back().debit : days.back().credit) += cents;
    } else {
      days.push_back({offset, debit ? 0 : cents, debit ? cents : 0});
      // Out-of-order input can repeat days; merge them before the buffer outgrows the window.
      if (days.size() > 2 * static_cast<std::size_t>(window_.days())) compact_days(*s);
    }
  }
}

void ProfileAccumulator::merge(ProfileAccumulator&& other) {
  if (other.window_.first != window_.first || other.window_.last != window_.last || other.phase_ != phase_) {
    throw ConfigError("cannot merge profile accumulators over different windows or phases");
  }
  last_state_ = nullptr;
  last_id_.clear();
  for (auto& [id, src] : other.customers_) {
    auto [it, inserted] = customers_.try_emplace(id);
    CustomerState& dst = it->second;
    if (inserted) {
      dst = std::move(src);
      continue;
    }
    for (std::size_t i = 0; i < dst.months.size(); ++i) {
      dst.months[i].service_mask |= src.months[i].service_mask;
      dst.months[i].txns += src.months[i].txns;
      dst.months[i].debits += src.months[i].debits;
      dst.months[i].credits += src.months[i].credits;
      dst.months[i].service_uses += src.months[i].service_uses;
    }
    dst.count += src.count;
    dst.amount_sum += src.amount_sum;
    dst.amount_sq_sum += src.amount_sq_sum;
    dst.credited += src.credited;
    dst.debited += src.debited;
    dst.interbank_debited += src.interbank_debited;
    dst.intrabank_transfer_debited += src.intrabank_transfer_debited;
    dst.days.insert(dst.days.end(), src.days.begin(), src.days.end());
    compact_days(dst);
  }
  other.customers_.clear();
  other.last_state_ = nullptr;
}

void ProfileAccumulator::fill_profile(const CustomerState& s, Date open_date, std::vector<double>& out) const {
  out.clear();
  auto push_moments = [&](auto get) {
    auto [mean, sd] = monthly_moments(s.months, get);
    out.push_back(mean);
    out.push_back(sd);
  };
  push_moments([](const MonthStats& m) { return static_cast<double>(std::popcount(m.service_mask)); });
  push_moments([](const MonthStats& m) { return static_cast<double>(m.service_uses); });
  push_moments([](const MonthStats& m) { return static_cast<double>(m.txns); });
  push_moments([](const MonthStats& m) { return static_cast<double>(m.debits); });
  push_moments([](const MonthStats& m) { return static_cast<double>(m.credits); });

  const auto n = static_cast<long double>(s.count);
  const long double mean_cents = static_cast<long double>(s.amount_sum) / n;
  // n*Q - S^2 is exact in 128-bit integers for any realistic ledger.
  const int128 num = static_cast<int128>(s.count) * static_cast<int128>(s.amount_sq_sum) -
                       s.amount_sum * s.amount_sum;
  const long double sd_cents = num > 0 ? std::sqrt(static_cast<long double>(num)) / n : 0.0L;
  out.push_back(static_cast<double>(mean_cents / 100.0L));
  out.push_back(static_cast<double>(sd_cents / 100.0L));
  out.push_back(static_cast<double>((window_.last - open_date).count()) / 365.25);

  if (phase_ == ProfilePhase::phase2) {
    const double credited = static_cast<double>(s.credited) / 100.0;
    const double debited = static_cast<double>(s.debited) / 100.0;
    out.push_back(credited);
    out.push_back(debited);
    out.push_back(s.debited > 0 ? static_cast<double>(s.interbank_debited) / static_cast<double>(s.debited) : 0.0);
    out.push_back(s.debited > 0 ? static_cast<double>(s.intrabank_transfer_debited) / static_cast<double>(s.debited)
                                : 0.0);
    std::vector<std::array<std::int64_t, 3>> flows;
    flows.reserve(s.days.size());
    for (const auto& d : s.days) flows.push_back({d.day, d.credit, d.debit});
    const auto lag = fifo_in_out_lag(flows);
    // Money that never leaves is assigned the whole window.
    out.push_back(lag ? *lag : static_cast<double>(window_.days()));
    out.push_back(static_cast<double>(s.debited) / static_cast<double>(s.credited + s.debited));
  }
}

ProfileTable ProfileAccumulator::finish(std::span<const CustomerRecord> reg) const {
  std::unordered_map<std::string_view, Date> open_dates;
  open_dates.reserve(reg.size());
  for (const auto& c : reg) open_dates.emplace(c.customer_id, c.account_open_date);

  std::vector<const std::string*> ids;
  ids.reserve(customers_.size());
  std::vector<std::string> unknown;
  for (const auto& [id, state] : customers_) {
    if (!open_dates.contains(id)) unknown.push_back(id);
    ids.push_back(&id);
  }
  if (!unknown.empty()) {
    std::sort(unknown.begin(), unknown.end());
    std::string msg = std::to_string(unknown.size()) + " transaction customer id(s) missing from the register:";
    for (std::size_t i = 0; i < unknown.size() && i < 20; ++i) msg += " " + unknown[i];
    if (unknown.size() > 20) msg += " ...";
    throw DataError(msg);
  }
  std::sort(ids.begin(), ids.end(), [](const std::string* a, const std::string* b) { return *a < *b; });

  ProfileTable table;
  table.schema = phase_ == ProfilePhase::phase1 ? phase1_schema() : phase2_schema();
  table.profiles.resize(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    CustomerState state = customers_.at(*ids[i]);
    if (phase_ == ProfilePhase::phase2) compact_days(state);
    const Date open = open_dates.at(*ids[i]);
    if (open > window_.last) throw DataError("customer " + *ids[i] + " opened the account after the window");
    table.profiles[i].customer_id = *ids[i];
    fill_profile(state, open, table.profiles[i].values);
  }
  return table;
}

ProfileTable build_profiles_phase1(std::span<const TransactionRecord> txns, std::span<const CustomerRecord> reg,
                                   DateRange window) {
  ProfileAccumulator acc(ProfilePhase::phase1, window);
  for (const auto& t : txns) acc.add(t);
  return acc.finish(reg);
}

ProfileTable build_profiles_phase2(std::span<const TransactionRecord> txns, std::span<const CustomerRecord> reg,
                                   DateRange window, const ProfileOptions& options) {
  ProfileAccumulator acc(ProfilePhase::phase2, window, options);
  for (const auto& t : txns) acc.add(t);
  return acc.finish(reg);
}

}  // namespace amlprof
