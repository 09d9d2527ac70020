#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "amlprof/ingest.hpp"
#include "amlprof/matrix.hpp"
#include "amlprof/types.hpp"

namespace amlprof {

enum class AttributeKind : std::uint8_t { numeric, nominal };

struct Attribute {
  std::string name;
  AttributeKind kind = AttributeKind::numeric;
  /// Ordered level labels; nominal attributes only.
  std::vector<std::string> levels;

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

/// Ordered attribute roster shared by profiles, cluster models and rule sets.
class AttributeSchema {
 public:
  AttributeSchema() = default;
  /// Throws ConfigError on duplicate names or nominal attributes with fewer than 2 levels.
  explicit AttributeSchema(std::vector<Attribute> attributes);

  std::size_t size() const { return attrs_.size(); }
  const Attribute& operator[](std::size_t i) const { return attrs_[i]; }
  const std::vector<Attribute>& attributes() const { return attrs_; }
  std::optional<std::size_t> index_of(std::string_view name) const;

  bool is_nominal(std::size_t i) const { return attrs_[i].kind == AttributeKind::nominal; }
  std::size_t level_count(std::size_t i) const { return attrs_[i].levels.size(); }
  std::vector<AttributeKind> kinds() const;
  bool all_nominal() const;

  nlohmann::json to_json() const;
  static AttributeSchema from_json(const nlohmann::json& j);

  friend bool operator==(const AttributeSchema&, const AttributeSchema&) = default;

 private:
  std::vector<Attribute> attrs_;
};

/// Per-customer feature vector. Nominal values hold their level index.
struct CustomerProfile {
  std::string customer_id;
  std::vector<double> values;
  std::optional<int> label;

  friend bool operator==(const CustomerProfile&, const CustomerProfile&) = default;
};

struct ProfileTable {
  AttributeSchema schema;
  std::vector<CustomerProfile> profiles;

  std::size_t size() const { return profiles.size(); }
  Matrix matrix() const;
  /// Labels in profile order; throws DataError if any profile is unlabeled.
  std::vector<int> labels() const;
  /// Checks lengths, finiteness and nominal index ranges.
  void validate() const;

  friend bool operator==(const ProfileTable&, const ProfileTable&) = default;
};

enum class ProfilePhase { phase1 = 1, phase2 = 2 };

struct ProfileOptions {
  /// Debits of these types without a counterparty bank count as intra-bank transfers.
  std::set<int> transfer_txn_type_codes{3};
};

AttributeSchema phase1_schema();
AttributeSchema phase2_schema();

/// Fold of a transaction stream into per-customer aggregates. All amounts are
/// accumulated as exact integer cents, so the result does not depend on the order
/// in which records are added or accumulators merged.
///
/// Memory is one entry per customer plus one per (customer, active day) in phase 2;
/// it does not grow with the number of transactions.
class ProfileAccumulator {
 public:
  ProfileAccumulator(ProfilePhase phase, DateRange window, ProfileOptions options = {});
  ProfileAccumulator(const ProfileAccumulator&) = delete;
  ProfileAccumulator& operator=(const ProfileAccumulator&) = delete;
  ProfileAccumulator(ProfileAccumulator&&) noexcept = default;
  ProfileAccumulator& operator=(ProfileAccumulator&&) noexcept = default;

  /// Throws DataError for a timestamp outside the window.
  void add(const TransactionRecord& r);
  /// Commutative, associative merge of another accumulator over the same window.
  void merge(ProfileAccumulator&& other);

  std::size_t customer_count() const { return customers_.size(); }

  /// One profile per customer seen, sorted by customer id. Throws DataError listing
  /// customer ids that are missing from `reg`.
  ProfileTable finish(std::span<const CustomerRecord> reg) const;

 private:
  struct MonthStats {
    std::uint64_t service_mask = 0;
    std::uint32_t txns = 0;
    std::uint32_t debits = 0;
    std::uint32_t credits = 0;
    std::uint32_t service_uses = 0;
  };
  struct DayFlow {
    std::int32_t day = 0;
    std::int64_t credit = 0;
    std::int64_t debit = 0;
  };
  struct CustomerState {
    std::vector<MonthStats> months;
    std::uint64_t count = 0;
    int128 amount_sum = 0;
    uint128 amount_sq_sum = 0;
    std::int64_t credited = 0;
    std::int64_t debited = 0;
    std::int64_t interbank_debited = 0;
    std::int64_t intrabank_transfer_debited = 0;
    std::vector<DayFlow> days;
  };

  static void compact_days(CustomerState& s);
  void fill_profile(const CustomerState& s, Date open_date, std::vector<double>& out) const;

  ProfilePhase phase_;
  DateRange window_;
  ProfileOptions options_;
  int months_;
  std::unordered_map<std::string, CustomerState> customers_;
  // Consecutive rows of one customer skip the hash lookup.
  std::string last_id_;
  CustomerState* last_state_ = nullptr;
};

ProfileTable build_profiles_phase1(std::span<const TransactionRecord> txns, std::span<const CustomerRecord> reg,
                                   DateRange window);
ProfileTable build_profiles_phase2(std::span<const TransactionRecord> txns, std::span<const CustomerRecord> reg,
                                   DateRange window, const ProfileOptions& options = {});

/// Amount-weighted mean days between credits and the later debits they fund, with
/// credits consumed first-in first-out. Credits on a day are available to debits on
/// the same day. Returns nullopt when nothing is matched.
/// `flows` holds (day, credit cents, debit cents) sorted by day with unique days.
std::optional<double> fifo_in_out_lag(std::span<const std::array<std::int64_t, 3>> flows);

// ---- equal-frequency discretization ---------------------------------------------

struct AttributeCuts {
  std::string name;
  std::size_t source_index = 0;
  /// Strictly increasing. A value v goes to the number of cuts strictly below v,
  /// so a value equal to a cut lands in the lower bin.
  std::vector<double> cuts;
  bool excluded = false;
  std::string note;

  std::size_t levels() const { return cuts.size() + 1; }
  std::size_t bin(double v) const;

  friend bool operator==(const AttributeCuts&, const AttributeCuts&) = default;
};

struct DiscretizationSchema {
  double concentration_threshold = 1.0 / 3.0;
  std::vector<AttributeCuts> attributes;

  /// Attributes that were not excluded, as nominal attributes.
  AttributeSchema nominal_schema(const AttributeSchema& source) const;
  std::vector<std::string> warnings() const;

  nlohmann::json to_json() const;
  static DiscretizationSchema from_json(const nlohmann::json& j);

  friend bool operator==(const DiscretizationSchema&, const DiscretizationSchema&) = default;
};

/// Three equal-frequency bins per numeric attribute, falling back to two bins split at
/// a value whose relative frequency exceeds `concentration_threshold`. Constant
/// attributes are marked excluded.
DiscretizationSchema fit_discretization(const ProfileTable& table, double concentration_threshold = 1.0 / 3.0);

/// Maps numeric values to bin indices; excluded attributes are dropped and nominal
/// attributes pass through. Values outside the fitted range clamp to the outer bins.
ProfileTable apply_discretization(const ProfileTable& table, const DiscretizationSchema& dschema);

}  // namespace amlprof
