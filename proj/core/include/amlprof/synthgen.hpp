#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "amlprof/ingest.hpp"
#include "amlprof/types.hpp"

namespace amlprof {

enum class AmountMode : std::uint8_t {
  lognormal,
  /// Uniform in [threshold * (1 - band), threshold).
  below_threshold,
};

/// Behavioural dials of one planted customer group.
struct ArchetypeSpec {
  std::string name;
  double proportion = 0.0;
  /// Incoming payments per month. Arrivals are regular: the integer part every month,
  /// one more with probability equal to the fractional part.
  double credits_per_month = 1.0;
  /// Outgoing payments each credit is split into.
  int debits_per_credit = 1;
  /// Fraction of each credit paid out again.
  double outflow_share = 0.9;
  AmountMode amount_mode = AmountMode::lognormal;
  /// Median and log-space sigma of credit amounts (lognormal mode).
  double amount_median = 1000.0;
  double amount_sigma = 0.5;
  /// Days between a credit and the debits it funds, uniform in [min, max].
  std::array<int, 2> lag_days{0, 0};
  /// Probability a debit goes to another institution.
  double interbank_ratio = 0.0;
  /// Probability a debit is a transfer inside the institution.
  double intrabank_ratio = 0.0;
  /// Probability a transaction carries a service code.
  double service_share = 0.0;
  /// Distinct services a customer of this group draws from.
  int services = 1;
  std::array<double, 2> account_age_years{1.0, 10.0};

  void validate(int window_days) const;
  nlohmann::json to_json() const;
  static ArchetypeSpec from_json(const nlohmann::json& j);
};

struct GeneratorConfig {
  std::size_t n_customers = 1000;
  DateRange window{};
  std::vector<ArchetypeSpec> archetypes;
  std::uint64_t seed = 1;
  /// Fraction of customers whose dials are blended with a second archetype.
  double noise = 0.0;
  /// Log-space spread of the per-customer amount multiplier.
  double heterogeneity = 0.15;
  double reporting_threshold = 10000.0;
  double threshold_band = 0.1;
  /// Bank fee debits (type 99) per customer and month.
  int fees_per_month = 1;
  int counterparty_banks = 20;

  /// Throws ConfigError for infeasible settings.
  void validate() const;
  nlohmann::json to_json() const;
  static GeneratorConfig from_json(const nlohmann::json& j);
};

/// Transaction type codes written by the generator.
namespace txn_type {
inline constexpr int cash = 1;
inline constexpr int card = 2;
inline constexpr int transfer = 3;
inline constexpr int deposit = 4;
inline constexpr int bank_fee = 99;
}  // namespace txn_type

/// Bundled configurations: "seven" (the default seven-group ledger), "six" and "two".
GeneratorConfig bundled_config(std::string_view name, std::size_t n_customers = 0);

/// Archetype count for each customer, summing to n. Largest remainder rounding, ties to
/// the earlier archetype.
std::vector<std::size_t> allocate_customers(std::span<const double> proportions, std::size_t n);

struct GeneratedCustomer {
  std::size_t index = 0;
  CustomerRecord record;
  int archetype = 0;
  bool noisy = false;
  /// Sorted by timestamp.
  std::vector<TransactionRecord> transactions;
};

/// Generates customers in id order and hands each to `sink`. Customers are produced in
/// parallel batches on up to `jobs` threads; output does not depend on `jobs`.
void generate(const GeneratorConfig& config, const std::function<void(GeneratedCustomer&&)>& sink, int jobs = 1);

struct GeneratedFiles {
  std::filesystem::path transactions;
  std::filesystem::path customers;
  std::filesystem::path ground_truth;
  std::size_t transaction_count = 0;
};

/// Writes `transactions.csv`, `customers.csv` and `ground_truth.csv`
/// (customer_id,archetype) into `dir`.
GeneratedFiles generate_to_files(const GeneratorConfig& config, const std::filesystem::path& dir, int jobs = 1);

}  // namespace amlprof
