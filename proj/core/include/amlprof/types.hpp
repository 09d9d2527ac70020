#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace amlprof {

/// Exact wide accumulators for money sums.
__extension__ typedef __int128 int128;
__extension__ typedef unsigned __int128 uint128;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration: missing columns, infeasible generator dials, invalid parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a contract (unknown customer, schema mismatch, non-finite value).
class DataError : public Error {
 public:
  using Error::Error;
};

using Date = std::chrono::sys_days;
using Timestamp = std::chrono::sys_seconds;

std::optional<Date> parse_date(std::string_view text);

/// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS" and "YYYY-MM-DD HH:MM:SS" (UTC, optional trailing 'Z').
std::optional<Timestamp> parse_timestamp(std::string_view text);

std::string format_date(Date d);
std::string format_timestamp(Timestamp t);

inline Date day_of(Timestamp t) { return std::chrono::floor<std::chrono::days>(t); }

/// Inclusive calendar-date range.
struct DateRange {
  Date first;
  Date last;

  bool contains(Date d) const { return d >= first && d <= last; }
  /// Number of days covered, both ends included.
  int days() const { return static_cast<int>((last - first).count()) + 1; }
  /// Calendar months touched by the range; a partial month counts as a whole one.
  int month_count() const;
  /// Zero-based calendar-month offset of `d` from the first month of the range.
  int month_index(Date d) const;

  static DateRange parse(std::string_view first, std::string_view last);
};

/// Exact decimal currency amount with two fraction digits, stored as integer cents.
class Money {
 public:
  constexpr Money() = default;
  static constexpr Money from_cents(std::int64_t cents) { return Money(cents); }

  /// Parses "123", "123.4" or "123.45". Signs, exponents and more than two
  /// fraction digits are rejected.
  static std::optional<Money> parse(std::string_view text);

  constexpr std::int64_t cents() const { return cents_; }
  double units() const { return static_cast<double>(cents_) / 100.0; }
  std::string to_string() const;

  friend constexpr bool operator==(Money, Money) = default;
  friend constexpr auto operator<=>(Money, Money) = default;

 private:
  constexpr explicit Money(std::int64_t cents) : cents_(cents) {}
  std::int64_t cents_ = 0;
};

/// splitmix64 finalizer; used to derive independent seeds from a base seed and an index.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace amlprof
