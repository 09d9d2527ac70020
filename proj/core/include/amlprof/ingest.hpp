#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "amlprof/csv.hpp"
#include "amlprof/types.hpp"

namespace amlprof {

enum class Direction : std::uint8_t { credit, debit };

std::string_view to_string(Direction d);

/// One ledger row. `amount` is always positive; `direction` carries the sign.
struct TransactionRecord {
  std::string customer_id;
  std::string account_id;
  Timestamp timestamp{};
  Money amount;
  Direction direction = Direction::credit;
  int service_code = 0;
  int txn_type_code = 0;
  /// Absent for movements inside the home institution.
  std::optional<std::string> counterparty_bank;

  friend bool operator==(const TransactionRecord&, const TransactionRecord&) = default;
};

/// One account-register row.
struct CustomerRecord {
  std::string customer_id;
  Date account_open_date{};

  friend bool operator==(const CustomerRecord&, const CustomerRecord&) = default;
};

/// Service codes index a 64-bit usage mask during profiling.
inline constexpr int kMaxServiceCode = 63;

/// Header names for each transaction field. The counterparty column may be missing
/// from a file, in which case every row is treated as intra-bank.
struct ColumnMapping {
  std::string customer_id = "customer_id";
  std::string account_id = "account_id";
  std::string timestamp = "timestamp";
  std::string amount = "amount";
  std::string direction = "direction";
  std::string service_code = "service_code";
  std::string txn_type_code = "txn_type_code";
  std::string counterparty_bank = "counterparty_bank";
};

struct RegisterMapping {
  std::string customer_id = "customer_id";
  std::string account_open_date = "account_open_date";
};

struct IngestOptions {
  char delimiter = ',';
  /// Row-level errors tolerated before parsing aborts.
  std::size_t max_errors = 100;
  /// Rows outside the window are rejected when set.
  std::optional<DateRange> window;
};

struct RowError {
  std::size_t line_no = 0;
  std::string reason;
};

struct IngestSummary {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<RowError> errors;
};

/// Raised when the row-error cap is exceeded. Carries everything collected so far.
class IngestError : public Error {
 public:
  IngestError(const std::string& what, IngestSummary summary) : Error(what), summary_(std::move(summary)) {}
  const IngestSummary& summary() const { return summary_; }

 private:
  IngestSummary summary_;
};

/// Transaction-type codes excluded before profiling (bank charges and the like).
struct FilterPolicy {
  std::set<int> excluded_txn_type_codes;

  bool admits(const TransactionRecord& r) const { return !excluded_txn_type_codes.contains(r.txn_type_code); }
};

struct FilterStats {
  std::size_t passed = 0;
  std::size_t dropped = 0;
  /// Incremented when a non-empty input was filtered down to nothing.
  std::size_t warnings = 0;
};

/// Everything the ingestion stage reads from the pipeline's JSON config.
struct IngestConfig {
  ColumnMapping columns;
  RegisterMapping register_columns;
  FilterPolicy filter;
  IngestOptions options;

  static IngestConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Streaming single-pass reader for a transaction CSV with header. Memory use is one
/// read buffer plus one record regardless of file size.
class TransactionReader {
 public:
  TransactionReader(std::istream& in, ColumnMapping mapping, IngestOptions options = {});

  /// Parses the next valid row into `out`. Malformed rows are recorded in summary()
  /// and skipped; throws IngestError once more than max_errors rows were rejected.
  bool next(TransactionRecord& out);

  const IngestSummary& summary() const { return summary_; }

 private:
  bool parse_row(std::string_view line, TransactionRecord& out, std::string& reason);
  void reject(std::string reason);

  csv::LineReader lines_;
  csv::Splitter splitter_;
  IngestOptions options_;
  std::vector<std::string_view> fields_;
  std::size_t header_width_ = 0;
  std::size_t col_customer_ = 0, col_account_ = 0, col_timestamp_ = 0, col_amount_ = 0, col_direction_ = 0,
              col_service_ = 0, col_type_ = 0;
  std::optional<std::size_t> col_counterparty_;
  IngestSummary summary_;
};

/// Parses the whole stream, handing each accepted record to `sink` in file order.
IngestSummary parse_transactions(std::istream& in, const ColumnMapping& mapping, const IngestOptions& options,
                                 const std::function<void(const TransactionRecord&)>& sink);

std::vector<TransactionRecord> parse_transactions(std::istream& in, const ColumnMapping& mapping = {},
                                                  const IngestOptions& options = {},
                                                  IngestSummary* summary = nullptr);

std::vector<CustomerRecord> parse_customers(std::istream& in, const RegisterMapping& mapping = {},
                                            const IngestOptions& options = {}, IngestSummary* summary = nullptr);

/// Keeps records whose type code is not excluded, preserving order.
std::vector<TransactionRecord> filter_insignificant(std::span<const TransactionRecord> txns,
                                                    const FilterPolicy& policy, FilterStats* stats = nullptr);

/// Streaming writer producing files that TransactionReader accepts with the same mapping.
class TransactionCsvWriter {
 public:
  TransactionCsvWriter(std::ostream& out, const ColumnMapping& mapping = {}, char delimiter = ',');
  void write(const TransactionRecord& r);

 private:
  std::ostream& out_;
  char delim_;
};

void write_transactions_csv(std::ostream& out, std::span<const TransactionRecord> txns,
                            const ColumnMapping& mapping = {}, char delimiter = ',');
void write_customers_csv(std::ostream& out, std::span<const CustomerRecord> customers,
                         const RegisterMapping& mapping = {}, char delimiter = ',');

/// Rejected-row report: `line_no,reason`.
void write_rejected_rows(std::ostream& out, const IngestSummary& summary);

}  // namespace amlprof
