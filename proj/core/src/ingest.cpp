#include "amlprof/ingest.hpp"

#include <unordered_map>

namespace amlprof {
namespace {

std::size_t require_column(const std::unordered_map<std::string_view, std::size_t>& header, const std::string& name,
                           const char* field) {
  auto it = header.find(name);
  if (it == header.end()) {
    throw ConfigError(std::string("missing header column '") + name + "' for field " + field);
  }
  return it->second;
}

bool parse_small_int(std::string_view text, int lo, int hi, int& out) {
  long long v = 0;
  if (!csv::parse_int(text, v) || v < lo || v > hi) return false;
  out = static_cast<int>(v);
  return true;
}

std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "credit" || s == "C" || s == "c" || s == "CREDIT") return Direction::credit;
  if (s == "debit" || s == "D" || s == "d" || s == "DEBIT") return Direction::debit;
  return std::nullopt;
}

std::unordered_map<std::string_view, std::size_t> index_header(const std::vector<std::string_view>& fields,
                                                               std::vector<std::string>& storage) {
  storage.assign(fields.begin(), fields.end());
  std::unordered_map<std::string_view, std::size_t> header;
  for (std::size_t i = 0; i < storage.size(); ++i) header.emplace(storage[i], i);
  return header;
}

}  // namespace

std::string_view to_string(Direction d) { return d == Direction::credit ? "credit" : "debit"; }

IngestConfig IngestConfig::from_json(const nlohmann::json& j) {
  IngestConfig c;
  if (j.contains("delimiter")) {
    const auto d = j.at("delimiter").get<std::string>();
    if (d.size() != 1) throw ConfigError("delimiter must be a single character");
    c.options.delimiter = d[0];
  }
  if (j.contains("max_errors")) c.options.max_errors = j.at("max_errors").get<std::size_t>();
  if (j.contains("columns")) {
    const auto& m = j.at("columns");
    auto take = [&](const char* key, std::string& dst) {
      if (m.contains(key)) dst = m.at(key).get<std::string>();
    };
    take("customer_id", c.columns.customer_id);
    take("account_id", c.columns.account_id);
    take("timestamp", c.columns.timestamp);
    take("amount", c.columns.amount);
    take("direction", c.columns.direction);
    take("service_code", c.columns.service_code);
    take("txn_type_code", c.columns.txn_type_code);
    take("counterparty_bank", c.columns.counterparty_bank);
  }
  if (j.contains("register_columns")) {
    const auto& m = j.at("register_columns");
    if (m.contains("customer_id")) c.register_columns.customer_id = m.at("customer_id").get<std::string>();
    if (m.contains("account_open_date")) {
      c.register_columns.account_open_date = m.at("account_open_date").get<std::string>();
    }
  }
  if (j.contains("filter") && j.at("filter").contains("excluded_txn_type_codes")) {
    for (int code : j.at("filter").at("excluded_txn_type_codes")) c.filter.excluded_txn_type_codes.insert(code);
  }
  return c;
}

nlohmann::json IngestConfig::to_json() const {
  nlohmann::json j;
  j["delimiter"] = std::string(1, options.delimiter);
  j["max_errors"] = options.max_errors;
  j["columns"] = {{"customer_id", columns.customer_id},
                  {"account_id", columns.account_id},
                  {"timestamp", columns.timestamp},
                  {"amount", columns.amount},
                  {"direction", columns.direction},
                  {"service_code", columns.service_code},
                  {"txn_type_code", columns.txn_type_code},
                  {"counterparty_bank", columns.counterparty_bank}};
  j["register_columns"] = {{"customer_id", register_columns.customer_id},
                           {"account_open_date", register_columns.account_open_date}};
  j["filter"]["excluded_txn_type_codes"] =
      std::vector<int>(filter.excluded_txn_type_codes.begin(), filter.excluded_txn_type_codes.end());
  return j;
}

TransactionReader::TransactionReader(std::istream& in, ColumnMapping mapping, IngestOptions options)
    : lines_(in), splitter_(options.delimiter), options_(std::move(options)) {
  std::string_view header_line;
  if (!lines_.next(header_line)) throw ConfigError("transaction file is empty (no header)");
  if (!splitter_.split(header_line, fields_)) throw ConfigError("malformed transaction header");
  std::vector<std::string> storage;
  const auto header = index_header(fields_, storage);
  header_width_ = fields_.size();
  col_customer_ = require_column(header, mapping.customer_id, "customer_id");
  col_account_ = require_column(header, mapping.account_id, "account_id");
  col_timestamp_ = require_column(header, mapping.timestamp, "timestamp");
  col_amount_ = require_column(header, mapping.amount, "amount");
  col_direction_ = require_column(header, mapping.direction, "direction");
  col_service_ = require_column(header, mapping.service_code, "service_code");
  col_type_ = require_column(header, mapping.txn_type_code, "txn_type_code");
  if (auto it = header.find(mapping.counterparty_bank); it != header.end()) col_counterparty_ = it->second;
}

void TransactionReader::reject(std::string reason) {
  ++summary_.rejected;
  summary_.errors.push_back({lines_.line_number(), std::move(reason)});
  if (summary_.rejected > options_.max_errors) {
    throw IngestError("too many malformed rows (" + std::to_string(summary_.rejected) + " > cap " +
                          std::to_string(options_.max_errors) + ")",
                      summary_);
  }
}

bool TransactionReader::parse_row(std::string_view line, TransactionRecord& out, std::string& reason) {
  if (!splitter_.split(line, fields_)) {
    reason = "unterminated quoted field";
    return false;
  }
  if (fields_.size() != header_width_) {
    reason = "expected " + std::to_string(header_width_) + " fields, found " + std::to_string(fields_.size());
    return false;
  }
  if (fields_[col_customer_].empty()) {
    reason = "empty customer_id";
    return false;
  }
  out.customer_id.assign(fields_[col_customer_]);
  out.account_id.assign(fields_[col_account_]);

  auto ts = parse_timestamp(fields_[col_timestamp_]);
  if (!ts) {
    reason = "unparseable timestamp '" + std::string(fields_[col_timestamp_]) + "'";
    return false;
  }
  if (options_.window && !options_.window->contains(day_of(*ts))) {
    reason = "timestamp outside analysis window";
    return false;
  }
  out.timestamp = *ts;

  auto amount = Money::parse(fields_[col_amount_]);
  if (!amount) {
    reason = "unparseable amount '" + std::string(fields_[col_amount_]) + "'";
    return false;
  }
  if (amount->cents() <= 0) {
    reason = "amount must be > 0";
    return false;
  }
  out.amount = *amount;

  auto dir = parse_direction(fields_[col_direction_]);
  if (!dir) {
    reason = "unknown direction '" + std::string(fields_[col_direction_]) + "'";
    return false;
  }
  out.direction = *dir;

  if (!parse_small_int(fields_[col_service_], 0, kMaxServiceCode, out.service_code)) {
    reason = "service_code must be an integer in [0," + std::to_string(kMaxServiceCode) + "]";
    return false;
  }
  if (!parse_small_int(fields_[col_type_], 0, 1 << 20, out.txn_type_code)) {
    reason = "txn_type_code must be a non-negative integer";
    return false;
  }
  if (col_counterparty_ && !fields_[*col_counterparty_].empty()) {
    out.counterparty_bank.emplace(fields_[*col_counterparty_]);
  } else {
    out.counterparty_bank.reset();
  }
  return true;
}

bool TransactionReader::next(TransactionRecord& out) {
  std::string_view line;
  std::string reason;
  while (lines_.next(line)) {
    if (line.empty()) continue;
    if (parse_row(line, out, reason)) {
      ++summary_.accepted;
      return true;
    }
    reject(std::move(reason));
    reason.clear();
  }
  return false;
}

IngestSummary parse_transactions(std::istream& in, const ColumnMapping& mapping, const IngestOptions& options,
                                 const std::function<void(const TransactionRecord&)>& sink) {
  TransactionReader reader(in, mapping, options);
  TransactionRecord rec;
  while (reader.next(rec)) sink(rec);
  return reader.summary();
}

std::vector<TransactionRecord> parse_transactions(std::istream& in, const ColumnMapping& mapping,
                                                  const IngestOptions& options, IngestSummary* summary) {
  std::vector<TransactionRecord> out;
  auto s = parse_transactions(in, mapping, options, [&](const TransactionRecord& r) { out.push_back(r); });
  if (summary) *summary = std::move(s);
  return out;
}

std::vector<CustomerRecord> parse_customers(std::istream& in, const RegisterMapping& mapping,
                                            const IngestOptions& options, IngestSummary* summary) {
  csv::LineReader lines(in);
  csv::Splitter splitter(options.delimiter);
  std::vector<std::string_view> fields;
  std::string_view line;
  if (!lines.next(line)) throw ConfigError("register file is empty (no header)");
  if (!splitter.split(line, fields)) throw ConfigError("malformed register header");
  std::vector<std::string> storage;
  const auto header = index_header(fields, storage);
  const std::size_t width = fields.size();
  const std::size_t col_id = require_column(header, mapping.customer_id, "customer_id");
  const std::size_t col_open = require_column(header, mapping.account_open_date, "account_open_date");

  IngestSummary s;
  std::vector<CustomerRecord> out;
  auto reject = [&](std::string reason) {
    ++s.rejected;
    s.errors.push_back({lines.line_number(), std::move(reason)});
    if (s.rejected > options.max_errors) throw IngestError("too many malformed register rows", s);
  };
  while (lines.next(line)) {
    if (line.empty()) continue;
    if (!splitter.split(line, fields) || fields.size() != width) {
      reject("malformed row");
      continue;
    }
    if (fields[col_id].empty()) {
      reject("empty customer_id");
      continue;
    }
    auto open = parse_date(fields[col_open]);
    if (!open) {
      reject("unparseable account_open_date '" + std::string(fields[col_open]) + "'");
      continue;
    }
    if (options.window && *open > options.window->last) {
      reject("account opened after analysis window end");
      continue;
    }
    out.push_back({std::string(fields[col_id]), *open});
    ++s.accepted;
  }
  if (summary) *summary = std::move(s);
  return out;
}

std::vector<TransactionRecord> filter_insignificant(std::span<const TransactionRecord> txns,
                                                    const FilterPolicy& policy, FilterStats* stats) {
  std::vector<TransactionRecord> out;
  out.reserve(txns.size());
  FilterStats local;
  for (const auto& r : txns) {
    if (policy.admits(r)) {
      out.push_back(r);
      ++local.passed;
    } else {
      ++local.dropped;
    }
  }
  if (local.passed == 0 && local.dropped > 0) ++local.warnings;
  if (stats) {
    stats->passed += local.passed;
    stats->dropped += local.dropped;
    stats->warnings += local.warnings;
  }
  return out;
}

TransactionCsvWriter::TransactionCsvWriter(std::ostream& out, const ColumnMapping& m, char delimiter)
    : out_(out), delim_(delimiter) {
  const std::string d(1, delim_);
  out_ << csv::escape(m.customer_id, delim_) << d << csv::escape(m.account_id, delim_) << d
       << csv::escape(m.timestamp, delim_) << d << csv::escape(m.amount, delim_) << d
       << csv::escape(m.direction, delim_) << d << csv::escape(m.service_code, delim_) << d
       << csv::escape(m.txn_type_code, delim_) << d << csv::escape(m.counterparty_bank, delim_) << '\n';
}

void TransactionCsvWriter::write(const TransactionRecord& r) {
  std::string line;
  line.reserve(96);
  line += csv::escape(r.customer_id, delim_);
  line += delim_;
  line += csv::escape(r.account_id, delim_);
  line += delim_;
  line += format_timestamp(r.timestamp);
  line += delim_;
  line += r.amount.to_string();
  line += delim_;
  line += to_string(r.direction);
  line += delim_;
  line += std::to_string(r.service_code);
  line += delim_;
  line += std::to_string(r.txn_type_code);
  line += delim_;
  if (r.counterparty_bank) line += csv::escape(*r.counterparty_bank, delim_);
  line += '\n';
  out_ << line;
}

void write_transactions_csv(std::ostream& out, std::span<const TransactionRecord> txns, const ColumnMapping& mapping,
                            char delimiter) {
  TransactionCsvWriter w(out, mapping, delimiter);
  for (const auto& r : txns) w.write(r);
}

void write_customers_csv(std::ostream& out, std::span<const CustomerRecord> customers, const RegisterMapping& mapping,
                         char delimiter) {
  out << csv::escape(mapping.customer_id, delimiter) << delimiter << csv::escape(mapping.account_open_date, delimiter)
      << '\n';
  for (const auto& c : customers) {
    out << csv::escape(c.customer_id, delimiter) << delimiter << format_date(c.account_open_date) << '\n';
  }
}

void write_rejected_rows(std::ostream& out, const IngestSummary& summary) {
  out << "line_no,reason\n";
  for (const auto& e : summary.errors) out << e.line_no << ',' << csv::escape(e.reason) << '\n';
}

}  // namespace amlprof
