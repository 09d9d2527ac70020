#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "amlprof/ingest.hpp"
#include "amlprof/rules.hpp"

namespace testing {

inline amlprof::Timestamp at(const char* text) { return *amlprof::parse_timestamp(text); }
inline amlprof::Date day(const char* text) { return *amlprof::parse_date(text); }

inline amlprof::TransactionRecord txn(std::string customer, const char* when, std::int64_t cents,
                                      amlprof::Direction dir, int service = 0, int type = 4,
                                      std::optional<std::string> bank = std::nullopt) {
  amlprof::TransactionRecord r;
  r.account_id = "A-" + customer;
  r.customer_id = std::move(customer);
  r.timestamp = at(when);
  r.amount = amlprof::Money::from_cents(cents);
  r.direction = dir;
  r.service_code = service;
  r.txn_type_code = type;
  r.counterparty_bank = std::move(bank);
  return r;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("amlprof-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Random labelled data: `numeric` numeric columns with few distinct values and
/// `nominal` nominal columns of `levels` levels. Labels depend on the first columns
/// plus noise so learners have something to find.
inline amlprof::Instances random_instances(std::mt19937_64& rng, std::size_t n, std::size_t numeric,
                                           std::size_t nominal, int classes, int levels = 3, int distinct = 8) {
  using namespace amlprof;
  std::vector<Attribute> attrs;
  for (std::size_t j = 0; j < numeric; ++j) attrs.push_back({"n" + std::to_string(j), AttributeKind::numeric, {}});
  for (std::size_t j = 0; j < nominal; ++j) {
    Attribute a{"c" + std::to_string(j), AttributeKind::nominal, {}};
    for (int l = 0; l < levels; ++l) a.levels.push_back("v" + std::to_string(l));
    attrs.push_back(std::move(a));
  }
  Instances d;
  d.schema = AttributeSchema(std::move(attrs));
  d.num_classes = classes;
  d.x = Matrix(n, numeric + nominal);
  std::uniform_int_distribution<int> val(0, distinct - 1), lev(0, levels - 1), cls(0, classes - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < numeric; ++j) d.x(i, j) = val(rng) * 0.5;
    for (std::size_t j = 0; j < nominal; ++j) d.x(i, numeric + j) = lev(rng);
    int y = cls(rng);
    if (u(rng) < 0.7 && numeric + nominal > 0) {
      const double v = d.x(i, 0);
      y = static_cast<int>(v * 7) % classes;
    }
    d.y.push_back(y);
  }
  return d;
}

}  // namespace testing
