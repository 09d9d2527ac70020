#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "amlprof/profiling.hpp"

namespace amlprof {

/// Header `customer_id,<attributes...>[,label]`. Nominal values are written as level labels.
void write_profiles_csv(std::ostream& out, const ProfileTable& table);
ProfileTable read_profiles_csv(std::istream& in, const AttributeSchema& schema);

/// JSON sidecar carrying the attribute roster and, for nominal tables, the cut points.
struct ProfileSidecar {
  AttributeSchema schema;
  int phase = 2;
  std::string attribute_kind = "numeric";
  std::optional<DiscretizationSchema> discretization;

  nlohmann::json to_json() const;
  static ProfileSidecar from_json(const nlohmann::json& j);
};

/// Writes `<stem>.csv` and `<stem>.schema.json`.
void save_profiles(const std::filesystem::path& stem, const ProfileTable& table, const ProfileSidecar& sidecar);
ProfileTable load_profiles(const std::filesystem::path& stem, ProfileSidecar* sidecar = nullptr);

/// Two-column files `customer_id,<column>` used for cluster labels and ground truth.
void write_labels_csv(std::ostream& out, const ProfileTable& table, const std::string& column = "cluster");
std::vector<std::pair<std::string, int>> read_labels_csv(std::istream& in);
/// Attaches labels by customer id; throws DataError for profiles without one.
void attach_labels(ProfileTable& table, std::span<const std::pair<std::string, int>> labels);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& contents);

}  // namespace amlprof
