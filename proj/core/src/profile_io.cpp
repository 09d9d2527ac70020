#include "amlprof/profile_io.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "amlprof/csv.hpp"

namespace amlprof {

void write_profiles_csv(std::ostream& out, const ProfileTable& table) {
  const bool labeled = !table.profiles.empty() && table.profiles.front().label.has_value();
  out << "customer_id";
  for (const auto& a : table.schema.attributes()) out << ',' << csv::escape(a.name);
  if (labeled) out << ",label";
  out << '\n';
  std::string line;
  for (const auto& p : table.profiles) {
    line = csv::escape(p.customer_id);
    for (std::size_t j = 0; j < table.schema.size(); ++j) {
      line += ',';
      if (table.schema.is_nominal(j)) {
        line += csv::escape(table.schema[j].levels.at(static_cast<std::size_t>(p.values[j])));
      } else {
        line += csv::format_double(p.values[j]);
      }
    }
    if (labeled) {
      line += ',';
      if (p.label) line += std::to_string(*p.label);
    }
    line += '\n';
    out << line;
  }
}

ProfileTable read_profiles_csv(std::istream& in, const AttributeSchema& schema) {
  csv::LineReader lines(in);
  csv::Splitter splitter;
  std::vector<std::string_view> fields;
  std::string_view line;
  if (!lines.next(line) || !splitter.split(line, fields)) throw DataError("profile file has no header");
  if (fields.size() < schema.size() + 1 || fields[0] != "customer_id") {
    throw DataError("profile header does not match the schema");
  }
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (fields[j + 1] != schema[j].name) {
      throw DataError("profile column " + std::string(fields[j + 1]) + " does not match schema attribute " +
                      schema[j].name);
    }
  }
  const bool labeled = fields.size() == schema.size() + 2;
  ProfileTable table;
  table.schema = schema;
  while (lines.next(line)) {
    if (line.empty()) continue;
    if (!splitter.split(line, fields) || fields.size() != schema.size() + 1 + (labeled ? 1 : 0)) {
      throw DataError("malformed profile row at line " + std::to_string(lines.line_number()));
    }
    CustomerProfile p;
    p.customer_id = std::string(fields[0]);
    p.values.resize(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const auto f = fields[j + 1];
      if (schema.is_nominal(j)) {
        const auto& levels = schema[j].levels;
        auto it = std::find(levels.begin(), levels.end(), f);
        if (it == levels.end()) throw DataError("unknown level '" + std::string(f) + "' for " + schema[j].name);
        p.values[j] = static_cast<double>(it - levels.begin());
      } else if (!csv::parse_double(f, p.values[j])) {
        throw DataError("bad numeric value at line " + std::to_string(lines.line_number()));
      }
    }
    if (labeled && !fields.back().empty()) {
      long long v = 0;
      if (!csv::parse_int(fields.back(), v)) throw DataError("bad label at line " + std::to_string(lines.line_number()));
      p.label = static_cast<int>(v);
    }
    table.profiles.push_back(std::move(p));
  }
  table.validate();
  return table;
}

nlohmann::json ProfileSidecar::to_json() const {
  nlohmann::json j;
  j["phase"] = phase;
  j["attribute_kind"] = attribute_kind;
  j["schema"] = schema.to_json();
  j["discretization"] = discretization ? discretization->to_json() : nlohmann::json(nullptr);
  return j;
}

ProfileSidecar ProfileSidecar::from_json(const nlohmann::json& j) {
  ProfileSidecar s;
  s.phase = j.at("phase").get<int>();
  s.attribute_kind = j.at("attribute_kind").get<std::string>();
  s.schema = AttributeSchema::from_json(j.at("schema"));
  if (j.contains("discretization") && !j.at("discretization").is_null()) {
    s.discretization = DiscretizationSchema::from_json(j.at("discretization"));
  }
  return s;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& contents) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + p.string());
  out << contents;
}

void save_profiles(const std::filesystem::path& stem, const ProfileTable& table, const ProfileSidecar& sidecar) {
  std::ostringstream csv_out;
  write_profiles_csv(csv_out, table);
  write_file(stem.string() + ".csv", csv_out.str());
  write_file(stem.string() + ".schema.json", sidecar.to_json().dump(2) + "\n");
}

ProfileTable load_profiles(const std::filesystem::path& stem, ProfileSidecar* sidecar) {
  const auto meta = ProfileSidecar::from_json(nlohmann::json::parse(read_file(stem.string() + ".schema.json")));
  std::ifstream in(stem.string() + ".csv", std::ios::binary);
  if (!in) throw DataError("cannot open " + stem.string() + ".csv");
  auto table = read_profiles_csv(in, meta.schema);
  if (sidecar) *sidecar = meta;
  return table;
}

void write_labels_csv(std::ostream& out, const ProfileTable& table, const std::string& column) {
  out << "customer_id," << column << '\n';
  for (const auto& p : table.profiles) {
    out << csv::escape(p.customer_id) << ',' << (p.label ? std::to_string(*p.label) : std::string()) << '\n';
  }
}

std::vector<std::pair<std::string, int>> read_labels_csv(std::istream& in) {
  csv::LineReader lines(in);
  csv::Splitter splitter;
  std::vector<std::string_view> fields;
  std::string_view line;
  if (!lines.next(line)) throw DataError("label file has no header");
  std::vector<std::pair<std::string, int>> out;
  while (lines.next(line)) {
    if (line.empty()) continue;
    long long v = 0;
    if (!splitter.split(line, fields) || fields.size() != 2 || !csv::parse_int(fields[1], v)) {
      throw DataError("malformed label row at line " + std::to_string(lines.line_number()));
    }
    out.emplace_back(std::string(fields[0]), static_cast<int>(v));
  }
  return out;
}

void attach_labels(ProfileTable& table, std::span<const std::pair<std::string, int>> labels) {
  std::unordered_map<std::string_view, int> by_id;
  for (const auto& [id, l] : labels) by_id.emplace(id, l);
  for (auto& p : table.profiles) {
    auto it = by_id.find(p.customer_id);
    if (it == by_id.end()) throw DataError("no label for customer " + p.customer_id);
    p.label = it->second;
  }
}

}  // namespace amlprof
