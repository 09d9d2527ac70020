#include <algorithm>
#include <cmath>

#include "amlprof/profiling.hpp"

namespace amlprof {

std::size_t AttributeCuts::bin(double v) const {
  return static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
}

AttributeSchema DiscretizationSchema::nominal_schema(const AttributeSchema& source) const {
  std::vector<Attribute> attrs;
  std::vector<bool> handled(source.size(), false);
  for (const auto& c : attributes) {
    handled[c.source_index] = true;
    if (c.excluded) continue;
    Attribute a{c.name, AttributeKind::nominal, {}};
    if (c.levels() == 3) {
      a.levels = {"low", "mid", "high"};
    } else {
      a.levels = {"low", "high"};
    }
    attrs.push_back(std::move(a));
  }
  // Attributes that were already nominal are kept as they are, in source order.
  std::vector<Attribute> out;
  std::size_t k = 0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (!handled[i]) {
      out.push_back(source[i]);
      continue;
    }
    const auto& c = *std::find_if(attributes.begin(), attributes.end(),
                                  [&](const AttributeCuts& x) { return x.source_index == i; });
    if (!c.excluded) out.push_back(attrs[k++]);
  }
  return AttributeSchema(std::move(out));
}

std::vector<std::string> DiscretizationSchema::warnings() const {
  std::vector<std::string> out;
  for (const auto& c : attributes) {
    if (c.excluded) out.push_back(c.name + ": " + c.note);
  }
  return out;
}

nlohmann::json DiscretizationSchema::to_json() const {
  nlohmann::json j;
  j["concentration_threshold"] = concentration_threshold;
  auto& arr = j["attributes"] = nlohmann::json::array();
  for (const auto& c : attributes) {
    nlohmann::json e{{"name", c.name},
                     {"source_index", c.source_index},
                     {"cuts", c.cuts},
                     {"levels", c.excluded ? 0 : c.levels()},
                     {"excluded", c.excluded}};
    if (!c.note.empty()) e["note"] = c.note;
    arr.push_back(std::move(e));
  }
  return j;
}

DiscretizationSchema DiscretizationSchema::from_json(const nlohmann::json& j) {
  DiscretizationSchema d;
  d.concentration_threshold = j.at("concentration_threshold").get<double>();
  for (const auto& e : j.at("attributes")) {
    AttributeCuts c;
    c.name = e.at("name").get<std::string>();
    c.source_index = e.at("source_index").get<std::size_t>();
    c.cuts = e.at("cuts").get<std::vector<double>>();
    c.excluded = e.at("excluded").get<bool>();
    if (e.contains("note")) c.note = e.at("note").get<std::string>();
    if (!std::is_sorted(c.cuts.begin(), c.cuts.end()) ||
        std::adjacent_find(c.cuts.begin(), c.cuts.end()) != c.cuts.end()) {
      throw ConfigError("cut points of " + c.name + " are not strictly increasing");
    }
    if (!c.excluded && c.levels() != 2 && c.levels() != 3) {
      throw ConfigError("attribute " + c.name + " must have 2 or 3 levels");
    }
    d.attributes.push_back(std::move(c));
  }
  return d;
}

DiscretizationSchema fit_discretization(const ProfileTable& table, double concentration_threshold) {
  if (table.profiles.empty()) throw DataError("cannot fit a discretization on an empty profile table");
  if (!(concentration_threshold > 0.0 && concentration_threshold <= 1.0)) {
    throw ConfigError("concentration threshold must lie in (0, 1]");
  }
  DiscretizationSchema out;
  out.concentration_threshold = concentration_threshold;
  const std::size_t n = table.profiles.size();
  std::vector<double> values(n);
  for (std::size_t j = 0; j < table.schema.size(); ++j) {
    if (table.schema.is_nominal(j)) continue;
    AttributeCuts c;
    c.name = table.schema[j].name;
    c.source_index = j;
    for (std::size_t i = 0; i < n; ++i) values[i] = table.profiles[i].values[j];
    std::sort(values.begin(), values.end());

    if (values.front() == values.back()) {
      c.excluded = true;
      c.note = "constant attribute cannot be discretized";
      out.attributes.push_back(std::move(c));
      continue;
    }

    // Most frequent value, smallest on ties.
    double mode = values[0];
    std::size_t mode_count = 0;
    for (std::size_t i = 0; i < n;) {
      std::size_t k = i;
      while (k < n && values[k] == values[i]) ++k;
      if (k - i > mode_count) {
        mode_count = k - i;
        mode = values[i];
      }
      i = k;
    }

    if (static_cast<double>(mode_count) / static_cast<double>(n) > concentration_threshold) {
      if (mode < values.back()) {
        c.cuts = {mode};
      } else {
        // Concentration at the maximum: split just below it.
        const auto it = std::lower_bound(values.begin(), values.end(), mode);
        c.cuts = {*(it - 1)};
      }
      c.note = "two levels: value concentration";
    } else {
      const std::size_t a = (n + 2) / 3;      // ceil(n/3)
      const std::size_t b = (2 * n + 2) / 3;  // ceil(2n/3)
      c.cuts = {values[a - 1], values[b - 1]};
      // A tie block spanning both cut positions (possible for thresholds above 1/3).
      if (c.cuts[0] == c.cuts[1]) {
        if (c.cuts[0] < values.back()) {
          c.cuts.pop_back();
        } else {
          c.cuts = {*(std::lower_bound(values.begin(), values.end(), c.cuts[0]) - 1)};
        }
        c.note = "two levels: tied cut points";
      }
    }
    out.attributes.push_back(std::move(c));
  }
  return out;
}

ProfileTable apply_discretization(const ProfileTable& table, const DiscretizationSchema& dschema) {
  ProfileTable out;
  out.schema = dschema.nominal_schema(table.schema);
  std::vector<const AttributeCuts*> cuts_for(table.schema.size(), nullptr);
  for (const auto& c : dschema.attributes) {
    if (c.source_index >= table.schema.size() || table.schema[c.source_index].name != c.name) {
      throw DataError("discretization was fitted on a different attribute roster");
    }
    cuts_for[c.source_index] = &c;
  }
  out.profiles.reserve(table.profiles.size());
  for (const auto& p : table.profiles) {
    CustomerProfile q{p.customer_id, {}, p.label};
    q.values.reserve(out.schema.size());
    for (std::size_t j = 0; j < table.schema.size(); ++j) {
      const AttributeCuts* c = cuts_for[j];
      if (c == nullptr) {
        q.values.push_back(p.values[j]);
      } else if (!c->excluded) {
        q.values.push_back(static_cast<double>(c->bin(p.values[j])));
      }
    }
    out.profiles.push_back(std::move(q));
  }
  return out;
}

}  // namespace amlprof
