// Copyright 2026 The confscout Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "confscout/error.hpp"

namespace confscout {

struct ParamDef {
  std::string name;
  std::vector<std::string> levels;
};

struct ConfigPoint {
  int id = 0;
  std::vector<std::size_t> assignment;  // one level index per ParamDef

  bool operator==(const ConfigPoint&) const = default;
};

// Low-level settings implied by each (parameter, level). Parameters are
// applied in merge_order; later ones override earlier ones on conflicts.
struct ExpansionTable {
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::string>> entries;
  std::vector<std::string> merge_order;
};

using SettingMap = std::map<std::string, std::string>;

struct ConfigSpace {
  std::vector<ParamDef> params;
  std::vector<ConfigPoint> all;
  std::vector<ConfigPoint> reduced;
  std::map<int, std::vector<int>> duplicates;  // survivor id -> collapsed ids
};

inline void validate_defs(const std::vector<ParamDef>& defs) {
  if (defs.empty()) throw DataError("parameter definition list is empty");
  for (const auto& d : defs) {
    if (d.levels.empty()) throw DataError("parameter '" + d.name + "' has no levels");
    std::set<std::string> seen(d.levels.begin(), d.levels.end());
    if (seen.size() != d.levels.size()) throw DataError("parameter '" + d.name + "' has duplicate level labels");
  }
}

// Lexicographic enumeration with the last parameter varying fastest.
inline std::vector<ConfigPoint> enumerate_cartesian(const std::vector<ParamDef>& defs) {
  validate_defs(defs);
  std::size_t total = 1;
  for (const auto& d : defs) total *= d.levels.size();
  std::vector<ConfigPoint> out;
  out.reserve(total);
  std::vector<std::size_t> idx(defs.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    out.push_back(ConfigPoint{static_cast<int>(n), idx});
    for (std::size_t k = defs.size(); k-- > 0;) {
      if (++idx[k] < defs[k].levels.size()) break;
      idx[k] = 0;
    }
  }
  return out;
}

inline SettingMap expand(const ConfigPoint& config, const std::vector<ParamDef>& defs, const ExpansionTable& table) {
  if (config.assignment.size() != defs.size())
    throw DataError("config " + std::to_string(config.id) + ": assignment length does not match parameter count");
  std::vector<std::size_t> order;
  if (table.merge_order.empty()) {
    order.resize(defs.size());
    std::iota(order.begin(), order.end(), 0);
  } else {
    for (const auto& name : table.merge_order) {
      auto it = std::find_if(defs.begin(), defs.end(), [&](const ParamDef& d) { return d.name == name; });
      if (it == defs.end()) throw DataError("merge order names unknown parameter '" + name + "'");
      order.push_back(static_cast<std::size_t>(it - defs.begin()));
    }
    for (std::size_t k = 0; k < defs.size(); ++k)
      if (std::find(order.begin(), order.end(), k) == order.end())
        throw DataError("merge order omits parameter '" + defs[k].name + "'");
  }
  SettingMap out;
  for (std::size_t k : order) {
    const std::size_t level = config.assignment[k];
    if (level >= defs[k].levels.size())
      throw DataError("config " + std::to_string(config.id) + ": level index out of range for '" + defs[k].name + "'");
    auto it = table.entries.find({defs[k].name, defs[k].levels[level]});
    if (it == table.entries.end())
      throw DataError("expansion table has no entry for (" + defs[k].name + ", " + defs[k].levels[level] + ")");
    for (const auto& [name, value] : it->second) out[name] = value;
  }
  return out;
}

// Collapses configs with identical expansions; the smallest id of each class
// survives and survivors keep their input order.
inline ConfigSpace dedup(const std::vector<ConfigPoint>& configs, const std::vector<ParamDef>& defs,
                         const ExpansionTable& table) {
  ConfigSpace space;
  space.params = defs;
  space.all = configs;

  std::vector<std::size_t> by_id(configs.size());
  std::iota(by_id.begin(), by_id.end(), 0);
  std::stable_sort(by_id.begin(), by_id.end(),
                   [&](std::size_t a, std::size_t b) { return configs[a].id < configs[b].id; });

  std::map<SettingMap, int> first_of;
  std::set<int> survivors;
  for (std::size_t k : by_id) {
    auto [it, inserted] = first_of.emplace(expand(configs[k], defs, table), configs[k].id);
    if (inserted) survivors.insert(configs[k].id);
    else space.duplicates[it->second].push_back(configs[k].id);
  }
  for (const auto& c : configs)
    if (survivors.count(c.id)) space.reduced.push_back(c);
  return space;
}

inline std::string emit_settings(const SettingMap& settings) {
  std::string out;
  for (const auto& [name, value] : settings) out += name + " = " + value + "\n";
  return out;
}

inline std::string emit_settings(const ConfigPoint& config, const std::vector<ParamDef>& defs,
                                 const ExpansionTable& table) {
  return emit_settings(expand(config, defs, table));
}

inline SettingMap parse_settings(std::string_view text) {
  SettingMap out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string_view::npos)
      throw ParseError("line " + std::to_string(line_no), "expected 'name = value'");
    out[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 3));
  }
  return out;
}

// --- documents -------------------------------------------------------------

// {"params": [{"name": "...", "levels": ["...", ...]}, ...]}
inline std::vector<ParamDef> parse_param_defs(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("malformed document: ") + e.what());
  }
  auto it = doc.find("params");
  if (!doc.is_object() || it == doc.end() || !it->is_array()) throw ParseError("params", "expected an array");
  std::vector<ParamDef> defs;
  for (std::size_t k = 0; k < it->size(); ++k) {
    const std::string path = "params[" + std::to_string(k) + "]";
    const auto& p = (*it)[k];
    if (!p.is_object() || !p.contains("name") || !p["name"].is_string())
      throw ParseError(path + ".name", "expected a string");
    if (!p.contains("levels") || !p["levels"].is_array()) throw ParseError(path + ".levels", "expected an array");
    ParamDef d{p["name"].get<std::string>(), {}};
    for (const auto& l : p["levels"]) {
      if (!l.is_string()) throw ParseError(path + ".levels", "level labels must be strings");
      d.levels.push_back(l.get<std::string>());
    }
    defs.push_back(std::move(d));
  }
  validate_defs(defs);
  return defs;
}

// {"merge_order": [...], "entries": {param: {level: {setting: value}}}}
// Setting values may be strings or numbers; numbers keep their literal form.
inline ExpansionTable parse_expansion_table(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("malformed document: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("", "top level must be an object");
  ExpansionTable table;
  if (auto it = doc.find("merge_order"); it != doc.end()) {
    if (!it->is_array()) throw ParseError("merge_order", "expected an array");
    for (const auto& n : *it) {
      if (!n.is_string()) throw ParseError("merge_order", "expected parameter names");
      table.merge_order.push_back(n.get<std::string>());
    }
  }
  auto entries = doc.find("entries");
  if (entries == doc.end() || !entries->is_object()) throw ParseError("entries", "expected an object");
  for (const auto& [param, levels] : entries->items()) {
    if (!levels.is_object()) throw ParseError("entries." + param, "expected an object");
    for (const auto& [level, settings] : levels.items()) {
      const std::string path = "entries." + param + "." + level;
      if (!settings.is_object()) throw ParseError(path, "expected an object");
      auto& slot = table.entries[{param, level}];
      for (const auto& [name, value] : settings.items()) {
        if (value.is_string()) slot[name] = value.get<std::string>();
        else if (value.is_number() || value.is_boolean()) slot[name] = value.dump();
        else throw ParseError(path + "." + name, "expected a string or number");
      }
    }
  }
  return table;
}

// Table mapping each (param, level) to the single setting "param = level";
// every configuration expands distinctly.
inline ExpansionTable identity_table(const std::vector<ParamDef>& defs) {
  ExpansionTable t;
  for (const auto& d : defs) {
    t.merge_order.push_back(d.name);
    for (const auto& l : d.levels) t.entries[{d.name, l}] = {{d.name, l}};
  }
  return t;
}

inline nlohmann::json config_space_to_json(const ConfigSpace& space, const ExpansionTable& table) {
  using nlohmann::json;
  json params = json::array();
  for (const auto& d : space.params) params.push_back({{"name", d.name}, {"levels", d.levels}});
  json configs = json::array();
  for (const auto& c : space.reduced) {
    json labels = json::array();
    for (std::size_t k = 0; k < c.assignment.size(); ++k) labels.push_back(space.params[k].levels[c.assignment[k]]);
    auto dup = space.duplicates.find(c.id);
    configs.push_back({{"id", c.id},
                       {"assignment", labels},
                       {"duplicates", dup == space.duplicates.end() ? std::vector<int>{} : dup->second},
                       {"settings", expand(c, space.params, table)}});
  }
  return json{{"params", std::move(params)},
              {"n_full", space.all.size()},
              {"n_reduced", space.reduced.size()},
              {"configs", std::move(configs)}};
}

// A configuration as the harness sees it: id plus the settings payload.
struct PortfolioEntry {
  int id = 0;
  SettingMap settings;
};

// Reads the "configs" list of a config-space export (or a portfolio file
// with the same layout).
inline std::vector<PortfolioEntry> parse_portfolio(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("malformed document: ") + e.what());
  }
  auto it = doc.find("configs");
  if (!doc.is_object() || it == doc.end() || !it->is_array()) throw ParseError("configs", "expected an array");
  std::vector<PortfolioEntry> out;
  for (std::size_t k = 0; k < it->size(); ++k) {
    const auto& c = (*it)[k];
    const std::string path = "configs[" + std::to_string(k) + "]";
    if (!c.is_object() || !c.contains("id") || !c["id"].is_number_integer())
      throw ParseError(path + ".id", "expected an integer");
    PortfolioEntry e{c["id"].get<int>(), {}};
    if (c.contains("settings")) {
      if (!c["settings"].is_object()) throw ParseError(path + ".settings", "expected an object");
      for (const auto& [name, value] : c["settings"].items())
        e.settings[name] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace confscout
