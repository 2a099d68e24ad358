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

#include <cmath>
#include <cstddef>
#include <fstream>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "confscout/error.hpp"

namespace confscout {

enum class ObjSense { maximize, minimize };
enum class VarType { continuous, integer, binary };
enum class RowSense { le, ge, eq };

struct Constraint {
  // Sparse row: (column index, coefficient), no duplicate columns.
  std::vector<std::pair<std::size_t, double>> coeffs;
  RowSense sense = RowSense::le;
  double rhs = 0.0;

  bool operator==(const Constraint&) const = default;
};

// max/min w^T x  s.t.  rows of A x (<=,>=,=) b,  lb <= x <= ub.
// An absent bound is unbounded in that direction.
struct MilpInstance {
  std::string id;
  ObjSense sense = ObjSense::maximize;
  std::vector<double> objective;
  std::vector<VarType> var_types;
  std::vector<std::optional<double>> var_lb;
  std::vector<std::optional<double>> var_ub;
  std::vector<Constraint> constraints;

  std::size_t n_vars() const noexcept { return objective.size(); }
  std::size_t n_cons() const noexcept { return constraints.size(); }

  // Number of nonzero coefficients in A (explicit zeros are not counted).
  std::size_t nnz() const noexcept {
    std::size_t n = 0;
    for (const auto& row : constraints)
      for (const auto& [col, val] : row.coeffs)
        if (val != 0.0) ++n;
    return n;
  }

  bool operator==(const MilpInstance&) const = default;
};

inline std::string_view to_string(ObjSense s) { return s == ObjSense::maximize ? "maximize" : "minimize"; }

inline std::string_view to_string(VarType t) {
  switch (t) {
    case VarType::continuous: return "continuous";
    case VarType::integer: return "integer";
    case VarType::binary: return "binary";
  }
  return "continuous";
}

inline std::string_view to_string(RowSense s) {
  switch (s) {
    case RowSense::le: return "<=";
    case RowSense::ge: return ">=";
    case RowSense::eq: return "=";
  }
  return "<=";
}

// Checks the structural invariants; throws DataError naming the first violation.
inline void validate(const MilpInstance& inst) {
  const std::size_t n = inst.n_vars();
  if (inst.var_types.size() != n || inst.var_lb.size() != n || inst.var_ub.size() != n)
    throw DataError("per-variable arrays must all have length n_vars = " + std::to_string(n));
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(inst.objective[j]))
      throw DataError("non-finite objective coefficient at variable " + std::to_string(j));
    if (inst.var_lb[j] && std::isnan(*inst.var_lb[j]))
      throw DataError("NaN lower bound at variable " + std::to_string(j));
    if (inst.var_ub[j] && std::isnan(*inst.var_ub[j]))
      throw DataError("NaN upper bound at variable " + std::to_string(j));
    if (inst.var_lb[j] && inst.var_ub[j] && *inst.var_lb[j] > *inst.var_ub[j])
      throw DataError("lb > ub at variable " + std::to_string(j));
  }
  std::vector<std::size_t> last_seen(n, static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < inst.constraints.size(); ++i) {
    const auto& row = inst.constraints[i];
    if (!std::isfinite(row.rhs))
      throw DataError("non-finite rhs in constraint " + std::to_string(i));
    for (const auto& [col, val] : row.coeffs) {
      if (col >= n)
        throw DataError("constraint " + std::to_string(i) + ": column index " + std::to_string(col) +
                        " out of range (n_vars = " + std::to_string(n) + ")");
      if (!std::isfinite(val))
        throw DataError("constraint " + std::to_string(i) + ": non-finite coefficient");
      if (last_seen[col] == i)
        throw DataError("constraint " + std::to_string(i) + ": duplicate column index " + std::to_string(col));
      last_seen[col] = i;
    }
  }
}

namespace detail {

using nlohmann::json;

inline const json& require(const json& doc, const char* key, const std::string& path) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

inline double require_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ParseError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError(path, "non-finite value");
  return d;
}

inline std::optional<double> optional_bound(const json& v, const std::string& path) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) throw ParseError(path, "expected a number or null");
  const double d = v.get<double>();
  if (std::isnan(d)) throw ParseError(path, "NaN bound");
  if (std::isinf(d)) return std::nullopt;
  return d;
}

inline RowSense parse_row_sense(const json& v, const std::string& path) {
  if (!v.is_string()) throw ParseError(path, "expected a string");
  const auto s = v.get<std::string>();
  if (s == "<=" || s == "le" || s == "L") return RowSense::le;
  if (s == ">=" || s == "ge" || s == "G") return RowSense::ge;
  if (s == "=" || s == "==" || s == "eq" || s == "E") return RowSense::eq;
  throw ParseError(path, "unknown constraint sense '" + s + "'");
}

inline VarType parse_var_type(const json& v, const std::string& path) {
  if (!v.is_string()) throw ParseError(path, "expected a string");
  const auto s = v.get<std::string>();
  if (s == "continuous" || s == "C") return VarType::continuous;
  if (s == "integer" || s == "I") return VarType::integer;
  if (s == "binary" || s == "B") return VarType::binary;
  throw ParseError(path, "unknown variable type '" + s + "'");
}

}  // namespace detail

// Parses the canonical instance document:
//   {id, sense, objective[], var_types[], var_lb[], var_ub[],
//    constraints: [{coeffs: [[col, val], ...], sense, rhs}, ...]}
// var_types defaults to continuous, var_lb to 0 and var_ub to unbounded when
// the arrays are omitted; null entries mean "no bound". Binary variables
// without explicit bounds get [0, 1].
inline MilpInstance parse_milp_json(std::string_view text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("malformed document: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("", "malformed document: top level must be an object");

  MilpInstance inst;
  const auto& id = detail::require(doc, "id", "");
  if (!id.is_string()) throw ParseError("id", "expected a string");
  inst.id = id.get<std::string>();

  const auto& sense = detail::require(doc, "sense", "");
  if (!sense.is_string()) throw ParseError("sense", "expected a string");
  const auto s = sense.get<std::string>();
  if (s == "maximize" || s == "max") inst.sense = ObjSense::maximize;
  else if (s == "minimize" || s == "min") inst.sense = ObjSense::minimize;
  else throw ParseError("sense", "unknown objective sense '" + s + "'");

  const auto& obj = detail::require(doc, "objective", "");
  if (!obj.is_array()) throw ParseError("objective", "expected an array");
  for (std::size_t j = 0; j < obj.size(); ++j)
    inst.objective.push_back(detail::require_number(obj[j], "objective[" + std::to_string(j) + "]"));
  const std::size_t n = inst.objective.size();

  auto per_var = [&](const char* key) -> const json* {
    auto it = doc.find(key);
    if (it == doc.end()) return nullptr;
    if (!it->is_array()) throw ParseError(key, "expected an array");
    if (it->size() != n)
      throw ParseError(key, "length " + std::to_string(it->size()) + " differs from objective length " +
                                std::to_string(n));
    return &*it;
  };

  inst.var_types.assign(n, VarType::continuous);
  if (const json* types = per_var("var_types"))
    for (std::size_t j = 0; j < n; ++j)
      inst.var_types[j] = detail::parse_var_type((*types)[j], "var_types[" + std::to_string(j) + "]");

  inst.var_lb.assign(n, 0.0);
  inst.var_ub.assign(n, std::nullopt);
  const json* lbs = per_var("var_lb");
  const json* ubs = per_var("var_ub");
  for (std::size_t j = 0; j < n; ++j) {
    if (lbs) inst.var_lb[j] = detail::optional_bound((*lbs)[j], "var_lb[" + std::to_string(j) + "]");
    if (ubs) inst.var_ub[j] = detail::optional_bound((*ubs)[j], "var_ub[" + std::to_string(j) + "]");
    if (inst.var_types[j] == VarType::binary) {
      if (!lbs || (*lbs)[j].is_null()) inst.var_lb[j] = 0.0;
      if (!ubs || (*ubs)[j].is_null()) inst.var_ub[j] = 1.0;
    }
  }
  for (std::size_t j = 0; j < n; ++j)
    if (inst.var_lb[j] && inst.var_ub[j] && *inst.var_lb[j] > *inst.var_ub[j])
      throw ParseError("var_lb[" + std::to_string(j) + "]", "lb > ub at variable " + std::to_string(j));

  const auto& cons = detail::require(doc, "constraints", "");
  if (!cons.is_array()) throw ParseError("constraints", "expected an array");
  std::vector<std::size_t> last_seen(n, static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < cons.size(); ++i) {
    const std::string path = "constraints[" + std::to_string(i) + "]";
    const auto& c = cons[i];
    if (!c.is_object()) throw ParseError(path, "expected an object");
    Constraint row;
    const auto& coeffs = detail::require(c, "coeffs", path);
    if (!coeffs.is_array()) throw ParseError(path + ".coeffs", "expected an array");
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      const std::string cpath = path + ".coeffs[" + std::to_string(k) + "]";
      const auto& pair = coeffs[k];
      if (!pair.is_array() || pair.size() != 2) throw ParseError(cpath, "expected [column, value]");
      if (!pair[0].is_number_integer() || pair[0].get<long long>() < 0)
        throw ParseError(cpath + "[0]", "expected a non-negative integer column index");
      const auto col = static_cast<std::size_t>(pair[0].get<long long>());
      if (col >= n)
        throw ParseError(cpath + "[0]", "column index " + std::to_string(col) + " out of range (n_vars = " +
                                            std::to_string(n) + ")");
      if (last_seen[col] == i) throw ParseError(cpath + "[0]", "duplicate column index " + std::to_string(col));
      last_seen[col] = i;
      row.coeffs.emplace_back(col, detail::require_number(pair[1], cpath + "[1]"));
    }
    row.sense = detail::parse_row_sense(detail::require(c, "sense", path), path + ".sense");
    row.rhs = detail::require_number(detail::require(c, "rhs", path), path + ".rhs");
    inst.constraints.push_back(std::move(row));
  }
  return inst;
}

// Canonical re-export. Bounds are written explicitly (null = none), so
// parse_milp_json(to_milp_json(x)) == x for every valid instance.
inline std::string to_milp_json(const MilpInstance& inst) {
  using detail::json;
  json doc = json::object();
  doc["id"] = inst.id;
  doc["sense"] = std::string(to_string(inst.sense));
  doc["objective"] = inst.objective;
  json types = json::array(), lbs = json::array(), ubs = json::array();
  for (std::size_t j = 0; j < inst.n_vars(); ++j) {
    types.push_back(std::string(to_string(inst.var_types[j])));
    lbs.push_back(inst.var_lb[j] ? json(*inst.var_lb[j]) : json(nullptr));
    ubs.push_back(inst.var_ub[j] ? json(*inst.var_ub[j]) : json(nullptr));
  }
  doc["var_types"] = std::move(types);
  doc["var_lb"] = std::move(lbs);
  doc["var_ub"] = std::move(ubs);
  json cons = json::array();
  for (const auto& row : inst.constraints) {
    json coeffs = json::array();
    for (const auto& [col, val] : row.coeffs) coeffs.push_back(json::array({col, val}));
    cons.push_back({{"coeffs", std::move(coeffs)}, {"sense", std::string(to_string(row.sense))}, {"rhs", row.rhs}});
  }
  doc["constraints"] = std::move(cons);
  return doc.dump() + "\n";
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace confscout
