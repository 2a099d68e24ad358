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

#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "confscout/error.hpp"
#include "confscout/milp.hpp"

namespace confscout {

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double mps_number(std::string_view tok, std::size_t line_no) {
  std::string s(tok);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ParseError("line " + std::to_string(line_no), "invalid number '" + s + "'");
  return v;
}

}  // namespace detail

// Reads fixed- or free-format MPS (whitespace separated; names may not contain
// blanks). Supported sections: NAME, OBJSENSE, ROWS, COLUMNS (with
// INTORG/INTEND markers), RHS, RANGES, BOUNDS, ENDATA. Anything else is
// rejected. A ranged row is replaced in place by two one-sided rows
// (>= lower, then <= upper). Extra free (N) rows after the objective are
// dropped. `fallback_id` is used when the NAME card is empty.
inline MilpInstance parse_mps(std::string_view text, std::string fallback_id = "mps") {
  enum class Section { none, name, objsense, rows, columns, rhs, ranges, bounds, end };

  MilpInstance inst;
  inst.id = std::move(fallback_id);
  inst.sense = ObjSense::minimize;

  struct Row {
    char type;
    std::vector<std::pair<std::size_t, double>> coeffs;
    double rhs = 0.0;
    std::optional<double> range;
  };
  std::vector<Row> rows;
  std::unordered_map<std::string, std::size_t> row_index;
  std::string objective_row;
  std::unordered_map<std::string, int> free_rows;
  std::unordered_map<std::string, std::size_t> col_index;
  std::vector<std::string> col_names;

  Section section = Section::none;
  bool in_integer_block = false;
  std::size_t line_no = 0;

  auto where = [&] { return "line " + std::to_string(line_no); };
  auto lookup_row = [&](std::string_view name) -> std::optional<std::size_t> {
    auto it = row_index.find(std::string(name));
    if (it != row_index.end()) return it->second;
    if (name == objective_row) return std::nullopt;
    if (free_rows.count(std::string(name))) return std::nullopt;
    throw ParseError(where(), "reference to undeclared row '" + std::string(name) + "'");
  };
  auto lookup_col = [&](std::string_view name) -> std::size_t {
    auto it = col_index.find(std::string(name));
    if (it == col_index.end())
      throw ParseError(where(), "reference to undeclared column '" + std::string(name) + "'");
    return it->second;
  };

  std::size_t pos = 0;
  while (pos <= text.size() && section != Section::end) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line[0] == '*') continue;
    auto tok = detail::split_ws(line);
    if (tok.empty()) continue;

    const bool header = line[0] != ' ' && line[0] != '\t';
    if (header) {
      const std::string_view key = tok[0];
      if (key == "NAME") {
        section = Section::name;
        if (tok.size() > 1) inst.id = std::string(tok[1]);
      } else if (key == "OBJSENSE") {
        section = Section::objsense;
        if (tok.size() > 1) {
          if (tok[1] == "MAX" || tok[1] == "MAXIMIZE") inst.sense = ObjSense::maximize;
          else if (tok[1] == "MIN" || tok[1] == "MINIMIZE") inst.sense = ObjSense::minimize;
          else throw ParseError(where(), "unknown OBJSENSE '" + std::string(tok[1]) + "'");
        }
      } else if (key == "ROWS") section = Section::rows;
      else if (key == "COLUMNS") section = Section::columns;
      else if (key == "RHS") section = Section::rhs;
      else if (key == "RANGES") section = Section::ranges;
      else if (key == "BOUNDS") section = Section::bounds;
      else if (key == "ENDATA") section = Section::end;
      else throw ParseError(where(), "unknown section '" + std::string(key) + "'");
      continue;
    }

    switch (section) {
      case Section::none:
      case Section::name:
        throw ParseError(where(), "data line outside of a section");
      case Section::objsense:
        if (tok[0] == "MAX" || tok[0] == "MAXIMIZE") inst.sense = ObjSense::maximize;
        else if (tok[0] == "MIN" || tok[0] == "MINIMIZE") inst.sense = ObjSense::minimize;
        else throw ParseError(where(), "unknown OBJSENSE '" + std::string(tok[0]) + "'");
        break;
      case Section::rows: {
        if (tok.size() != 2) throw ParseError(where(), "ROWS entry needs a type and a name");
        const std::string name(tok[1]);
        if (row_index.count(name) || name == objective_row || free_rows.count(name))
          throw ParseError(where(), "duplicate row '" + name + "'");
        const std::string_view type = tok[0];
        if (type == "N") {
          if (objective_row.empty()) objective_row = name;
          else free_rows.emplace(name, 0);
        } else if (type == "L" || type == "G" || type == "E") {
          row_index.emplace(name, rows.size());
          rows.push_back(Row{type[0], {}, 0.0, std::nullopt});
        } else {
          throw ParseError(where(), "unknown row type '" + std::string(type) + "'");
        }
        break;
      }
      case Section::columns: {
        if (tok.size() >= 3 && tok[1] == "'MARKER'") {
          if (tok[2] == "'INTORG'") in_integer_block = true;
          else if (tok[2] == "'INTEND'") in_integer_block = false;
          else throw ParseError(where(), "unknown marker " + std::string(tok[2]));
          break;
        }
        if (tok.size() != 3 && tok.size() != 5) throw ParseError(where(), "malformed COLUMNS entry");
        const std::string col(tok[0]);
        auto it = col_index.find(col);
        std::size_t j;
        if (it == col_index.end()) {
          j = col_names.size();
          col_index.emplace(col, j);
          col_names.push_back(col);
          inst.objective.push_back(0.0);
          inst.var_types.push_back(in_integer_block ? VarType::integer : VarType::continuous);
          inst.var_lb.push_back(0.0);
          inst.var_ub.push_back(std::nullopt);
        } else {
          j = it->second;
          if (j + 1 != col_names.size()) throw ParseError(where(), "column '" + col + "' is not contiguous");
        }
        for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
          const double v = detail::mps_number(tok[k + 1], line_no);
          if (auto r = lookup_row(tok[k])) {
            auto& coeffs = rows[*r].coeffs;
            if (!coeffs.empty() && coeffs.back().first == j)
              throw ParseError(where(), "duplicate entry for column '" + col + "' in row '" + std::string(tok[k]) + "'");
            coeffs.emplace_back(j, v);
          } else if (tok[k] == objective_row) {
            inst.objective[j] = v;
          }
        }
        break;
      }
      case Section::rhs:
      case Section::ranges: {
        // Optional leading set name: odd token counts carry one.
        const std::size_t first = tok.size() % 2 == 1 ? 1 : 0;
        if (tok.size() < 2 || tok.size() > 5) throw ParseError(where(), "malformed RHS/RANGES entry");
        for (std::size_t k = first; k + 1 < tok.size(); k += 2) {
          const double v = detail::mps_number(tok[k + 1], line_no);
          auto r = lookup_row(tok[k]);
          if (!r) {
            if (section == Section::ranges) throw ParseError(where(), "RANGES entry for a free row");
            continue;  // objective offset; not represented
          }
          if (section == Section::rhs) rows[*r].rhs = v;
          else rows[*r].range = v;
        }
        break;
      }
      case Section::bounds: {
        if (tok.size() < 2) throw ParseError(where(), "malformed BOUNDS entry");
        const std::string_view type = tok[0];
        const bool needs_value = type == "UP" || type == "LO" || type == "FX" || type == "LI" || type == "UI";
        const bool no_value = type == "FR" || type == "MI" || type == "PL" || type == "BV";
        if (!needs_value && !no_value) throw ParseError(where(), "unsupported bound type '" + std::string(type) + "'");
        std::size_t j;
        double v = 0.0;
        if (needs_value) {
          if (tok.size() == 4) j = lookup_col(tok[2]);
          else if (tok.size() == 3) j = lookup_col(tok[1]);
          else throw ParseError(where(), "malformed BOUNDS entry");
          v = detail::mps_number(tok.back(), line_no);
        } else {
          if (tok.size() == 2) j = lookup_col(tok[1]);
          else if (tok.size() == 3 && col_index.count(std::string(tok[2]))) j = lookup_col(tok[2]);
          else if (tok.size() == 3) j = lookup_col(tok[1]);  // "BV col value"
          else if (tok.size() == 4) j = lookup_col(tok[2]);
          else throw ParseError(where(), "malformed BOUNDS entry");
        }
        auto finite = [](double x) -> std::optional<double> {
          if (std::isinf(x)) return std::nullopt;
          return x;
        };
        if (type == "UP" || type == "UI") {
          // Common MPS convention: a negative upper bound on a default-bounded
          // column frees the lower bound.
          if (v < 0.0 && inst.var_lb[j] && *inst.var_lb[j] == 0.0) inst.var_lb[j] = std::nullopt;
          inst.var_ub[j] = finite(v);
          if (type == "UI") inst.var_types[j] = VarType::integer;
        } else if (type == "LO" || type == "LI") {
          inst.var_lb[j] = finite(v);
          if (type == "LI") inst.var_types[j] = VarType::integer;
        } else if (type == "FX") {
          inst.var_lb[j] = v;
          inst.var_ub[j] = v;
        } else if (type == "FR") {
          inst.var_lb[j] = std::nullopt;
          inst.var_ub[j] = std::nullopt;
        } else if (type == "MI") {
          inst.var_lb[j] = std::nullopt;
        } else if (type == "PL") {
          inst.var_ub[j] = std::nullopt;
        } else if (type == "BV") {
          inst.var_types[j] = VarType::binary;
          inst.var_lb[j] = 0.0;
          inst.var_ub[j] = 1.0;
        }
        break;
      }
      case Section::end:
        break;
    }
  }

  for (const auto& row : rows) {
    auto one_sided = [&](RowSense s, double rhs) {
      inst.constraints.push_back(Constraint{row.coeffs, s, rhs});
    };
    if (!row.range) {
      one_sided(row.type == 'L' ? RowSense::le : row.type == 'G' ? RowSense::ge : RowSense::eq, row.rhs);
      continue;
    }
    const double r = *row.range;
    double lo = row.rhs, hi = row.rhs;
    if (row.type == 'L') lo = row.rhs - std::abs(r);
    else if (row.type == 'G') hi = row.rhs + std::abs(r);
    else if (r >= 0.0) hi = row.rhs + r;
    else lo = row.rhs + r;
    one_sided(RowSense::ge, lo);
    one_sided(RowSense::le, hi);
  }

  try {
    validate(inst);
  } catch (const DataError& e) {
    throw ParseError("", e.what());
  }
  return inst;
}

// Loads an instance from disk: `.mps` files through the MPS reader,
// everything else as a canonical instance document.
inline MilpInstance read_instance(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    if (path.extension() == ".mps" || path.extension() == ".MPS")
      return parse_mps(text, path.stem().string());
    return parse_milp_json(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + (e.where().empty() ? "" : ":" + e.where()),
                     std::string(e.what()).substr(e.where().empty() ? 0 : e.where().size() + 2));
  }
}

}  // namespace confscout
