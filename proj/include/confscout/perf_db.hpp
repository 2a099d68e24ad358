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

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "confscout/error.hpp"

namespace confscout {

enum class RunStatus { ok, error, timeout_of_harness };

inline std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::error: return "error";
    case RunStatus::timeout_of_harness: return "timeout_of_harness";
  }
  return "error";
}

// One solver run: gamma is the primal-dual integral (gap x seconds).
struct PerfRecord {
  std::string instance_id;
  int config_id = 0;
  std::uint64_t seed = 0;
  double gamma = 0.0;
  RunStatus status = RunStatus::ok;

  bool operator==(const PerfRecord&) const = default;
};

// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw DataError("invalid number '" + std::string(s) + "'");
  return v;
}

template <typename Int>
Int parse_int(std::string_view s) {
  Int v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    throw DataError("invalid integer '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

inline void check_identifier(std::string_view id) {
  if (id.empty() || id.find_first_of("\t\n\r") != std::string_view::npos)
    throw DataError("instance id '" + std::string(id) + "' is empty or contains tab/newline");
}

// instance_id \t config_id \t seed \t gamma \t status \n
inline std::string format_record(const PerfRecord& r) {
  check_identifier(r.instance_id);
  if (!std::isfinite(r.gamma)) throw DataError("non-finite gamma for " + r.instance_id);
  std::string line = r.instance_id;
  line += '\t';
  line += std::to_string(r.config_id);
  line += '\t';
  line += std::to_string(r.seed);
  line += '\t';
  line += format_double(r.gamma);
  line += '\t';
  line += to_string(r.status);
  line += '\n';
  return line;
}

inline PerfRecord parse_record(std::string_view line, std::size_t line_no) {
  const std::string where = "line " + std::to_string(line_no);
  const auto f = split_tabs(line);
  if (f.size() != 5) throw ParseError(where, "expected 5 tab-separated fields, got " + std::to_string(f.size()));
  PerfRecord r;
  try {
    check_identifier(f[0]);
    r.instance_id = std::string(f[0]);
    r.config_id = parse_int<int>(f[1]);
    r.seed = parse_int<std::uint64_t>(f[2]);
    r.gamma = parse_double(f[3]);
  } catch (const DataError& e) {
    throw ParseError(where, e.what());
  }
  if (!std::isfinite(r.gamma)) throw ParseError(where, "non-finite gamma");
  if (f[4] == "ok") r.status = RunStatus::ok;
  else if (f[4] == "error") r.status = RunStatus::error;
  else if (f[4] == "timeout_of_harness") r.status = RunStatus::timeout_of_harness;
  else throw ParseError(where, "unknown status '" + std::string(f[4]) + "'");
  if (r.status == RunStatus::ok && r.gamma < 0.0) throw ParseError(where, "negative gamma on an ok record");
  return r;
}

inline std::vector<PerfRecord> parse_records(std::string_view text) {
  std::vector<PerfRecord> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    out.push_back(parse_record(line, line_no));
  }
  return out;
}

// Line-delimited record file. Each append is a single write(2) on an
// O_APPEND descriptor, so lines never interleave. One writer at a time.
class RecordStore {
 public:
  explicit RecordStore(std::filesystem::path path) : path_(std::move(path)) {}

  const std::filesystem::path& path() const noexcept { return path_; }

  void append(std::span<const PerfRecord> records) const {
    if (records.empty()) return;
    const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) throw DataError("cannot open record store " + path_.string() + ": " + std::strerror(errno));
    for (const auto& r : records) {
      std::string line;
      try {
        line = format_record(r);
      } catch (...) {
        ::close(fd);
        throw;
      }
      if (::write(fd, line.data(), line.size()) != static_cast<ssize_t>(line.size())) {
        ::close(fd);
        throw DataError("short write to record store " + path_.string());
      }
    }
    ::close(fd);
  }

  void append(const PerfRecord& r) const { append(std::span<const PerfRecord>(&r, 1)); }

  // Missing file reads as an empty store.
  std::vector<PerfRecord> load() const {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return {};
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
      return parse_records(text);
    } catch (const ParseError& e) {
      throw ParseError(path_.string() + ":" + e.where(), std::string(e.what()).substr(e.where().size() + 2));
    }
  }

 private:
  std::filesystem::path path_;
};

inline void append_records(const RecordStore& store, std::span<const PerfRecord> records) { store.append(records); }
inline std::vector<PerfRecord> load_records(const RecordStore& store) { return store.load(); }

inline std::string format_records(std::span<const PerfRecord> records) {
  std::string out;
  for (const auto& r : records) out += format_record(r);
  return out;
}

// Instance x configuration table of seed-averaged gammas.
struct PerfMatrix {
  std::vector<std::string> instance_ids;
  std::vector<int> config_ids;
  Eigen::MatrixXd values;       // rows = instances, cols = configs
  Eigen::MatrixXi seed_counts;

  std::size_t rows() const noexcept { return instance_ids.size(); }
  std::size_t cols() const noexcept { return config_ids.size(); }

  std::optional<std::size_t> row_of(std::string_view id) const {
    for (std::size_t i = 0; i < instance_ids.size(); ++i)
      if (instance_ids[i] == id) return i;
    return std::nullopt;
  }
  std::optional<std::size_t> col_of(int id) const {
    for (std::size_t c = 0; c < config_ids.size(); ++c)
      if (config_ids[c] == id) return c;
    return std::nullopt;
  }

  // Columns restricted (and reordered) to `ids`.
  PerfMatrix select_configs(std::span<const int> ids) const {
    PerfMatrix out;
    out.instance_ids = instance_ids;
    out.config_ids.assign(ids.begin(), ids.end());
    out.values.resize(values.rows(), static_cast<Eigen::Index>(ids.size()));
    out.seed_counts.resize(values.rows(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto c = col_of(ids[k]);
      if (!c) throw DataError("config " + std::to_string(ids[k]) + " not in matrix");
      out.values.col(static_cast<Eigen::Index>(k)) = values.col(static_cast<Eigen::Index>(*c));
      out.seed_counts.col(static_cast<Eigen::Index>(k)) = seed_counts.col(static_cast<Eigen::Index>(*c));
    }
    return out;
  }

  PerfMatrix select_instances(std::span<const std::string> ids) const {
    PerfMatrix out;
    out.instance_ids.assign(ids.begin(), ids.end());
    out.config_ids = config_ids;
    out.values.resize(static_cast<Eigen::Index>(ids.size()), values.cols());
    out.seed_counts.resize(static_cast<Eigen::Index>(ids.size()), values.cols());
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto r = row_of(ids[k]);
      if (!r) throw DataError("instance '" + ids[k] + "' not in matrix");
      out.values.row(static_cast<Eigen::Index>(k)) = values.row(static_cast<Eigen::Index>(*r));
      out.seed_counts.row(static_cast<Eigen::Index>(k)) = seed_counts.row(static_cast<Eigen::Index>(*r));
    }
    return out;
  }
};

// Mean over seeds of the ok records for every (instance, config) pair.
// Rows are the instances seen in `records` (any status) in lexicographic
// order unless `instance_ids` is given; columns are `config_ids` in order.
inline PerfMatrix aggregate(std::span<const PerfRecord> records, std::span<const int> config_ids,
                            std::optional<std::vector<std::string>> instance_ids = std::nullopt) {
  std::set<std::tuple<std::string, int, std::uint64_t>> seen;
  for (const auto& r : records)
    if (!seen.emplace(r.instance_id, r.config_id, r.seed).second)
      throw DataError("duplicate record for (" + r.instance_id + ", " + std::to_string(r.config_id) + ", seed " +
                      std::to_string(r.seed) + ")");

  PerfMatrix m;
  if (instance_ids) {
    m.instance_ids = std::move(*instance_ids);
  } else {
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.instance_id);
    m.instance_ids.assign(ids.begin(), ids.end());
  }
  m.config_ids.assign(config_ids.begin(), config_ids.end());

  std::unordered_map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < m.instance_ids.size(); ++i) row.emplace(m.instance_ids[i], i);
  std::unordered_map<int, std::size_t> col;
  for (std::size_t c = 0; c < m.config_ids.size(); ++c) col.emplace(m.config_ids[c], c);

  const auto R = static_cast<Eigen::Index>(m.instance_ids.size());
  const auto C = static_cast<Eigen::Index>(m.config_ids.size());
  // Sum in a canonical order so the result does not depend on record order.
  std::vector<std::vector<std::vector<std::pair<std::uint64_t, double>>>> cells(
      static_cast<std::size_t>(R), std::vector<std::vector<std::pair<std::uint64_t, double>>>(static_cast<std::size_t>(C)));
  for (const auto& r : records) {
    if (r.status != RunStatus::ok) continue;
    auto ri = row.find(r.instance_id);
    auto ci = col.find(r.config_id);
    if (ri == row.end() || ci == col.end()) continue;
    if (!std::isfinite(r.gamma) || r.gamma < 0.0) throw DataError("invalid gamma for " + r.instance_id);
    cells[ri->second][ci->second].emplace_back(r.seed, r.gamma);
  }
  m.values.resize(R, C);
  m.seed_counts.resize(R, C);
  for (Eigen::Index i = 0; i < R; ++i) {
    for (Eigen::Index c = 0; c < C; ++c) {
      auto& cell = cells[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
      if (cell.empty())
        throw DataError("missing cell (" + m.instance_ids[static_cast<std::size_t>(i)] + ", " +
                        std::to_string(m.config_ids[static_cast<std::size_t>(c)]) + ")");
      std::sort(cell.begin(), cell.end());
      double sum = 0.0;
      for (const auto& [seed, g] : cell) sum += g;
      m.values(i, c) = sum / static_cast<double>(cell.size());
      m.seed_counts(i, c) = static_cast<int>(cell.size());
    }
  }
  return m;
}

struct StandardizedTargets {
  Eigen::MatrixXd values;
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;  // population standard deviation
};

// Per-row z-scores; rows with zero spread become all zeros.
inline StandardizedTargets standardize(const Eigen::MatrixXd& m) {
  StandardizedTargets t;
  t.values.resize(m.rows(), m.cols());
  t.mean.resize(m.rows());
  t.stddev.resize(m.rows());
  const double n = static_cast<double>(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mu = m.row(i).sum() / n;
    const double var = (m.row(i).array() - mu).square().sum() / n;
    const double sigma = std::sqrt(var);
    t.mean(i) = mu;
    t.stddev(i) = sigma;
    if (sigma > 0.0) t.values.row(i) = (m.row(i).array() - mu) / sigma;
    else t.values.row(i).setZero();
  }
  return t;
}

inline StandardizedTargets standardize(const PerfMatrix& m) { return standardize(m.values); }

// Index of the smallest entry; ties go to the smallest id.
inline std::size_t argmin_by_id(const Eigen::Ref<const Eigen::RowVectorXd>& row, std::span<const int> ids) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < static_cast<std::size_t>(row.size()); ++c) {
    const double v = row(static_cast<Eigen::Index>(c)), b = row(static_cast<Eigen::Index>(best));
    if (v < b || (v == b && ids[c] < ids[best])) best = c;
  }
  return best;
}

inline int best_config(const PerfMatrix& m, std::string_view instance_id) {
  auto r = m.row_of(instance_id);
  if (!r) throw DataError("unknown instance '" + std::string(instance_id) + "'");
  if (m.cols() == 0) throw DataError("matrix has no configurations");
  return m.config_ids[argmin_by_id(m.values.row(static_cast<Eigen::Index>(*r)), m.config_ids)];
}

}  // namespace confscout
