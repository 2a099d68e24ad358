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
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "confscout/bipartite.hpp"
#include "confscout/config_space.hpp"
#include "confscout/error.hpp"
#include "confscout/eval.hpp"
#include "confscout/gnn_train.hpp"
#include "confscout/harness.hpp"
#include "confscout/milp.hpp"
#include "confscout/mps.hpp"
#include "confscout/perf_db.hpp"

// Glue shared by the command-line stages: instance directories, training
// samples, prediction files and per-run extraction.
namespace confscout {

struct LoadedInstance {
  MilpInstance instance;
  std::filesystem::path path;
};

// All *.json / *.mps files of a directory, sorted by file name. A plain
// file is read as a single instance.
inline std::vector<LoadedInstance> load_instances(const std::filesystem::path& where) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (fs::is_directory(where)) {
    for (const auto& e : fs::directory_iterator(where)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".json" || ext == ".mps" || ext == ".MPS")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(where)) {
    files.push_back(where);
  } else {
    throw DataError("no instances at " + where.string());
  }
  if (files.empty()) throw DataError("no instance files in " + where.string());
  std::vector<LoadedInstance> out;
  std::map<std::string, std::string> seen;
  for (const auto& f : files) {
    LoadedInstance li{read_instance(f), f};
    check_identifier(li.instance.id);
    auto [it, fresh] = seen.emplace(li.instance.id, f.string());
    if (!fresh) throw DataError("instance id '" + li.instance.id + "' appears in " + it->second + " and " + f.string());
    out.push_back(std::move(li));
  }
  return out;
}

// Writes each instance as <dir>/<id>.json.
inline std::vector<PlanInstance> write_instances(std::span<const MilpInstance> instances,
                                                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<PlanInstance> out;
  for (const auto& inst : instances) {
    const auto p = dir / (inst.id + ".json");
    write_text_file(p, to_milp_json(inst));
    out.push_back({inst.id, p});
  }
  return out;
}

inline std::vector<PlanInstance> plan_instances(std::span<const LoadedInstance> instances) {
  std::vector<PlanInstance> out;
  for (const auto& li : instances) out.push_back({li.instance.id, li.path});
  return out;
}

inline std::vector<PlanConfig> plan_configs(std::span<const PortfolioEntry> portfolio) {
  std::vector<PlanConfig> out;
  for (const auto& e : portfolio) out.push_back({e.id, e.settings});
  return out;
}

inline std::vector<int> portfolio_ids(std::span<const PortfolioEntry> portfolio) {
  std::vector<int> ids;
  for (const auto& e : portfolio) ids.push_back(e.id);
  return ids;
}

// {"configs": [{"id": .., "settings": {..}}, ...]} in the given order.
inline std::string format_portfolio(std::span<const PortfolioEntry> portfolio) {
  nlohmann::json configs = nlohmann::json::array();
  for (const auto& e : portfolio) configs.push_back({{"id", e.id}, {"settings", e.settings}});
  return nlohmann::json{{"configs", std::move(configs)}}.dump(2) + "\n";
}

inline std::vector<PortfolioEntry> subset_portfolio(std::span<const PortfolioEntry> portfolio,
                                                    std::span<const int> ids) {
  std::vector<PortfolioEntry> out;
  for (int id : ids) {
    auto it = std::find_if(portfolio.begin(), portfolio.end(), [&](const PortfolioEntry& e) { return e.id == id; });
    if (it == portfolio.end()) throw DataError("config " + std::to_string(id) + " is not in the portfolio");
    out.push_back(*it);
  }
  return out;
}

// One sample per instance: its graph and its standardized matrix row.
inline std::vector<gnn::TrainSample> make_samples(std::span<const MilpInstance> instances, const PerfMatrix& matrix) {
  const auto z = standardize(matrix);
  std::vector<gnn::TrainSample> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    auto r = matrix.row_of(inst.id);
    if (!r) throw DataError("instance '" + inst.id + "' has no performance data");
    out.push_back({to_bipartite(inst), z.values.row(static_cast<Eigen::Index>(*r)).transpose()});
  }
  return out;
}

// --- predictions -------------------------------------------------------------

using Predictions = std::vector<std::pair<std::string, int>>;  // (instance_id, config_id)

// instance_id \t config_id
inline std::string format_predictions(const Predictions& p) {
  std::string out;
  for (const auto& [id, cfg] : p) out += id + "\t" + std::to_string(cfg) + "\n";
  return out;
}

inline Predictions parse_predictions(std::string_view text) {
  Predictions out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    const std::string where = "line " + std::to_string(line_no);
    if (f.size() != 2) throw ParseError(where, "expected instance_id and config_id");
    try {
      check_identifier(f[0]);
      out.emplace_back(std::string(f[0]), parse_int<int>(f[1]));
    } catch (const DataError& e) {
      throw ParseError(where, e.what());
    }
  }
  return out;
}

inline Predictions predict_instances(const gnn::Ensemble& ensemble, std::span<const MilpInstance> instances,
                                     std::span<const int> config_ids) {
  if (static_cast<std::size_t>(ensemble.outputs()) != config_ids.size())
    throw DataError("model predicts " + std::to_string(ensemble.outputs()) + " configurations but the portfolio has " +
                    std::to_string(config_ids.size()));
  std::vector<BipartiteGraph> graphs;
  graphs.reserve(instances.size());
  for (const auto& inst : instances) graphs.push_back(to_bipartite(inst));
  const auto idx = gnn::predict_configs(ensemble, graphs);
  Predictions out;
  for (std::size_t k = 0; k < instances.size(); ++k) out.emplace_back(instances[k].id, config_ids[idx[k]]);
  return out;
}

// --- per-run extraction --------------------------------------------------------

// Ok records of each instance's chosen config, one per seed, in record order.
// `fixed` (when set) overrides the choice for every instance.
inline std::vector<RunResult> select_runs(std::span<const PerfRecord> records, const Predictions& choice,
                                          std::optional<int> fixed = std::nullopt) {
  std::map<std::string, int> want;
  for (const auto& [id, cfg] : choice) want[id] = fixed.value_or(cfg);
  std::vector<RunResult> out;
  std::map<std::string, std::size_t> found;
  for (const auto& r : records) {
    auto it = want.find(r.instance_id);
    if (it == want.end() || r.config_id != it->second) continue;
    if (r.status != RunStatus::ok)
      throw DataError("run (" + r.instance_id + ", " + std::to_string(r.config_id) + ", seed " +
                      std::to_string(r.seed) + ") did not finish ok");
    out.push_back({r.instance_id, r.seed, r.config_id, r.gamma});
    ++found[r.instance_id];
  }
  for (const auto& [id, cfg] : want)
    if (!found.count(id)) throw DataError("no runs of config " + std::to_string(cfg) + " on instance '" + id + "'");
  return out;
}

// Fraction of the regret between the best single config and the
// per-instance oracle that the model recovers.
inline double gap_closure(double single_best_total, double model_total, double oracle_total) {
  const double gap = single_best_total - oracle_total;
  if (!(gap > 0.0)) throw DataError("no regret gap to close (single best already matches the oracle)");
  return (single_best_total - model_total) / gap;
}

// Column with the smallest mean; ties go to the smallest id.
inline int single_best_config(const PerfMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw DataError("empty performance matrix");
  const Eigen::RowVectorXd mean = m.values.colwise().mean();
  return m.config_ids[argmin_by_id(mean, m.config_ids)];
}

}  // namespace confscout
