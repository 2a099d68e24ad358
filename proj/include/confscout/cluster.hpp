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

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "confscout/error.hpp"
#include "confscout/milp.hpp"
#include "confscout/perf_db.hpp"

namespace confscout {

struct InstanceSignature {
  std::string id;
  std::size_t n_vars = 0;
  std::size_t n_cons = 0;
};

inline InstanceSignature signature_of(const MilpInstance& inst) { return {inst.id, inst.n_vars(), inst.n_cons()}; }

using SizeKey = std::pair<std::size_t, std::size_t>;  // (n_vars, n_cons)

// Fallback predictor for small heterogeneous sets: instances that share
// their exact (n_vars, n_cons) form a cluster once there are at least
// min_cluster_size of them; everything else is pooled into the residual.
struct ClusterModel {
  std::map<SizeKey, int> clusters;
  int residual = 0;
  std::size_t min_cluster_size = 2;
};

namespace detail {

// Config whose mean gamma over `rows` is smallest (ties -> smallest id).
inline int best_mean_config(const PerfMatrix& m, const std::vector<Eigen::Index>& rows) {
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(m.values.cols());
  for (Eigen::Index r : rows) sum += m.values.row(r);
  sum /= static_cast<double>(rows.size());
  return m.config_ids[argmin_by_id(sum, m.config_ids)];
}

}  // namespace detail

inline ClusterModel fit_clusters(std::span<const InstanceSignature> instances, const PerfMatrix& matrix,
                                 std::size_t min_cluster_size = 2) {
  if (matrix.cols() == 0) throw DataError("matrix has no configurations");
  if (instances.empty()) throw DataError("no instances to cluster");
  std::map<SizeKey, std::vector<Eigen::Index>> groups;
  for (const auto& inst : instances) {
    auto r = matrix.row_of(inst.id);
    if (!r) throw DataError("instance '" + inst.id + "' is missing from the performance matrix");
    groups[{inst.n_vars, inst.n_cons}].push_back(static_cast<Eigen::Index>(*r));
  }
  ClusterModel model;
  model.min_cluster_size = min_cluster_size;
  std::vector<Eigen::Index> residual_rows;
  for (const auto& [key, rows] : groups) {
    if (rows.size() >= min_cluster_size) model.clusters[key] = detail::best_mean_config(matrix, rows);
    else residual_rows.insert(residual_rows.end(), rows.begin(), rows.end());
  }
  if (residual_rows.empty()) {
    for (const auto& [key, rows] : groups) residual_rows.insert(residual_rows.end(), rows.begin(), rows.end());
  }
  model.residual = detail::best_mean_config(matrix, residual_rows);
  return model;
}

inline int predict_cluster(const ClusterModel& model, std::size_t n_vars, std::size_t n_cons) {
  auto it = model.clusters.find({n_vars, n_cons});
  return it == model.clusters.end() ? model.residual : it->second;
}

inline int predict_cluster(const ClusterModel& model, const MilpInstance& inst) {
  return predict_cluster(model, inst.n_vars(), inst.n_cons());
}

// n_vars \t n_cons \t config_id per cluster, then "residual \t config_id"
// and "min_cluster_size \t k".
inline std::string format_cluster_model(const ClusterModel& model) {
  std::string out;
  for (const auto& [key, cfg] : model.clusters)
    out += std::to_string(key.first) + "\t" + std::to_string(key.second) + "\t" + std::to_string(cfg) + "\n";
  out += "residual\t" + std::to_string(model.residual) + "\n";
  out += "min_cluster_size\t" + std::to_string(model.min_cluster_size) + "\n";
  return out;
}

inline ClusterModel parse_cluster_model(std::string_view text) {
  ClusterModel model;
  bool have_residual = false;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    try {
      if (f.size() == 2 && f[0] == "residual") {
        model.residual = parse_int<int>(f[1]);
        have_residual = true;
      } else if (f.size() == 2 && f[0] == "min_cluster_size") {
        model.min_cluster_size = parse_int<std::size_t>(f[1]);
      } else if (f.size() == 3) {
        model.clusters[{parse_int<std::size_t>(f[0]), parse_int<std::size_t>(f[1])}] = parse_int<int>(f[2]);
      } else {
        throw DataError("unrecognized line");
      }
    } catch (const DataError& e) {
      throw ParseError("line " + std::to_string(line_no), e.what());
    }
  }
  if (!have_residual) throw ParseError("", "cluster model has no residual line");
  return model;
}

}  // namespace confscout
