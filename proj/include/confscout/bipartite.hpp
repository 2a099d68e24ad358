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
#include <cmath>
#include <cstddef>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "confscout/milp.hpp"

namespace confscout {

inline constexpr int kVarFeatures = 6;
inline constexpr int kConsFeatures = 4;
inline constexpr int kFeatureSchemaVersion = 1;

struct FeatureSchema {
  int version = kFeatureSchemaVersion;
};

// Per-instance normalization constants recorded during featurization.
struct Normalization {
  double max_abs_objective = 0.0;  // 0 when the objective is all zeros
  std::vector<double> row_norms;   // L2 norm of each constraint row
};

struct Edge {
  std::size_t cons = 0;
  std::size_t var = 0;
  double feature = 0.0;

  bool operator==(const Edge&) const = default;
};

// Variable nodes:   [w_j / max|w|, is_integer, has_lb, has_ub, lb~, ub~]
// Constraint nodes: [rhs_i / |A_i|, is_le, is_ge, is_eq]
// Edges:            A_ij / |A_i|
// with b~ = b / (1 + |b|) for finite bounds and 0 otherwise.
struct BipartiteGraph {
  std::string instance_id;
  int schema_version = kFeatureSchemaVersion;
  Eigen::MatrixXd var_features;   // n_vars x 6
  Eigen::MatrixXd cons_features;  // n_cons x 4
  std::vector<Edge> edges;
  Normalization norms;

  std::size_t n_vars() const noexcept { return static_cast<std::size_t>(var_features.rows()); }
  std::size_t n_cons() const noexcept { return static_cast<std::size_t>(cons_features.rows()); }
  std::size_t n_edges() const noexcept { return edges.size(); }
};

inline double squash_bound(double b) { return b / (1.0 + std::abs(b)); }

inline BipartiteGraph to_bipartite(const MilpInstance& inst, const FeatureSchema& schema = {}) {
  BipartiteGraph g;
  g.instance_id = inst.id;
  g.schema_version = schema.version;
  const std::size_t n = inst.n_vars(), m = inst.n_cons();

  // Minimization is featurized as maximization of -w.
  const double sign = inst.sense == ObjSense::minimize ? -1.0 : 1.0;
  double max_abs = 0.0;
  for (double w : inst.objective) max_abs = std::max(max_abs, std::abs(w));
  g.norms.max_abs_objective = max_abs;

  g.var_features.setZero(static_cast<Eigen::Index>(n), kVarFeatures);
  for (std::size_t j = 0; j < n; ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    g.var_features(r, 0) = max_abs > 0.0 ? sign * inst.objective[j] / max_abs : 0.0;
    g.var_features(r, 1) = inst.var_types[j] == VarType::continuous ? 0.0 : 1.0;
    g.var_features(r, 2) = inst.var_lb[j] ? 1.0 : 0.0;
    g.var_features(r, 3) = inst.var_ub[j] ? 1.0 : 0.0;
    g.var_features(r, 4) = inst.var_lb[j] ? squash_bound(*inst.var_lb[j]) : 0.0;
    g.var_features(r, 5) = inst.var_ub[j] ? squash_bound(*inst.var_ub[j]) : 0.0;
  }

  g.cons_features.setZero(static_cast<Eigen::Index>(m), kConsFeatures);
  g.norms.row_norms.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& row = inst.constraints[i];
    double sq = 0.0;
    for (const auto& [col, val] : row.coeffs) sq += val * val;
    const double norm = std::sqrt(sq);
    g.norms.row_norms[i] = norm;
    const auto r = static_cast<Eigen::Index>(i);
    if (norm > 0.0) {
      g.cons_features(r, 0) = row.rhs / norm;
      for (const auto& [col, val] : row.coeffs)
        if (val != 0.0) g.edges.push_back(Edge{i, col, val / norm});
    } else {
      g.cons_features(r, 0) = row.rhs > 0.0 ? 1.0 : row.rhs < 0.0 ? -1.0 : 0.0;
    }
    g.cons_features(r, 1 + static_cast<int>(row.sense)) = 1.0;
  }
  return g;
}

inline std::tuple<std::size_t, std::size_t, std::size_t> graph_stats(const BipartiteGraph& g) {
  return {g.n_vars(), g.n_cons(), g.n_edges()};
}

}  // namespace confscout
