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
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "confscout/error.hpp"
#include "confscout/perf_db.hpp"

namespace confscout {

namespace detail {

inline std::vector<Eigen::Index> column_positions(const PerfMatrix& m, std::span<const int> subset) {
  std::vector<Eigen::Index> cols;
  cols.reserve(subset.size());
  for (int id : subset) {
    auto c = m.col_of(id);
    if (!c) throw DataError("config " + std::to_string(id) + " is not a matrix column");
    cols.push_back(static_cast<Eigen::Index>(*c));
  }
  return cols;
}

// -(1/|I|) * sum_i minima_i, summed in row order.
inline double quality_from_minima(const Eigen::VectorXd& minima) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < minima.size(); ++i) sum += minima(i);
  return -sum / static_cast<double>(minima.size());
}

}  // namespace detail

// q(S) = -(1/|I|) sum_i min_{c in S} gamma_ic, with |I| the row count.
inline double quality(const PerfMatrix& m, std::span<const int> subset) {
  if (subset.empty()) throw DataError("quality of an empty subset is undefined");
  if (m.rows() == 0) throw DataError("quality needs at least one instance");
  const auto cols = detail::column_positions(m, subset);
  Eigen::VectorXd minima = m.values.col(cols[0]);
  for (std::size_t k = 1; k < cols.size(); ++k) minima = minima.cwiseMin(m.values.col(cols[k]));
  return detail::quality_from_minima(minima);
}

// Nested greedy portfolio S_1 ⊆ S_2 ⊆ ... with q(S_k) per prefix.
struct SubsetChain {
  std::vector<int> added;       // c^1, c^2, ...
  std::vector<double> quality;  // q(S_k) for k = 1..added.size()
  double quality_full = 0.0;    // q over all columns

  std::size_t size() const noexcept { return added.size(); }
  std::vector<int> prefix(std::size_t k) const { return {added.begin(), added.begin() + static_cast<long>(k)}; }
};

// Each step adds the column maximizing q(S ∪ {c}); ties go to the smallest id.
inline SubsetChain greedy_chain(const PerfMatrix& m, std::size_t k_max) {
  if (k_max < 1 || k_max > m.cols())
    throw DataError("k_max must be in [1, " + std::to_string(m.cols()) + "], got " + std::to_string(k_max));
  if (m.rows() == 0) throw DataError("greedy selection needs at least one instance");

  SubsetChain chain;
  chain.quality_full = quality(m, m.config_ids);

  std::vector<bool> used(m.cols(), false);
  Eigen::VectorXd minima = Eigen::VectorXd::Constant(m.values.rows(), std::numeric_limits<double>::infinity());
  for (std::size_t step = 0; step < k_max; ++step) {
    std::size_t best = m.cols();
    double best_q = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (used[c]) continue;
      const double q = detail::quality_from_minima(minima.cwiseMin(m.values.col(static_cast<Eigen::Index>(c))));
      if (best == m.cols() || q > best_q || (q == best_q && m.config_ids[c] < m.config_ids[best])) {
        best = c;
        best_q = q;
      }
    }
    used[best] = true;
    minima = minima.cwiseMin(m.values.col(static_cast<Eigen::Index>(best)));
    chain.added.push_back(m.config_ids[best]);
    chain.quality.push_back(best_q);
  }
  return chain;
}

// Smallest k with q(C') - q(S_k) <= epsilon * (q(C') - q(S_1)); k_max if none.
inline std::size_t choose_size(const SubsetChain& chain, double epsilon) {
  if (chain.added.empty()) throw DataError("empty chain");
  if (epsilon < 0.0) throw DataError("epsilon must be non-negative");
  const double full_gap = chain.quality_full - chain.quality.front();
  for (std::size_t k = 1; k <= chain.quality.size(); ++k)
    if (chain.quality_full - chain.quality[k - 1] <= epsilon * full_gap) return k;
  return chain.quality.size();
}

struct BestSubset {
  std::vector<int> subset;  // sorted ids
  double quality = 0.0;
};

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Exhaustive maximum of q over all k-subsets. Ties resolve to the
// lexicographically smallest sorted id list.
inline BestSubset brute_force_best_subset(const PerfMatrix& m, std::size_t k, double guard = 1e6) {
  if (k < 1 || k > m.cols()) throw DataError("subset size out of range");
  if (binomial(m.cols(), k) > guard) throw DataError("brute force guard exceeded: C(n, k) > " + format_double(guard));

  std::vector<std::size_t> order(m.cols());
  for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m.config_ids[a] < m.config_ids[b]; });

  BestSubset best;
  best.quality = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> pick(k);
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  bool first = true;
  for (;;) {
    Eigen::VectorXd minima = m.values.col(static_cast<Eigen::Index>(order[pick[0]]));
    for (std::size_t i = 1; i < k; ++i) minima = minima.cwiseMin(m.values.col(static_cast<Eigen::Index>(order[pick[i]])));
    const double q = detail::quality_from_minima(minima);
    if (first || q > best.quality) {
      first = false;
      best.quality = q;
      best.subset.clear();
      for (std::size_t i : pick) best.subset.push_back(m.config_ids[order[i]]);
    }
    // next combination in lexicographic order
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == m.cols() - k + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

// k \t added_config_id \t q_of_prefix \t q_full
inline std::string format_chain(const SubsetChain& chain) {
  std::string out = "k\tadded_config_id\tq_of_prefix\tq_full\n";
  for (std::size_t k = 0; k < chain.added.size(); ++k)
    out += std::to_string(k + 1) + "\t" + std::to_string(chain.added[k]) + "\t" + format_double(chain.quality[k]) +
           "\t" + format_double(chain.quality_full) + "\n";
  return out;
}

}  // namespace confscout
