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

// Desk-scale stand-ins for real solver runs and benchmark instances.
//
// Synthetic gamma:
//   gamma(i, c, seed) = base(i) * penalty[latent(i)][level(c)] * (1 + a * u)
//   base(i)   = 100 * (1 + nnz / (n_vars * max(n_cons, 1)))
//   latent(i) = 0, 1, 2 for density nnz / (n_vars * n_cons) in
//               [0, 1/3), [1/3, 2/3), [2/3, 1]
//   u         = hash-seeded uniform in [-1, 1] from (instance_id, config_id, seed)
//   a         = noise amplitude (default 0.05)

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "confscout/config_space.hpp"
#include "confscout/error.hpp"
#include "confscout/milp.hpp"

namespace confscout {

inline constexpr std::size_t kSyntheticLevels = 8;

// Rows: latent density bucket. Columns: configuration level. Level 3 is the
// best single configuration on average; each bucket has its own best level.
inline constexpr std::array<std::array<double, kSyntheticLevels>, 3> kSyntheticPenalty{{
    {1.00, 1.60, 2.00, 1.30, 1.80, 1.50, 2.20, 1.20},
    {1.70, 1.00, 1.90, 1.30, 1.50, 2.10, 1.40, 1.80},
    {2.00, 1.80, 1.00, 1.30, 1.60, 1.40, 1.90, 2.20},
}};

inline constexpr std::string_view kSyntheticLevelSetting = "synthetic/level";

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic uniform in [-1, 1] keyed by a run triple.
inline double hash_uniform(std::string_view instance_id, int config_id, std::uint64_t seed) {
  std::uint64_t h = splitmix64(fnv1a64(instance_id));
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(config_id)));
  h = splitmix64(h ^ seed);
  return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

inline double instance_density(std::size_t n_vars, std::size_t n_cons, std::size_t nnz) {
  if (n_vars == 0 || n_cons == 0) return 0.0;
  return static_cast<double>(nnz) / (static_cast<double>(n_vars) * static_cast<double>(n_cons));
}

inline int density_bucket(double density) {
  if (density < 1.0 / 3.0) return 0;
  if (density < 2.0 / 3.0) return 1;
  return 2;
}

class SyntheticSolver {
 public:
  using UniformFn = std::function<double(std::string_view, int, std::uint64_t)>;

  explicit SyntheticSolver(double noise_amplitude = 0.05, UniformFn uniform = hash_uniform)
      : noise_(noise_amplitude), uniform_(std::move(uniform)) {}

  double noise_amplitude() const noexcept { return noise_; }

  static double base(const MilpInstance& inst) {
    const double n = static_cast<double>(std::max<std::size_t>(inst.n_vars(), 1));
    const double m = static_cast<double>(std::max<std::size_t>(inst.n_cons(), 1));
    return 100.0 * (1.0 + static_cast<double>(inst.nnz()) / (n * m));
  }

  static int latent(const MilpInstance& inst) {
    return density_bucket(instance_density(inst.n_vars(), inst.n_cons(), inst.nnz()));
  }

  // `level` selects the penalty column; by default it is the config id.
  double gamma(const MilpInstance& inst, int config_id, std::uint64_t seed, int level) const {
    if (level < 0 || static_cast<std::size_t>(level) >= kSyntheticLevels)
      throw DataError("synthetic level " + std::to_string(level) + " outside the penalty table");
    const double penalty = kSyntheticPenalty[static_cast<std::size_t>(latent(inst))][static_cast<std::size_t>(level)];
    return base(inst) * penalty * (1.0 + noise_ * uniform_(inst.id, config_id, seed));
  }

  double gamma(const MilpInstance& inst, int config_id, std::uint64_t seed) const {
    return gamma(inst, config_id, seed, config_id);
  }

 private:
  double noise_;
  UniformFn uniform_;
};

inline double synthetic_gamma(const MilpInstance& inst, int config_id, std::uint64_t seed, double noise = 0.05) {
  return SyntheticSolver(noise).gamma(inst, config_id, seed);
}

// Parameter definition and expansion table of the 8-level synthetic
// portfolio; config id k expands to "synthetic/level = k".
inline std::vector<ParamDef> synthetic_param_defs() {
  ParamDef d{std::string(kSyntheticLevelSetting), {}};
  for (std::size_t k = 0; k < kSyntheticLevels; ++k) d.levels.push_back(std::to_string(k));
  return {d};
}

inline int synthetic_level_from_settings(const SettingMap& settings) {
  auto it = settings.find(std::string(kSyntheticLevelSetting));
  if (it == settings.end()) throw DataError("settings do not contain " + std::string(kSyntheticLevelSetting));
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw DataError("invalid synthetic level '" + it->second + "'");
  }
}

enum class Family { sparse, medium, dense };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::sparse: return "sparse";
    case Family::medium: return "medium";
    case Family::dense: return "dense";
  }
  return "sparse";
}

inline Family parse_family(std::string_view s) {
  if (s == "sparse") return Family::sparse;
  if (s == "medium") return Family::medium;
  if (s == "dense") return Family::dense;
  throw DataError("unknown instance family '" + std::string(s) + "'");
}

namespace detail {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return state_ = splitmix64(state_); }
  // Uniform integer in [lo, hi].
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(next() % (hi - lo + 1)); }
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace detail

// Packing MILPs: max w^T x, A x <= b, x >= 0 integer, with positive integer
// data and a nonzero density drawn inside the family's bucket
// (sparse < 1/3 <= medium < 2/3 <= dense). Every row has a nonzero.
inline std::vector<MilpInstance> generate_synthetic_instances(Family family, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw DataError("instance count must be at least 1");
  // The network aggregates by means, so what it sees is row nonzero count
  // (density * n_vars). A narrow n_vars range keeps the buckets apart there.
  double dlo = 0.08, dhi = 0.25;
  if (family == Family::medium) dlo = 0.42, dhi = 0.58;
  if (family == Family::dense) dlo = 0.75, dhi = 0.95;

  std::vector<MilpInstance> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    detail::Rng rng(splitmix64(seed ^ splitmix64(fnv1a64(to_string(family)) + k)));
    const std::size_t nv = rng.between(24, 32), nc = rng.between(6, 24);
    const double target = dlo + (dhi - dlo) * rng.unit();
    const std::size_t cells = nv * nc;
    std::size_t nnz = static_cast<std::size_t>(std::llround(target * static_cast<double>(cells)));
    nnz = std::clamp(nnz, nc, cells);

    std::vector<char> filled(cells, 0);
    for (std::size_t i = 0; i < nc; ++i) filled[i * nv + rng.between(0, nv - 1)] = 1;
    std::vector<std::size_t> free_cells;
    for (std::size_t c = 0; c < cells; ++c)
      if (!filled[c]) free_cells.push_back(c);
    for (std::size_t f = 0; f + nc < nnz; ++f) {
      const std::size_t pick = f + rng.between(0, free_cells.size() - 1 - f);
      std::swap(free_cells[f], free_cells[pick]);
      filled[free_cells[f]] = 1;
    }

    MilpInstance inst;
    inst.id = std::string(to_string(family)) + "-" + std::to_string(seed) + "-" + std::to_string(k);
    inst.sense = ObjSense::maximize;
    for (std::size_t j = 0; j < nv; ++j) inst.objective.push_back(static_cast<double>(rng.between(1, 30)));
    inst.var_types.assign(nv, VarType::integer);
    inst.var_lb.assign(nv, 0.0);
    inst.var_ub.assign(nv, std::nullopt);
    for (std::size_t i = 0; i < nc; ++i) {
      Constraint row;
      double sum = 0.0;
      for (std::size_t j = 0; j < nv; ++j) {
        if (!filled[i * nv + j]) continue;
        const double a = static_cast<double>(rng.between(1, 20));
        row.coeffs.emplace_back(j, a);
        sum += a;
      }
      row.sense = RowSense::le;
      row.rhs = std::max(1.0, std::floor(0.4 * sum));
      inst.constraints.push_back(std::move(row));
    }
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace confscout
