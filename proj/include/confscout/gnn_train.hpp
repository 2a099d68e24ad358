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
#include <cstdint>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "confscout/gnn.hpp"
#include "confscout/log.hpp"
#include "confscout/perf_db.hpp"

namespace confscout::gnn {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 16;
  int max_epochs = 100;
  int patience = 10;
  std::uint64_t seed = 0;
  double validation_fraction = 0.2;  // used only when no explicit validation set is given
  int hidden = kDefaultHidden;
};

inline void validate(const TrainConfig& c) {
  if (!(c.learning_rate > 0.0)) throw DataError("learning rate must be positive");
  if (c.batch_size < 1) throw DataError("batch size must be at least 1");
  if (c.max_epochs < 1) throw DataError("max epochs must be at least 1");
  if (c.validation_fraction < 0.0 || c.validation_fraction >= 1.0)
    throw DataError("validation fraction must be in [0, 1)");
}

struct TrainSample {
  BipartiteGraph graph;
  Vec target;  // standardized row, length |S|
};

struct EpochLog {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;  // NaN-free: equals train_mse when there is no validation set
};

struct TrainResult {
  GnnModel model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

class Adam {
 public:
  Adam(const GnnModel& model, const TrainConfig& cfg) : cfg_(cfg), m_(zero_gradients(model)), v_(zero_gradients(model)) {}

  void step(GnnModel& model, const Gradients& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    auto params = model.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) {
      m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * grads[k];
      v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * grads[k].cwiseAbs2();
      params[k]->array() -=
          cfg_.learning_rate * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + cfg_.adam_eps);
    }
  }

 private:
  TrainConfig cfg_;
  Gradients m_, v_;
  int t_ = 0;
};

namespace detail {

inline GraphBatch batch_of(std::span<const TrainSample> data, std::span<const std::size_t> idx, Mat* targets,
                           int schema_version) {
  std::vector<const BipartiteGraph*> graphs;
  graphs.reserve(idx.size());
  for (std::size_t i : idx) graphs.push_back(&data[i].graph);
  if (targets) {
    targets->resize(static_cast<Eigen::Index>(idx.size()), data[idx[0]].target.size());
    for (std::size_t k = 0; k < idx.size(); ++k) targets->row(static_cast<Eigen::Index>(k)) = data[idx[k]].target.transpose();
  }
  return make_batch(graphs, schema_version);
}

inline void check_dataset(std::span<const TrainSample> data, Eigen::Index width) {
  for (const auto& s : data)
    if (s.target.size() != width) throw DataError("inconsistent target widths in dataset");
}

}  // namespace detail

// Eval-mode MSE averaged over samples.
inline double evaluate_mse(const GnnModel& model, std::span<const TrainSample> data, std::size_t chunk = 64) {
  if (data.empty()) return 0.0;
  double sum = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t lo = 0; lo < data.size(); lo += chunk) {
    idx.clear();
    for (std::size_t i = lo; i < std::min(data.size(), lo + chunk); ++i) idx.push_back(i);
    Mat targets;
    const GraphBatch b = detail::batch_of(data, idx, &targets, model.schema_version);
    const Mat pred = forward(model, b);
    sum += (pred - targets).rowwise().squaredNorm().sum() / static_cast<double>(targets.cols());
  }
  return sum / static_cast<double>(data.size());
}

// Adam over shuffled mini-batches with early stopping on validation MSE.
// Returns the parameters of the best validation epoch. Deterministic given
// config.seed.
inline TrainResult train(std::span<const TrainSample> train_set, std::span<const TrainSample> val_set,
                         const TrainConfig& config) {
  validate(config);
  if (train_set.empty()) throw DataError("empty training set");
  const Eigen::Index width = train_set[0].target.size();
  if (width < 1) throw DataError("targets must have at least one entry");
  detail::check_dataset(train_set, width);
  detail::check_dataset(val_set, width);
  for (const auto& s : train_set) check_graph(s.graph, kFeatureSchemaVersion);
  for (const auto& s : val_set) check_graph(s.graph, kFeatureSchemaVersion);

  std::mt19937_64 rng(config.seed);
  TrainResult result{make_model(static_cast<int>(width), rng(), config.hidden), {}, 0};
  GnnModel model = result.model;
  Adam adam(model, config);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double train_sum = 0.0;
    for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + config.batch_size);
      std::span<const std::size_t> idx(order.data() + lo, hi - lo);
      Mat targets;
      const GraphBatch b = detail::batch_of(train_set, idx, &targets, model.schema_version);
      ForwardCache cache;
      const Mat pred = forward(model, b, Mode::train, &cache);
      train_sum += loss_mse(pred, targets) * static_cast<double>(idx.size());
      adam.step(model, backward(model, b, cache, pred, targets));
    }
    EpochLog entry{epoch, train_sum / static_cast<double>(train_set.size()), 0.0};
    entry.val_mse = val_set.empty() ? entry.train_mse : evaluate_mse(model, val_set);
    result.log.push_back(entry);
    log::debug("epoch ", epoch, " train_mse ", entry.train_mse, " val_mse ", entry.val_mse);
    if (entry.val_mse < best) {
      best = entry.val_mse;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

// Splits off config.validation_fraction of the (seed-shuffled) data for
// early stopping.
inline TrainResult train(std::span<const TrainSample> dataset, const TrainConfig& config) {
  validate(config);
  if (dataset.empty()) throw DataError("empty training set");
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * double(dataset.size())));
  std::vector<TrainSample> tr, va;
  for (std::size_t k = 0; k < idx.size(); ++k) (k < idx.size() - n_val ? tr : va).push_back(dataset[idx[k]]);
  return train(tr, va, config);
}

inline std::string format_training_log(std::span<const EpochLog> log) {
  std::string out;
  for (const auto& e : log)
    out += std::to_string(e.epoch) + "\t" + format_double(e.train_mse) + "\t" + format_double(e.val_mse) + "\n";
  return out;
}

struct Ensemble {
  std::vector<GnnModel> members;

  int outputs() const { return members.empty() ? 0 : members.front().outputs; }
};

struct EnsembleTrainResult {
  Ensemble ensemble;
  std::vector<std::vector<EpochLog>> logs;
};

// Member k is trained with seed config.seed + k. Members are independent
// and may run concurrently.
inline EnsembleTrainResult train_ensemble(std::span<const TrainSample> train_set, std::span<const TrainSample> val_set,
                                          const TrainConfig& config, int members = 3, bool concurrent = true) {
  if (members < 1) throw DataError("ensemble needs at least one member");
  std::vector<TrainConfig> cfgs(static_cast<std::size_t>(members), config);
  for (int k = 0; k < members; ++k) cfgs[static_cast<std::size_t>(k)].seed = config.seed + static_cast<std::uint64_t>(k);
  std::vector<TrainResult> results;
  if (concurrent) {
    std::vector<std::future<TrainResult>> futures;
    for (const auto& c : cfgs)
      futures.push_back(std::async(std::launch::async, [&, c] { return train(train_set, val_set, c); }));
    for (auto& f : futures) results.push_back(f.get());
  } else {
    for (const auto& c : cfgs) results.push_back(train(train_set, val_set, c));
  }
  EnsembleTrainResult out;
  for (auto& r : results) {
    out.ensemble.members.push_back(std::move(r.model));
    out.logs.push_back(std::move(r.log));
  }
  return out;
}

inline void check_widths(const Ensemble& e) {
  if (e.members.empty()) throw DataError("empty ensemble");
  for (const auto& m : e.members)
    if (m.outputs != e.members.front().outputs) throw DataError("ensemble members have different output widths");
}

// Mean of the members' eval-mode predictions; G x |S|.
inline Mat ensemble_predict(const Ensemble& e, const GraphBatch& batch) {
  check_widths(e);
  Mat sum = forward(e.members.front(), batch);
  for (std::size_t k = 1; k < e.members.size(); ++k) sum += forward(e.members[k], batch);
  return sum / static_cast<double>(e.members.size());
}

inline Vec ensemble_predict(const Ensemble& e, const BipartiteGraph& graph) {
  check_widths(e);
  for (const auto& m : e.members) check_graph(graph, m.schema_version);
  return ensemble_predict(e, make_batch(graph)).row(0).transpose();
}

// Index of the smallest prediction; ties go to the smallest index.
inline std::size_t argmin_index(const Eigen::Ref<const Vec>& pred) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < static_cast<std::size_t>(pred.size()); ++k)
    if (pred(static_cast<Eigen::Index>(k)) < pred(static_cast<Eigen::Index>(best))) best = k;
  return best;
}

inline std::size_t predict_config(const Ensemble& e, const BipartiteGraph& graph) {
  return argmin_index(ensemble_predict(e, graph));
}

inline std::size_t predict_config(const GnnModel& m, const BipartiteGraph& graph) {
  return argmin_index(forward(m, graph));
}

// Batched prediction over many graphs; returns one index per graph.
inline std::vector<std::size_t> predict_configs(const Ensemble& e, std::span<const BipartiteGraph> graphs,
                                                std::size_t chunk = 64) {
  std::vector<std::size_t> out;
  out.reserve(graphs.size());
  for (std::size_t lo = 0; lo < graphs.size(); lo += chunk) {
    std::vector<const BipartiteGraph*> ptrs;
    for (std::size_t i = lo; i < std::min(graphs.size(), lo + chunk); ++i) ptrs.push_back(&graphs[i]);
    const Mat pred = ensemble_predict(e, make_batch(ptrs));
    for (Eigen::Index r = 0; r < pred.rows(); ++r) out.push_back(argmin_index(pred.row(r).transpose()));
  }
  return out;
}

}  // namespace confscout::gnn
