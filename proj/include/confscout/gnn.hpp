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

// Bipartite graph convolution network that maps a MILP graph to one
// predicted (standardized) primal-dual integral per portfolio configuration.
//
//   embed:   h_v = ReLU(W_v x_v + b_v),  h_c = ReLU(W_c x_c + b_c)
//   4 x { h_c <- conv(h_c, h_v);  h_v <- conv(h_v, h_c) }
//   conv:    h'_t = ReLU(BN(W1 h_t + mean_{(t,s,e)} (W2 h_s + w_e e) + b))
//   pool:    [max_v, attn_v, max_c, attn_c]          (4H latent)
//   head:    W_o ReLU(W_h z + b_h) + b_o              (|S| outputs)
//
// Batch norm normalizes each channel over all target nodes of a mini-batch.
// Gradients are written out by hand for exactly these operators.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "confscout/bipartite.hpp"
#include "confscout/error.hpp"

namespace confscout::gnn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline constexpr int kLayers = 4;
inline constexpr int kHalfConvs = 2 * kLayers;
inline constexpr int kDefaultHidden = 64;

enum class Mode { train, eval };

struct HalfConv {
  Mat root;      // H x H, applied to the target node
  Mat neighbor;  // H x H, applied to each source node
  Mat edge;      // H x 1, scales the scalar edge feature
  Mat bias;      // H x 1
  Mat bn_scale;  // H x 1
  Mat bn_shift;  // H x 1
  Mat running_mean;  // H x 1, not trained
  Mat running_var;   // H x 1, not trained
};

struct GnnModel {
  int hidden = kDefaultHidden;
  int outputs = 0;
  int schema_version = kFeatureSchemaVersion;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  Mat var_embed_w, var_embed_b;
  Mat cons_embed_w, cons_embed_b;
  std::array<HalfConv, kHalfConvs> convs;  // even: cons <- var, odd: var <- cons
  Mat var_attention, cons_attention;       // H x 1 score vectors
  Mat head_w1, head_b1;                    // 4H x 4H, 4H x 1
  Mat head_w2, head_b2;                    // S x 4H, S x 1

  int latent() const noexcept { return 4 * hidden; }

  // Trainable tensors in a fixed canonical order.
  std::vector<Mat*> parameters() {
    std::vector<Mat*> p{&var_embed_w, &var_embed_b, &cons_embed_w, &cons_embed_b};
    for (auto& c : convs) {
      for (Mat* m : {&c.root, &c.neighbor, &c.edge, &c.bias, &c.bn_scale, &c.bn_shift}) p.push_back(m);
    }
    for (Mat* m : {&var_attention, &cons_attention, &head_w1, &head_b1, &head_w2, &head_b2}) p.push_back(m);
    return p;
  }
  std::vector<const Mat*> parameters() const {
    auto p = const_cast<GnnModel*>(this)->parameters();
    return {p.begin(), p.end()};
  }

  std::vector<std::string> parameter_names() const {
    std::vector<std::string> n{"var_embed.w", "var_embed.b", "cons_embed.w", "cons_embed.b"};
    for (int k = 0; k < kHalfConvs; ++k) {
      const std::string pre = "conv" + std::to_string(k) + ".";
      for (const char* s : {"root", "neighbor", "edge", "bias", "bn_scale", "bn_shift"}) n.push_back(pre + s);
    }
    for (const char* s : {"var_attention", "cons_attention", "head.w1", "head.b1", "head.w2", "head.b2"})
      n.push_back(s);
    return n;
  }

  // Trainable tensors followed by the batch-norm running statistics.
  std::vector<Mat*> state() {
    auto p = parameters();
    for (auto& c : convs) {
      p.push_back(&c.running_mean);
      p.push_back(&c.running_var);
    }
    return p;
  }
  std::vector<const Mat*> state() const {
    auto p = const_cast<GnnModel*>(this)->state();
    return {p.begin(), p.end()};
  }
};

using Gradients = std::vector<Mat>;  // same order as GnnModel::parameters()

inline Gradients zero_gradients(const GnnModel& m) {
  Gradients g;
  for (const Mat* p : m.parameters()) g.push_back(Mat::Zero(p->rows(), p->cols()));
  return g;
}

// Allocates a model with default-style uniform initialization
// (U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and linear biases).
inline GnnModel make_model(int outputs, std::uint64_t seed, int hidden = kDefaultHidden) {
  if (outputs < 1) throw DataError("model needs at least one output");
  if (hidden < 1) throw DataError("hidden width must be positive");
  GnnModel m;
  m.hidden = hidden;
  m.outputs = outputs;
  std::mt19937_64 rng(seed);
  auto uniform = [&](Eigen::Index r, Eigen::Index c, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    Mat out(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) out(i, j) = u(rng);
    return out;
  };
  const int H = hidden, L = 4 * hidden;
  const double b_var = 1.0 / std::sqrt(double(kVarFeatures)), b_cons = 1.0 / std::sqrt(double(kConsFeatures));
  const double b_h = 1.0 / std::sqrt(double(H)), b_l = 1.0 / std::sqrt(double(L));
  m.var_embed_w = uniform(H, kVarFeatures, b_var);
  m.var_embed_b = uniform(H, 1, b_var);
  m.cons_embed_w = uniform(H, kConsFeatures, b_cons);
  m.cons_embed_b = uniform(H, 1, b_cons);
  for (auto& c : m.convs) {
    c.root = uniform(H, H, b_h);
    c.neighbor = uniform(H, H, b_h);
    c.edge = uniform(H, 1, 1.0);
    c.bias = uniform(H, 1, b_h);
    c.bn_scale = Mat::Ones(H, 1);
    c.bn_shift = Mat::Zero(H, 1);
    c.running_mean = Mat::Zero(H, 1);
    c.running_var = Mat::Ones(H, 1);
  }
  m.var_attention = uniform(H, 1, b_h);
  m.cons_attention = uniform(H, 1, b_h);
  m.head_w1 = uniform(L, L, b_l);
  m.head_b1 = uniform(L, 1, b_l);
  m.head_w2 = uniform(outputs, L, b_l);
  m.head_b2 = uniform(outputs, 1, b_l);
  return m;
}

// Disjoint union of graphs. Node rows of graph g are contiguous:
// variables [var_offset[g], var_offset[g+1]), likewise for constraints.
struct GraphBatch {
  Mat var_x;   // Nv x 6
  Mat cons_x;  // Nc x 4
  std::vector<Eigen::Index> var_offset{0};
  std::vector<Eigen::Index> cons_offset{0};
  // Row-normalized incidence (1/deg per incoming edge) and the matching
  // per-target mean edge feature, for each message direction.
  SparseRows to_cons;  // Nc x Nv
  Vec to_cons_edge;    // Nc
  SparseRows to_var;   // Nv x Nc
  Vec to_var_edge;     // Nv

  std::size_t size() const noexcept { return var_offset.size() - 1; }
  Eigen::Index n_vars() const noexcept { return var_offset.back(); }
  Eigen::Index n_cons() const noexcept { return cons_offset.back(); }
};

inline void check_graph(const BipartiteGraph& g, int schema_version) {
  if (g.schema_version != schema_version)
    throw DataError("graph '" + g.instance_id + "' has feature schema " + std::to_string(g.schema_version) +
                    ", model expects " + std::to_string(schema_version));
  if (g.var_features.cols() != kVarFeatures || g.cons_features.cols() != kConsFeatures)
    throw DataError("graph '" + g.instance_id + "': feature dimension mismatch");
  if (g.n_vars() == 0) throw DataError("graph '" + g.instance_id + "' has no variable nodes");
  for (const auto& e : g.edges)
    if (e.var >= g.n_vars() || e.cons >= g.n_cons())
      throw DataError("graph '" + g.instance_id + "': edge endpoint out of range");
}

inline GraphBatch make_batch(std::span<const BipartiteGraph* const> graphs,
                             int schema_version = kFeatureSchemaVersion) {
  GraphBatch b;
  Eigen::Index nv = 0, nc = 0;
  for (const auto* g : graphs) {
    check_graph(*g, schema_version);
    nv += static_cast<Eigen::Index>(g->n_vars());
    nc += static_cast<Eigen::Index>(g->n_cons());
    b.var_offset.push_back(nv);
    b.cons_offset.push_back(nc);
  }
  b.var_x.resize(nv, kVarFeatures);
  b.cons_x.resize(nc, kConsFeatures);

  std::vector<Eigen::Triplet<double>> tc, tv;
  Vec cons_deg = Vec::Zero(nc), var_deg = Vec::Zero(nv);
  b.to_cons_edge = Vec::Zero(nc);
  b.to_var_edge = Vec::Zero(nv);
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    const auto& g = *graphs[k];
    const Eigen::Index vo = b.var_offset[k], co = b.cons_offset[k];
    b.var_x.middleRows(vo, static_cast<Eigen::Index>(g.n_vars())) = g.var_features;
    if (g.n_cons() > 0) b.cons_x.middleRows(co, static_cast<Eigen::Index>(g.n_cons())) = g.cons_features;
    for (const auto& e : g.edges) {
      const Eigen::Index c = co + static_cast<Eigen::Index>(e.cons), v = vo + static_cast<Eigen::Index>(e.var);
      cons_deg(c) += 1.0;
      var_deg(v) += 1.0;
      b.to_cons_edge(c) += e.feature;
      b.to_var_edge(v) += e.feature;
    }
  }
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    const auto& g = *graphs[k];
    const Eigen::Index vo = b.var_offset[k], co = b.cons_offset[k];
    for (const auto& e : g.edges) {
      const Eigen::Index c = co + static_cast<Eigen::Index>(e.cons), v = vo + static_cast<Eigen::Index>(e.var);
      tc.emplace_back(c, v, 1.0 / cons_deg(c));
      tv.emplace_back(v, c, 1.0 / var_deg(v));
    }
  }
  for (Eigen::Index c = 0; c < nc; ++c)
    if (cons_deg(c) > 0) b.to_cons_edge(c) /= cons_deg(c);
  for (Eigen::Index v = 0; v < nv; ++v)
    if (var_deg(v) > 0) b.to_var_edge(v) /= var_deg(v);
  b.to_cons.resize(nc, nv);
  b.to_cons.setFromTriplets(tc.begin(), tc.end());
  b.to_var.resize(nv, nc);
  b.to_var.setFromTriplets(tv.begin(), tv.end());
  return b;
}

inline GraphBatch make_batch(const BipartiteGraph& g) {
  const BipartiteGraph* one[] = {&g};
  return make_batch(one, g.schema_version);
}

struct HalfConvCache {
  Mat target, source;  // inputs
  Mat xhat;            // normalized pre-activation
  Eigen::RowVectorXd inv_std;
  Mat out;             // post-ReLU output
};

struct ForwardCache {
  Mat var_pre, cons_pre;  // embedding pre-activations
  std::array<HalfConvCache, kHalfConvs> conv;
  Mat var_final, cons_final;
  Eigen::MatrixXi var_argmax, cons_argmax;  // G x H node row, -1 if empty side
  Vec var_alpha, cons_alpha;                // attention weights per node
  Mat latent;                               // G x 4H
  Mat hidden_pre;                           // G x 4H
  Mat hidden;                               // G x 4H
};

namespace detail {

inline Mat linear_rows(const Mat& x, const Mat& w, const Mat& b) {
  Mat y = x * w.transpose();
  y.rowwise() += b.col(0).transpose();
  return y;
}

inline Mat half_conv_forward(HalfConv& conv, const Mat& target, const Mat& source, const SparseRows& incidence,
                             const Vec& mean_edge, Mode mode, double eps, double momentum, HalfConvCache* cache,
                             bool update_running) {
  const Eigen::Index n = target.rows();
  Mat z = target * conv.root.transpose();
  if (source.rows() > 0 && incidence.nonZeros() > 0) z.noalias() += incidence * (source * conv.neighbor.transpose());
  z.noalias() += mean_edge * conv.edge.col(0).transpose();
  z.rowwise() += conv.bias.col(0).transpose();

  Eigen::RowVectorXd mean, inv_std;
  if (mode == Mode::train) {
    if (n > 0) {
      mean = z.colwise().mean();
      Eigen::RowVectorXd var = (z.rowwise() - mean).array().square().colwise().mean();
      inv_std = (var.array() + eps).rsqrt();
      if (update_running) {
        conv.running_mean.col(0) = (1.0 - momentum) * conv.running_mean.col(0) + momentum * mean.transpose();
        conv.running_var.col(0) = (1.0 - momentum) * conv.running_var.col(0) + momentum * var.transpose();
      }
    } else {
      mean = Eigen::RowVectorXd::Zero(z.cols());
      inv_std = Eigen::RowVectorXd::Ones(z.cols());
    }
  } else {
    mean = conv.running_mean.col(0).transpose();
    inv_std = (conv.running_var.col(0).transpose().array() + eps).rsqrt();
  }
  Mat xhat = (z.rowwise() - mean).array().rowwise() * inv_std.array();
  Mat y = xhat.array().rowwise() * conv.bn_scale.col(0).transpose().array();
  y.rowwise() += conv.bn_shift.col(0).transpose();
  Mat out = y.cwiseMax(0.0);
  if (cache) {
    cache->target = target;
    cache->source = source;
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->out = out;
  }
  return out;
}

// Max and softmax-attention pooling of one node side into latent columns
// [offset, offset + H) and [offset + H, offset + 2H).
inline void pool_side(const Mat& h, const std::vector<Eigen::Index>& offsets, const Mat& attention, Mat& latent,
                      Eigen::Index col, Eigen::MatrixXi& argmax, Vec& alpha) {
  const Eigen::Index H = h.cols();
  const auto G = static_cast<Eigen::Index>(offsets.size() - 1);
  argmax.setConstant(G, H, -1);
  alpha.setZero(h.rows());
  const Vec score = h * attention.col(0);
  for (Eigen::Index g = 0; g < G; ++g) {
    const Eigen::Index lo = offsets[g], hi = offsets[g + 1];
    if (hi == lo) {
      latent.block(g, col, 1, 2 * H).setZero();
      continue;
    }
    for (Eigen::Index c = 0; c < H; ++c) {
      Eigen::Index best = lo;
      for (Eigen::Index r = lo + 1; r < hi; ++r)
        if (h(r, c) > h(best, c)) best = r;
      argmax(g, c) = best;
      latent(g, col + c) = h(best, c);
    }
    const double smax = score.segment(lo, hi - lo).maxCoeff();
    double denom = 0.0;
    for (Eigen::Index r = lo; r < hi; ++r) {
      alpha(r) = std::exp(score(r) - smax);
      denom += alpha(r);
    }
    alpha.segment(lo, hi - lo) /= denom;
    latent.block(g, col + H, 1, H) = alpha.segment(lo, hi - lo).transpose() * h.middleRows(lo, hi - lo);
  }
}

}  // namespace detail

// Runs the network on a batch; returns G x |S| predictions. Train mode uses
// batch statistics and (optionally) updates the running statistics; eval mode
// uses the running statistics and leaves the model untouched.
inline Mat forward(GnnModel& model, const GraphBatch& batch, Mode mode, ForwardCache* cache = nullptr,
                   bool update_running = true) {
  if (batch.size() == 0) throw DataError("empty batch");
  if (batch.var_x.cols() != model.var_embed_w.cols() || batch.cons_x.cols() != model.cons_embed_w.cols())
    throw DataError("feature dimension mismatch");
  const Eigen::Index H = model.hidden;

  Mat var_pre = detail::linear_rows(batch.var_x, model.var_embed_w, model.var_embed_b);
  Mat cons_pre = detail::linear_rows(batch.cons_x, model.cons_embed_w, model.cons_embed_b);
  Mat hv = var_pre.cwiseMax(0.0);
  Mat hc = cons_pre.cwiseMax(0.0);

  for (int l = 0; l < kLayers; ++l) {
    hc = detail::half_conv_forward(model.convs[2 * l], hc, hv, batch.to_cons, batch.to_cons_edge, mode, model.bn_eps,
                                   model.bn_momentum, cache ? &cache->conv[2 * l] : nullptr, update_running);
    hv = detail::half_conv_forward(model.convs[2 * l + 1], hv, hc, batch.to_var, batch.to_var_edge, mode,
                                   model.bn_eps, model.bn_momentum, cache ? &cache->conv[2 * l + 1] : nullptr,
                                   update_running);
  }

  const auto G = static_cast<Eigen::Index>(batch.size());
  Mat latent(G, 4 * H);
  Eigen::MatrixXi var_argmax, cons_argmax;
  Vec var_alpha, cons_alpha;
  detail::pool_side(hv, batch.var_offset, model.var_attention, latent, 0, var_argmax, var_alpha);
  detail::pool_side(hc, batch.cons_offset, model.cons_attention, latent, 2 * H, cons_argmax, cons_alpha);

  Mat hidden_pre = detail::linear_rows(latent, model.head_w1, model.head_b1);
  Mat hidden = hidden_pre.cwiseMax(0.0);
  Mat out = detail::linear_rows(hidden, model.head_w2, model.head_b2);

  if (cache) {
    cache->var_pre = std::move(var_pre);
    cache->cons_pre = std::move(cons_pre);
    cache->var_final = std::move(hv);
    cache->cons_final = std::move(hc);
    cache->var_argmax = std::move(var_argmax);
    cache->cons_argmax = std::move(cons_argmax);
    cache->var_alpha = std::move(var_alpha);
    cache->cons_alpha = std::move(cons_alpha);
    cache->latent = std::move(latent);
    cache->hidden_pre = std::move(hidden_pre);
    cache->hidden = std::move(hidden);
  }
  return out;
}

// Eval-mode forward; a pure function of the model and the batch.
inline Mat forward(const GnnModel& model, const GraphBatch& batch) {
  return forward(const_cast<GnnModel&>(model), batch, Mode::eval, nullptr, false);
}

inline Vec forward(GnnModel& model, const BipartiteGraph& graph, Mode mode) {
  check_graph(graph, model.schema_version);
  return forward(model, make_batch(graph), mode).row(0).transpose();
}

inline Vec forward(const GnnModel& model, const BipartiteGraph& graph) {
  check_graph(graph, model.schema_version);
  return forward(model, make_batch(graph)).row(0).transpose();
}

inline double loss_mse(const Vec& pred, const Vec& target) {
  if (pred.size() != target.size()) throw DataError("prediction/target length mismatch");
  if (pred.size() == 0) return 0.0;
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

// Mean over graphs of the per-graph MSE.
inline double loss_mse(const Mat& pred, const Mat& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw DataError("prediction/target shape mismatch");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

namespace detail {

// Returns d target; accumulates d source into `d_source`.
inline Mat half_conv_backward(const HalfConv& conv, const HalfConvCache& cache, const Mat& d_out,
                              const SparseRows& incidence, const Vec& mean_edge, Mat& d_source,
                              std::span<Mat> grads) {
  // grads: root, neighbor, edge, bias, bn_scale, bn_shift
  const Eigen::Index n = cache.out.rows();
  Mat d_target = Mat::Zero(cache.target.rows(), cache.target.cols());
  if (n == 0) return d_target;
  Mat dy = (cache.out.array() > 0.0).select(d_out, 0.0);
  grads[4].col(0) += (dy.array() * cache.xhat.array()).colwise().sum().transpose().matrix();
  grads[5].col(0) += dy.colwise().sum().transpose();
  Mat dxhat = dy.array().rowwise() * conv.bn_scale.col(0).transpose().array();
  const Eigen::RowVectorXd mean_dxhat = dxhat.colwise().mean();
  const Eigen::RowVectorXd mean_dxhat_xhat = (dxhat.array() * cache.xhat.array()).colwise().mean();
  Mat dz = dxhat.rowwise() - mean_dxhat;
  dz.array() -= cache.xhat.array().rowwise() * mean_dxhat_xhat.array();
  dz.array().rowwise() *= cache.inv_std.array();

  grads[3].col(0) += dz.colwise().sum().transpose();
  grads[0].noalias() += dz.transpose() * cache.target;
  d_target.noalias() += dz * conv.root;
  grads[2].col(0) += dz.transpose() * mean_edge;
  if (cache.source.rows() > 0 && incidence.nonZeros() > 0) {
    const Mat dm = incidence.transpose() * dz;  // d(source * W2^T)
    grads[1].noalias() += dm.transpose() * cache.source;
    d_source.noalias() += dm * conv.neighbor;
  }
  return d_target;
}

inline void pool_side_backward(const Mat& h, const std::vector<Eigen::Index>& offsets, const Mat& attention,
                               const Eigen::MatrixXi& argmax, const Vec& alpha, const Mat& d_latent, Eigen::Index col,
                               Mat& d_h, Mat& d_attention) {
  const Eigen::Index H = h.cols();
  const auto G = static_cast<Eigen::Index>(offsets.size() - 1);
  for (Eigen::Index g = 0; g < G; ++g) {
    const Eigen::Index lo = offsets[g], hi = offsets[g + 1];
    if (hi == lo) continue;
    for (Eigen::Index c = 0; c < H; ++c) d_h(argmax(g, c), c) += d_latent(g, col + c);
    const Eigen::RowVectorXd dp = d_latent.block(g, col + H, 1, H);
    const auto nodes = h.middleRows(lo, hi - lo);
    const Vec a = alpha.segment(lo, hi - lo);
    const Vec dalpha = nodes * dp.transpose();
    const double s = a.dot(dalpha);
    const Vec dscore = a.array() * (dalpha.array() - s);
    d_h.middleRows(lo, hi - lo).noalias() += a * dp;
    d_h.middleRows(lo, hi - lo).noalias() += dscore * attention.col(0).transpose();
    d_attention.col(0) += nodes.transpose() * dscore;
  }
}

}  // namespace detail

// Gradients of loss_mse(pred, targets) for a train-mode forward whose
// cache is given. `pred` and `targets` are G x |S|.
inline Gradients backward(const GnnModel& model, const GraphBatch& batch, const ForwardCache& cache, const Mat& pred,
                          const Mat& targets) {
  if (pred.rows() != targets.rows() || pred.cols() != targets.cols())
    throw DataError("prediction/target shape mismatch");
  Gradients g = zero_gradients(model);
  // Index layout mirrors GnnModel::parameters().
  constexpr std::size_t kConvBase = 4, kConvStride = 6;
  constexpr std::size_t kTail = kConvBase + kConvStride * kHalfConvs;
  Mat& g_var_attn = g[kTail + 0];
  Mat& g_cons_attn = g[kTail + 1];
  Mat& g_w1 = g[kTail + 2];
  Mat& g_b1 = g[kTail + 3];
  Mat& g_w2 = g[kTail + 4];
  Mat& g_b2 = g[kTail + 5];

  const Eigen::Index H = model.hidden;
  const Mat d_out = 2.0 * (pred - targets) / static_cast<double>(pred.size());
  g_w2.noalias() += d_out.transpose() * cache.hidden;
  g_b2.col(0) += d_out.colwise().sum().transpose();
  Mat d_hidden = d_out * model.head_w2;
  Mat d_hidden_pre = (cache.hidden_pre.array() > 0.0).select(d_hidden, 0.0);
  g_w1.noalias() += d_hidden_pre.transpose() * cache.latent;
  g_b1.col(0) += d_hidden_pre.colwise().sum().transpose();
  const Mat d_latent = d_hidden_pre * model.head_w1;

  Mat d_hv = Mat::Zero(cache.var_final.rows(), H);
  Mat d_hc = Mat::Zero(cache.cons_final.rows(), H);
  detail::pool_side_backward(cache.var_final, batch.var_offset, model.var_attention, cache.var_argmax,
                             cache.var_alpha, d_latent, 0, d_hv, g_var_attn);
  detail::pool_side_backward(cache.cons_final, batch.cons_offset, model.cons_attention, cache.cons_argmax,
                             cache.cons_alpha, d_latent, 2 * H, d_hc, g_cons_attn);

  for (int l = kLayers - 1; l >= 0; --l) {
    const int kv = 2 * l + 1, kc = 2 * l;
    // var <- cons: source is the cons output of this layer.
    d_hv = detail::half_conv_backward(model.convs[kv], cache.conv[kv], d_hv, batch.to_var, batch.to_var_edge, d_hc,
                                      std::span<Mat>(g.data() + kConvBase + kConvStride * kv, kConvStride));
    // cons <- var: source is the var input of this layer.
    d_hc = detail::half_conv_backward(model.convs[kc], cache.conv[kc], d_hc, batch.to_cons, batch.to_cons_edge, d_hv,
                                      std::span<Mat>(g.data() + kConvBase + kConvStride * kc, kConvStride));
  }

  const Mat d_var_pre = (cache.var_pre.array() > 0.0).select(d_hv, 0.0);
  const Mat d_cons_pre = (cache.cons_pre.array() > 0.0).select(d_hc, 0.0);
  g[0].noalias() += d_var_pre.transpose() * batch.var_x;
  g[1].col(0) += d_var_pre.colwise().sum().transpose();
  g[2].noalias() += d_cons_pre.transpose() * batch.cons_x;
  g[3].col(0) += d_cons_pre.colwise().sum().transpose();
  return g;
}

// Convenience: train-mode forward + backward for one graph and its target row.
inline Gradients backward(GnnModel& model, const BipartiteGraph& graph, const Vec& targets, double* loss = nullptr) {
  const GraphBatch batch = make_batch(graph);
  ForwardCache cache;
  const Mat pred = forward(model, batch, Mode::train, &cache, false);
  const Mat t = targets.transpose();
  if (loss) *loss = loss_mse(pred, t);
  return backward(model, batch, cache, pred, t);
}

}  // namespace confscout::gnn
