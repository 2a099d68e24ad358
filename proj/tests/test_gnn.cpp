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

#include <gtest/gtest.h>

#include <random>

#include "confscout/gnn.hpp"
#include "confscout/gnn_io.hpp"
#include "support/gnn_fixtures.hpp"
#include "support/oracles.hpp"

using namespace confscout;
using namespace confscout::gnn;

namespace {

Vec as_vec(const oracle::Vecd& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

TEST(Forward, ZeroWeightsGiveHeadBias) {
  GnnModel m = make_model(3, 1, 4);
  for (Mat* p : m.parameters()) p->setZero();
  for (auto& c : m.convs) {
    c.bn_scale.setOnes();
    c.running_mean.setZero();
    c.running_var.setOnes();
  }
  m.head_b2 << 0.5, -1.0, 2.0;
  std::mt19937_64 rng(1);
  const auto g = oracle::random_graph(rng, 1, 1);
  EXPECT_TRUE(forward(m, g).isApprox(m.head_b2.col(0)));
  EXPECT_TRUE(forward(m, g, Mode::train).isApprox(m.head_b2.col(0)));
}

TEST(Forward, MatchesStraightLineEvaluator) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 30; ++t) {
    auto m = fixture::random_model(1 + static_cast<int>(rng() % 5), 4 + static_cast<int>(rng() % 6), rng());
    const auto g = oracle::random_graph(rng, 1 + rng() % 7, rng() % 6);
    EXPECT_TRUE(forward(m, g).isApprox(as_vec(oracle::gnn_forward(m, g, false)), 1e-12));
    const GnnModel before = m;
    const Vec train = forward(m, make_batch(g), Mode::train, nullptr, false).row(0).transpose();
    EXPECT_TRUE(train.isApprox(as_vec(oracle::gnn_forward(m, g, true)), 1e-12));
    EXPECT_TRUE(m.convs[0].running_mean == before.convs[0].running_mean);
  }
}

TEST(Forward, BatchEqualsSeparateGraphsInEvalMode) {
  std::mt19937_64 rng(3);
  const auto m = fixture::random_model(4, 8, 5);
  std::vector<BipartiteGraph> gs;
  for (int k = 0; k < 6; ++k) gs.push_back(oracle::random_graph(rng, 1 + rng() % 6, rng() % 5));
  std::vector<const BipartiteGraph*> ptrs;
  for (const auto& g : gs) ptrs.push_back(&g);
  const Mat out = forward(m, make_batch(ptrs));
  for (std::size_t k = 0; k < gs.size(); ++k)
    EXPECT_TRUE(out.row(static_cast<Eigen::Index>(k)).transpose().isApprox(forward(m, gs[k]), 1e-12));
}

TEST(Forward, PermutationInvariance) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto m = fixture::random_model(1 + static_cast<int>(rng() % 4), 8, rng());
    const auto g = oracle::random_graph(rng, 1 + rng() % 9, rng() % 7);
    const auto p = fixture::permute(g, rng);
    EXPECT_LE((forward(m, g) - forward(m, p.graph)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Forward, RunningStatisticsUpdateInTrainMode) {
  std::mt19937_64 rng(5);
  auto m = make_model(2, 1, 4);
  const auto g = oracle::random_graph(rng, 5, 4);
  forward(m, g, Mode::train);
  EXPECT_FALSE(m.convs[0].running_mean.isZero());
  EXPECT_TRUE((m.convs[0].running_var.array() >= 0.0).all());
  const Vec a = forward(m, g), b = forward(m, g);
  EXPECT_TRUE(a == b);
}

TEST(Forward, Rejections) {
  std::mt19937_64 rng(6);
  const auto m = make_model(2, 1, 4);
  auto g = oracle::random_graph(rng, 3, 2);
  g.var_features.conservativeResize(Eigen::NoChange, 5);
  EXPECT_THROW(forward(m, g), DataError);
  auto empty = oracle::random_graph(rng, 1, 0);
  empty.var_features.resize(0, kVarFeatures);
  empty.edges.clear();
  EXPECT_THROW(forward(m, empty), DataError);
  auto other = oracle::random_graph(rng, 3, 2);
  other.schema_version = 99;
  EXPECT_THROW(forward(m, other), DataError);
}

TEST(Loss, ClosedForms) {
  Vec a(2), b(2);
  a << 0, 0;
  b << 1, -1;
  EXPECT_EQ(loss_mse(a, b), 1.0);
  EXPECT_EQ(loss_mse(b, b), 0.0);
  EXPECT_THROW(loss_mse(a, Vec(Vec::Zero(3))), DataError);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  for (int t = 0; t < 50; ++t) {
    Vec x(7), y(7);
    double s = 0.0;
    for (int k = 0; k < 7; ++k) {
      x(k) = n(rng);
      y(k) = n(rng);
      s += (x(k) - y(k)) * (x(k) - y(k));
    }
    EXPECT_NEAR(loss_mse(x, y), s / 7.0, 1e-14);
  }
}

TEST(Backward, MatchesCentralDifferences) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 3; ++t) {
    const auto m = fixture::random_model(4, 8, 100 + t);
    const auto g = oracle::random_graph(rng, 5, 4);
    Vec target(4);
    for (int k = 0; k < 4; ++k) target(k) = std::normal_distribution<double>()(rng);
    const auto check = fixture::gradient_check(m, g, target);
    for (std::size_t k = 0; k < check.names.size(); ++k) {
      if (check.rel_error[k] < 0.0) {
        EXPECT_LT(check.abs_error[k], 1e-9) << check.names[k];
        EXPECT_NE(check.names[k].find(".bias"), std::string::npos) << check.names[k];
      } else {
        EXPECT_LT(check.rel_error[k], 1e-6) << check.names[k];
      }
    }
  }
}

TEST(Backward, BatchGradientsAreMeanOfPieces) {
  // With batch statistics shared across graphs the batch loss is not a sum
  // of independent terms, so only the head (after pooling) is compared.
  std::mt19937_64 rng(9);
  auto m = fixture::random_model(3, 6, 11);
  const auto g = oracle::random_graph(rng, 4, 3);
  const GraphBatch b = make_batch(g);
  ForwardCache cache;
  const Mat pred = forward(m, b, Mode::train, &cache, false);
  const Mat target = Mat::Zero(1, 3);
  const auto grads = backward(m, b, cache, pred, target);
  const std::size_t tail = grads.size() - 1;
  EXPECT_TRUE(grads[tail].col(0).isApprox(2.0 * (pred - target).row(0).transpose() / 3.0));
}

TEST(Backward, ZeroLossMeansZeroHeadBiasGradient) {
  std::mt19937_64 rng(10);
  auto m = fixture::random_model(3, 6, 12);
  const auto g = oracle::random_graph(rng, 4, 3);
  const Vec target = forward(m, make_batch(g), Mode::train, nullptr, false).row(0).transpose();
  const auto grads = backward(m, g, target);
  EXPECT_TRUE(grads.back().isZero(0.0));
}

TEST(Backward, LinearHeadScalesWithTargets) {
  // A net whose hidden activations are all zero: the final-layer weight
  // gradient is zero and the bias gradient is linear in the residual.
  std::mt19937_64 rng(11);
  auto m = fixture::random_model(2, 4, 13);
  m.head_w1.setZero();
  m.head_b1.setConstant(-1.0);
  m.head_b2.setZero();
  const auto g = oracle::random_graph(rng, 3, 3);
  Vec t(2);
  t << 1.5, -0.5;
  const auto g1 = backward(m, g, t);
  const auto g2 = backward(m, g, Vec(2.0 * t));
  const std::size_t n = g1.size();
  EXPECT_TRUE(g1[n - 2].isZero(0.0));
  EXPECT_TRUE(g2[n - 1].isApprox(2.0 * g1[n - 1]));
}

TEST(Serialize, RoundTripIsBitIdentical) {
  std::mt19937_64 rng(12);
  const auto m = fixture::random_model(5, 8, 21);
  const auto g = oracle::random_graph(rng, 6, 4);
  const auto bytes = save_model(m);
  const auto back = load_model(bytes);
  EXPECT_EQ(back.hidden, 8);
  EXPECT_EQ(back.outputs, 5);
  EXPECT_TRUE(forward(back, g) == forward(m, g));
  EXPECT_EQ(save_model(back), bytes);
}

TEST(Serialize, BadMagicAndTruncation) {
  const auto bytes = save_model(make_model(2, 3, 4));
  auto wrong = bytes;
  wrong[0] = 'X';
  EXPECT_THROW(load_model(wrong), FormatError);
  try {
    load_model(std::string_view(bytes).substr(0, bytes.size() - 12));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos) << e.what();
  }
  auto version = bytes;
  version[8] = 7;
  EXPECT_THROW(load_model(version), FormatError);
}
