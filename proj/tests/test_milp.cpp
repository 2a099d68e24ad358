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

#include <algorithm>
#include <numeric>
#include <random>

#include "confscout/bipartite.hpp"
#include "confscout/milp.hpp"
#include "confscout/mps.hpp"
#include "support/oracles.hpp"

using namespace confscout;

namespace {

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const DataError& e) {
    return e.what();
  }
  return "<no error>";
}

}  // namespace

TEST(MilpJson, TwoVarsOneRow) {
  const auto inst = parse_milp_json(R"({"id":"a","sense":"maximize","objective":[1,1],
    "constraints":[{"coeffs":[[0,1.0],[1,2.0]],"sense":"<=","rhs":4}]})");
  EXPECT_EQ(inst.n_vars(), 2u);
  EXPECT_EQ(inst.n_cons(), 1u);
  ASSERT_EQ(inst.constraints[0].coeffs.size(), 2u);
  EXPECT_EQ(inst.constraints[0].coeffs[0], (std::pair<std::size_t, double>{0, 1.0}));
  EXPECT_EQ(inst.constraints[0].coeffs[1], (std::pair<std::size_t, double>{1, 2.0}));
  EXPECT_EQ(inst.constraints[0].rhs, 4.0);
  EXPECT_EQ(inst.constraints[0].sense, RowSense::le);
  EXPECT_EQ(inst.var_lb[0], 0.0);
  EXPECT_FALSE(inst.var_ub[0].has_value());
}

TEST(MilpJson, EmptyConstraintList) {
  const auto inst = parse_milp_json(R"({"id":"e","sense":"min","objective":[3],"constraints":[]})");
  EXPECT_EQ(inst.n_cons(), 0u);
  EXPECT_NO_THROW(validate(inst));
}

TEST(MilpJson, InvertedBoundsNamesVariable) {
  const auto msg = error_of([] {
    parse_milp_json(R"({"id":"b","sense":"max","objective":[1],"var_lb":[1],"var_ub":[0],"constraints":[]})");
  });
  EXPECT_NE(msg.find("lb > ub at variable 0"), std::string::npos) << msg;
  EXPECT_NE(msg.find("var_lb[0]"), std::string::npos) << msg;
}

TEST(MilpJson, ErrorsCarryFieldPaths) {
  EXPECT_NE(error_of([] {
              parse_milp_json(R"({"id":"x","sense":"max","objective":[1],
                "constraints":[{"coeffs":[[3,1]],"sense":"<=","rhs":1}]})");
            }).find("constraints[0].coeffs[0][0]"),
            std::string::npos);
  EXPECT_NE(error_of([] {
              parse_milp_json(R"({"id":"x","sense":"max","objective":[1,2],
                "constraints":[{"coeffs":[[1,1],[1,2]],"sense":"<=","rhs":1}]})");
            }).find("duplicate column"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse_milp_json(R"({"id":"x","objective":[1],"constraints":[]})"); }).find("sense"),
            std::string::npos);
  EXPECT_NE(error_of([] { parse_milp_json("{not json"); }).find("malformed"), std::string::npos);
  EXPECT_NE(error_of([] {
              parse_milp_json(R"({"id":"x","sense":"max","objective":[1],"var_types":["integer","binary"],
                "constraints":[]})");
            }).find("var_types"),
            std::string::npos);
  EXPECT_NE(error_of([] {
              parse_milp_json(R"({"id":"x","sense":"max","objective":[1],
                "constraints":[{"coeffs":[[0,1]],"sense":"<>","rhs":1}]})");
            }).find("constraints[0].sense"),
            std::string::npos);
}

TEST(MilpJson, BinaryDefaultsToUnitBox) {
  const auto inst =
      parse_milp_json(R"({"id":"b","sense":"max","objective":[1],"var_types":["binary"],"constraints":[]})");
  EXPECT_EQ(inst.var_lb[0], 0.0);
  EXPECT_EQ(inst.var_ub[0], 1.0);
}

TEST(MilpJson, RoundTripRandomInstances) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    const auto inst = oracle::random_instance(rng, 1 + rng() % 9, rng() % 7, "r" + std::to_string(t));
    const auto back = parse_milp_json(to_milp_json(inst));
    EXPECT_EQ(back, inst);
  }
}

TEST(MilpJson, NnzSkipsExplicitZeros) {
  const auto inst = parse_milp_json(R"({"id":"z","sense":"max","objective":[1,1],
    "constraints":[{"coeffs":[[0,0.0],[1,2.0]],"sense":"<=","rhs":4}]})");
  EXPECT_EQ(inst.nnz(), 1u);
  EXPECT_EQ(std::get<2>(graph_stats(to_bipartite(inst))), 1u);
}

namespace {

const char* kSmallMps = R"(NAME          TINY
ROWS
 N  COST
 L  LIM1
COLUMNS
    X1        COST         1.0   LIM1         1.0
    X2        COST         2.0   LIM1         3.0
RHS
    RHS       LIM1         4.0
ENDATA
)";

}  // namespace

TEST(Mps, MinimalRowAndColumns) {
  const auto inst = parse_mps(kSmallMps);
  EXPECT_EQ(inst.id, "TINY");
  EXPECT_EQ(inst.sense, ObjSense::minimize);
  EXPECT_EQ(inst.objective, (std::vector<double>{1.0, 2.0}));
  ASSERT_EQ(inst.n_cons(), 1u);
  EXPECT_EQ(inst.constraints[0].sense, RowSense::le);
  EXPECT_EQ(inst.constraints[0].rhs, 4.0);
  EXPECT_EQ(inst.constraints[0].coeffs, (std::vector<std::pair<std::size_t, double>>{{0, 1.0}, {1, 3.0}}));
  EXPECT_EQ(inst.var_types, (std::vector<VarType>{VarType::continuous, VarType::continuous}));
}

TEST(Mps, IntegerMarker) {
  const auto inst = parse_mps(R"(NAME M
OBJSENSE
    MAX
ROWS
 N obj
 G c1
COLUMNS
 x obj 1 c1 1
 MARKER 'MARKER' 'INTORG'
 y obj 1 c1 1
 MARKER 'MARKER' 'INTEND'
 z obj 1 c1 1
RHS
 rhs c1 2
BOUNDS
 UP bnd y 5
 BV bnd z
ENDATA
)");
  EXPECT_EQ(inst.sense, ObjSense::maximize);
  EXPECT_EQ(inst.var_types, (std::vector<VarType>{VarType::continuous, VarType::integer, VarType::binary}));
  EXPECT_EQ(inst.var_ub[1], 5.0);
  EXPECT_EQ(inst.var_ub[2], 1.0);
  EXPECT_EQ(inst.constraints[0].sense, RowSense::ge);
}

TEST(Mps, RangesBecomeTwoRows) {
  const auto inst = parse_mps(R"(NAME R
ROWS
 N obj
 L a
 G b
 E c
 E d
COLUMNS
 x obj 1 a 1
 x b 1 c 1
 x d 1
RHS
 rhs a 10 b 2
 rhs c 5 d 5
RANGES
 rng a 4 b 3
 rng c 2 d -2
ENDATA
)");
  ASSERT_EQ(inst.n_cons(), 8u);
  const std::vector<std::pair<RowSense, double>> expect{{RowSense::ge, 6},  {RowSense::le, 10}, {RowSense::ge, 2},
                                                        {RowSense::le, 5},  {RowSense::ge, 5},  {RowSense::le, 7},
                                                        {RowSense::ge, 3},  {RowSense::le, 5}};
  for (std::size_t i = 0; i < expect.size(); ++i) {
    EXPECT_EQ(inst.constraints[i].sense, expect[i].first) << i;
    EXPECT_EQ(inst.constraints[i].rhs, expect[i].second) << i;
  }
}

TEST(Mps, BoundKinds) {
  const auto inst = parse_mps(R"(NAME B
ROWS
 N obj
 L r
COLUMNS
 a r 1
 b r 1
 c r 1
 d r 1
 e r 1
 f r 1
RHS
 rhs r 1
BOUNDS
 LO bnd a -2
 UP bnd a 3
 FX bnd b 4
 FR bnd c
 MI bnd d
 UP bnd e -1
 LI bnd f 1
 PL bnd f
ENDATA
)");
  EXPECT_EQ(inst.var_lb[0], -2.0);
  EXPECT_EQ(inst.var_ub[0], 3.0);
  EXPECT_EQ(inst.var_lb[1], 4.0);
  EXPECT_EQ(inst.var_ub[1], 4.0);
  EXPECT_FALSE(inst.var_lb[2] || inst.var_ub[2]);
  EXPECT_FALSE(inst.var_lb[3]);
  EXPECT_FALSE(inst.var_lb[4]);
  EXPECT_EQ(inst.var_ub[4], -1.0);
  EXPECT_EQ(inst.var_types[5], VarType::integer);
  EXPECT_EQ(inst.var_lb[5], 1.0);
}

TEST(Mps, Rejections) {
  EXPECT_THROW(parse_mps("NAME X\nSOS\nENDATA\n"), ParseError);
  EXPECT_THROW(parse_mps("NAME X\nROWS\n N obj\nCOLUMNS\n x r 1\nENDATA\n"), ParseError);
  EXPECT_THROW(parse_mps("NAME X\nROWS\n N obj\n L r\nCOLUMNS\n x r 1\nBOUNDS\n UP bnd y 1\nENDATA\n"), ParseError);
  EXPECT_THROW(parse_mps("NAME X\nROWS\n N obj\n L r\nCOLUMNS\n x r 1\nBOUNDS\n SC bnd x 1\nENDATA\n"), ParseError);
  const auto msg = error_of([] { parse_mps("NAME X\nROWS\n N obj\nQUADOBJ\nENDATA\n"); });
  EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
}

TEST(Mps, CanonicalReexportRoundTrip) {
  for (const char* text : {kSmallMps}) {
    const auto first = parse_mps(text);
    EXPECT_EQ(parse_milp_json(to_milp_json(first)), first);
  }
  const auto ranged = parse_mps("NAME R\nOBJSENSE MAX\nROWS\n N o\n E e\nCOLUMNS\n x o 2 e 1\n y o -1 e 3\n"
                                "RHS\n rhs e 1\nRANGES\n rng e 5\nBOUNDS\n MI bnd y\nENDATA\n");
  EXPECT_EQ(parse_milp_json(to_milp_json(ranged)), ranged);
}

TEST(Bipartite, ObjectiveScaledByMaxAbs) {
  MilpInstance inst;
  inst.id = "o";
  inst.objective = {3.0, -1.0};
  inst.var_types.assign(2, VarType::continuous);
  inst.var_lb.assign(2, 0.0);
  inst.var_ub.assign(2, std::nullopt);
  const auto g = to_bipartite(inst);
  EXPECT_DOUBLE_EQ(g.var_features(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(g.var_features(1, 0), -1.0 / 3.0);
  inst.sense = ObjSense::minimize;
  EXPECT_DOUBLE_EQ(to_bipartite(inst).var_features(0, 0), -1.0);
  inst.objective = {0.0, 0.0};
  EXPECT_TRUE(to_bipartite(inst).var_features.col(0).isZero());
}

TEST(Bipartite, RowNormalization) {
  const auto inst = parse_milp_json(R"({"id":"n","sense":"max","objective":[1,1],
    "constraints":[{"coeffs":[[0,3],[1,4]],"sense":"<=","rhs":10}]})");
  const auto g = to_bipartite(inst);
  EXPECT_DOUBLE_EQ(g.cons_features(0, 0), 2.0);
  EXPECT_EQ(g.cons_features(0, 1), 1.0);
  EXPECT_EQ(g.cons_features(0, 2), 0.0);
  ASSERT_EQ(g.edges.size(), 2u);
  EXPECT_DOUBLE_EQ(g.edges[0].feature, 0.6);
  EXPECT_DOUBLE_EQ(g.edges[1].feature, 0.8);
  EXPECT_EQ(graph_stats(g), std::make_tuple(std::size_t{2}, std::size_t{1}, std::size_t{2}));
}

TEST(Bipartite, EmptyRowsAndNoConstraints) {
  auto inst = parse_milp_json(R"({"id":"n","sense":"max","objective":[1,1,1],
    "constraints":[{"coeffs":[],"sense":">=","rhs":-2}]})");
  auto g = to_bipartite(inst);
  EXPECT_EQ(g.cons_features(0, 0), -1.0);
  EXPECT_EQ(g.cons_features(0, 2), 1.0);
  EXPECT_EQ(g.n_edges(), 0u);
  inst.constraints.clear();
  EXPECT_EQ(graph_stats(to_bipartite(inst)), std::make_tuple(std::size_t{3}, std::size_t{0}, std::size_t{0}));
}

TEST(Bipartite, BoundFeaturesSquashed) {
  const auto inst = parse_milp_json(R"({"id":"b","sense":"max","objective":[1,1],
    "var_lb":[-3,null],"var_ub":[1,null],"var_types":["integer","continuous"],"constraints":[]})");
  const auto g = to_bipartite(inst);
  EXPECT_EQ(g.var_features(0, 1), 1.0);
  EXPECT_EQ(g.var_features(0, 2), 1.0);
  EXPECT_DOUBLE_EQ(g.var_features(0, 4), -0.75);
  EXPECT_DOUBLE_EQ(g.var_features(0, 5), 0.5);
  EXPECT_EQ(g.var_features.row(1).tail(5).sum(), 0.0);
}

TEST(Bipartite, RandomInstancesProperties) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 100; ++t) {
    auto inst = oracle::random_instance(rng, 1 + rng() % 10, rng() % 8);
    const auto g = to_bipartite(inst);
    std::size_t nnz = 0;
    for (const auto& row : inst.constraints)
      for (const auto& [j, a] : row.coeffs) nnz += a != 0.0;
    EXPECT_EQ(g.n_edges(), nnz);
    EXPECT_TRUE(g.var_features.allFinite());
    EXPECT_TRUE(g.cons_features.allFinite());
    EXPECT_LE(g.var_features.cwiseAbs().maxCoeff(), 1.0 + 1e-9);
    for (const auto& e : g.edges) EXPECT_LE(std::abs(e.feature), 1.0 + 1e-9);
    const auto again = to_bipartite(inst);
    EXPECT_TRUE(again.var_features == g.var_features && again.cons_features == g.cons_features &&
                again.edges == g.edges);

    // Row scaling leaves that row's bias and edge features unchanged.
    if (inst.n_cons() > 0) {
      auto scaled = inst;
      for (auto& [j, a] : scaled.constraints[0].coeffs) a *= 7.5;
      scaled.constraints[0].rhs *= 7.5;
      const auto gs = to_bipartite(scaled);
      EXPECT_NEAR(gs.cons_features(0, 0), g.cons_features(0, 0), 1e-12);
      for (std::size_t k = 0; k < g.edges.size(); ++k) EXPECT_NEAR(gs.edges[k].feature, g.edges[k].feature, 1e-12);
    }
  }
}

TEST(Bipartite, VariablePermutationIsEquivariant) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto inst = oracle::random_instance(rng, 2 + rng() % 8, 1 + rng() % 6);
    const std::size_t n = inst.n_vars();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    MilpInstance p = inst;
    for (std::size_t j = 0; j < n; ++j) {
      p.objective[perm[j]] = inst.objective[j];
      p.var_types[perm[j]] = inst.var_types[j];
      p.var_lb[perm[j]] = inst.var_lb[j];
      p.var_ub[perm[j]] = inst.var_ub[j];
    }
    for (auto& row : p.constraints)
      for (auto& [j, a] : row.coeffs) j = perm[j];
    const auto g = to_bipartite(inst), gp = to_bipartite(p);
    for (std::size_t j = 0; j < n; ++j)
      EXPECT_EQ(g.var_features.row(static_cast<Eigen::Index>(j)), gp.var_features.row(static_cast<Eigen::Index>(perm[j])));
    ASSERT_EQ(g.edges.size(), gp.edges.size());
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
      EXPECT_EQ(gp.edges[k].var, perm[g.edges[k].var]);
      EXPECT_EQ(gp.edges[k].feature, g.edges[k].feature);
    }
  }
}
