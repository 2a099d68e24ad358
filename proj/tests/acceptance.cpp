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
// Acceptance run: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails. Independent oracles live in support/.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "confscout/confscout.hpp"
#include "support/gnn_fixtures.hpp"
#include "support/oracles.hpp"

using namespace confscout;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("confscout_acceptance_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<ParamDef> level_defs(const std::vector<std::size_t>& counts) {
  std::vector<ParamDef> defs;
  for (std::size_t p = 0; p < counts.size(); ++p) {
    ParamDef d{"p" + std::to_string(p), {}};
    for (std::size_t l = 0; l < counts[p]; ++l) d.levels.push_back(std::to_string(l));
    defs.push_back(d);
  }
  return defs;
}

PerfMatrix matrix_of(const oracle::Matrix& rows) {
  PerfMatrix m;
  const std::size_t C = rows.front().size();
  for (std::size_t i = 0; i < rows.size(); ++i) m.instance_ids.push_back("i" + std::to_string(i));
  for (std::size_t c = 0; c < C; ++c) m.config_ids.push_back(static_cast<int>(c));
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(C));
  m.seed_counts = Eigen::MatrixXi::Ones(m.values.rows(), m.values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < C; ++c) m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  return m;
}

// ---- criteria -----------------------------------------------------------------

Outcome configuration_counting() {
  const auto defs = level_defs({4, 4, 4, 11});
  const auto all = enumerate_cartesian(defs);
  const auto space = dedup(all, defs, identity_table(defs));
  return {all.size() == 704 && space.reduced.size() == 704,
          "|C| = " + std::to_string(all.size()) + ", after dedup " + std::to_string(space.reduced.size())};
}

Outcome dedup_semantics() {
  std::mt19937_64 rng(2);
  std::size_t mismatches = 0, collapsed = 0;
  for (int t = 0; t < 200; ++t) {
    const auto rs = oracle::random_space(rng, 64);
    auto configs = enumerate_cartesian(rs.defs);
    std::shuffle(configs.begin(), configs.end(), rng);
    const auto space = dedup(configs, rs.defs, rs.table);
    std::vector<int> got;
    for (const auto& c : space.reduced) got.push_back(c.id);
    if (got != oracle::dedup_survivors(configs, rs.defs, rs.table)) ++mismatches;
    collapsed += configs.size() - got.size();
  }
  return {mismatches == 0,
          std::to_string(mismatches) + " mismatches in 200 tables (" + std::to_string(collapsed) + " configs collapsed)"};
}

Outcome greedy_guarantee() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(1.0, 100.0);
  const double factor = 1.0 - 1.0 / std::exp(1.0);
  double worst_ratio = 1e300;
  std::size_t violations = 0, chain_faults = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t R = 1 + rng() % 10, C = 1 + rng() % 8;
    oracle::Matrix rows(R, std::vector<double>(C));
    for (auto& r : rows)
      for (auto& v : r) v = t % 3 == 0 ? static_cast<double>(rng() % 21) : u(rng);
    const auto m = matrix_of(rows);
    const auto chain = greedy_chain(m, C);
    for (std::size_t k = 1; k <= std::min<std::size_t>(C, 5); ++k) {
      const double greedy = oracle::gain(rows, chain.prefix(k));
      const double best = oracle::gain(rows, oracle::best_subset(rows, static_cast<int>(k)).cols);
      if (greedy < factor * best - 1e-12) ++violations;
      if (best > 0) worst_ratio = std::min(worst_ratio, greedy / best);
    }
    // Monotone quality along the chain; each prefix extends the previous one.
    for (std::size_t k = 1; k < chain.size(); ++k) {
      if (chain.quality[k] < chain.quality[k - 1]) ++chain_faults;
      const auto a = chain.prefix(k), b = chain.prefix(k + 1);
      if (!std::equal(a.begin(), a.end(), b.begin())) ++chain_faults;
    }
    if (std::abs(chain.quality.back() - chain.quality_full) > 1e-9 * std::max(1.0, std::abs(chain.quality_full)))
      ++chain_faults;
  }
  return {violations == 0 && chain_faults == 0,
          std::to_string(violations) + " bound violations, " + std::to_string(chain_faults) +
              " chain faults, worst greedy/optimum gain ratio " + fmt("%.4f", worst_ratio)};
}

Outcome standardization() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1e5);
  double worst_mean = 0.0, worst_sd = 0.0;
  std::size_t argmin_moved = 0, constant_bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const int cols = 1 + static_cast<int>(rng() % 12);
    Eigen::MatrixXd m(1, cols);
    const bool constant = t % 50 == 0;
    for (int c = 0; c < cols; ++c) m(0, c) = constant ? 42.0 : u(rng);
    const auto s = standardize(m);
    const auto row = s.values.row(0);
    if (constant || cols == 1) {
      if (!row.isZero(0.0)) ++constant_bad;
      continue;
    }
    const double mean = row.mean();
    const double sd = std::sqrt((row.array() - mean).square().mean());
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_sd = std::max(worst_sd, std::abs(sd - 1.0));
    Eigen::Index a, b;
    m.row(0).minCoeff(&a);
    row.minCoeff(&b);
    if (a != b) ++argmin_moved;
  }
  return {worst_mean < 1e-9 && worst_sd < 1e-9 && argmin_moved == 0 && constant_bad == 0,
          "max |mean| " + fmt("%.2e", worst_mean) + ", max |std - 1| " + fmt("%.2e", worst_sd) + ", argmin moved " +
              std::to_string(argmin_moved) + ", bad constant rows " + std::to_string(constant_bad)};
}

Outcome gradient_correctness() {
  std::mt19937_64 rng(5);
  const auto model = fixture::random_model(4, 8, 99);
  const auto g = oracle::random_graph(rng, 5, 4);
  Eigen::VectorXd target(4);
  for (int k = 0; k < 4; ++k) target(k) = std::normal_distribution<double>()(rng);
  const auto check = fixture::gradient_check(model, g, target, 1e-5, 1e-6);
  double worst = 0.0, worst_abs_zero = 0.0;
  std::string worst_name;
  std::size_t vanishing = 0;
  for (std::size_t k = 0; k < check.names.size(); ++k) {
    if (check.rel_error[k] < 0.0) {
      // Both analytic and numeric gradients vanish (bias in front of batch norm).
      ++vanishing;
      worst_abs_zero = std::max(worst_abs_zero, check.abs_error[k]);
      continue;
    }
    if (check.rel_error[k] > worst) worst = check.rel_error[k], worst_name = check.names[k];
  }
  return {check.pass && worst < 1e-6 && worst_abs_zero < 1e-9,
          std::to_string(check.names.size()) + " tensors, worst relative error " + fmt("%.2e", worst) + " (" +
              worst_name + "), " + std::to_string(vanishing) + " vanishing tensors with abs error <= " +
              fmt("%.1e", worst_abs_zero)};
}

Outcome permutation_invariance() {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto m = fixture::random_model(1 + static_cast<int>(rng() % 4), 8, rng());
    const auto g = oracle::random_graph(rng, 1 + rng() % 9, 1 + rng() % 7);
    const auto p = fixture::permute(g, rng);
    worst = std::max(worst, (gnn::forward(m, g) - gnn::forward(m, p.graph)).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-9, "max output difference " + fmt("%.2e", worst) + " over 50 triples"};
}

struct LearningRun {
  double closure = 0.0;
  int single_best = 0;
  double seconds = 0.0;
};

LearningRun learning_run(double noise, const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<MilpInstance> train, val, test;
  for (auto f : {Family::sparse, Family::medium, Family::dense}) {
    auto a = generate_synthetic_instances(f, 200, 101);
    auto b = generate_synthetic_instances(f, 50, 202);
    auto c = generate_synthetic_instances(f, 50, 303);
    train.insert(train.end(), a.begin(), a.end());
    val.insert(val.end(), b.begin(), b.end());
    test.insert(test.end(), c.begin(), c.end());
  }
  std::vector<MilpInstance> all = train;
  all.insert(all.end(), val.begin(), val.end());
  all.insert(all.end(), test.begin(), test.end());

  CollectionPlan plan;
  plan.instances = write_instances(all, dir / "instances");
  for (int c = 0; c < 8; ++c) plan.configs.push_back({c, {{std::string(kSyntheticLevelSetting), std::to_string(c)}}});
  plan.seeds_per_pair = 2;
  plan.parallelism = 4;
  plan.work_dir = dir / "work";
  SyntheticAdapter adapter{SyntheticSolver(noise)};
  const auto records = run_collection(plan, adapter);

  std::vector<int> ids;
  for (const auto& c : plan.configs) ids.push_back(c.id);
  auto ids_of = [](const std::vector<MilpInstance>& v) {
    std::vector<std::string> out;
    for (const auto& i : v) out.push_back(i.id);
    return out;
  };
  const auto tr = make_samples(train, aggregate(records, ids, ids_of(train)));
  const auto va = make_samples(val, aggregate(records, ids, ids_of(val)));
  gnn::TrainConfig cfg;
  cfg.seed = 17;
  const auto ensemble = gnn::train_ensemble(tr, va, cfg, 3).ensemble;

  const auto preds = predict_instances(ensemble, test, ids);
  const PerfMatrix tm = aggregate(records, ids, ids_of(test));
  LearningRun out;
  out.single_best = single_best_config(tm);
  double single = 0.0, model = 0.0, oracle_total = 0.0;
  for (const auto& [id, cfg_id] : preds) {
    const auto r = static_cast<Eigen::Index>(*tm.row_of(id));
    single += tm.values(r, static_cast<Eigen::Index>(*tm.col_of(out.single_best)));
    model += tm.values(r, static_cast<Eigen::Index>(*tm.col_of(cfg_id)));
    oracle_total += tm.values.row(r).minCoeff();
  }
  out.closure = gap_closure(single, model, oracle_total);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Outcome end_to_end_learning() {
  const auto dir = scratch("learning");
  const auto noisy = learning_run(0.05, dir / "noisy");
  const auto clean = learning_run(0.0, dir / "clean");
  fs::remove_all(dir);
  const double total = noisy.seconds + clean.seconds;
  return {noisy.closure >= 0.60 && clean.closure >= 0.90 && total < 1200.0,
          "gap closure " + fmt("%.1f%%", 100.0 * noisy.closure) + " at noise 0.05 (need 60%), " +
              fmt("%.1f%%", 100.0 * clean.closure) + " at noise 0 (need 90%); single best config " +
              std::to_string(noisy.single_best) + "; " + fmt("%.0f s", total) + " of 1200 s"};
}

Outcome metric_reproduction() {
  const double a = improvement(1.36e6, 1.54e6), b = improvement(1.33e6, 2.08e6), c = improvement(2.73e10, 2.96e10);
  const bool ok = std::abs(a + 0.117) < 0.0005 && std::abs(b + 0.361) < 0.0005 && std::abs(c + 0.078) < 0.0005 &&
                  std::abs(-100.0 * b - 35.0) <= 1.5;
  return {ok, "improvements " + fmt("%.2f%%", 100 * a) + ", " + fmt("%.2f%%", 100 * b) + ", " + fmt("%.2f%%", 100 * c) +
                  " (reported 12%, 35%, 8%)"};
}

std::vector<RunResult> load_fixture(const std::string& name) {
  const char* dir = std::getenv("CONFSCOUT_FIXTURES");
  return parse_run_results(read_text_file(fs::path(dir ? dir : "tests/fixtures") / "table1" / name));
}

Outcome wins_accounting() {
  struct Row {
    const char* name;
    std::size_t wins;
  };
  bool ok = true;
  std::string detail;
  for (const Row& row : {Row{"item_placement", 66}, Row{"load_balancing", 95}, Row{"anonymous", 38}}) {
    const auto [c, b] = pair_runs(load_fixture(std::string(row.name) + "_candidate.tsv"),
                                  load_fixture(std::string(row.name) + "_baseline.tsv"));
    const auto r = compare(c, b);
    ok = ok && r.wins_candidate == row.wins && r.wins_candidate + r.wins_baseline == 100 && r.ties == 0;
    detail += (detail.empty() ? "" : ", ") + std::to_string(r.wins_candidate) + "/" + std::to_string(r.wins_baseline);
  }
  return {ok, "wins " + detail + " (expected 66/34, 95/5, 38/62)"};
}

Outcome integral_properties() {
  auto ev = [](double t, double gap) { return BoundEvent{t, 5.0 + gap, 5.0}; };
  const double inf = std::numeric_limits<double>::infinity();
  const double g1 = primal_dual_integral({{ev(0, 2)}, 10}, 1e20);
  const double g2 = primal_dual_integral({{ev(0, 4), ev(5, 1)}, 10}, 1e20);
  const double g3 = primal_dual_integral({{{0, inf, 0}, ev(3, 0)}, 10}, 100);
  const bool crafted = g1 == 20.0 && g2 == 25.0 && g3 == 300.0;

  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> steps(1, 8);
  std::uniform_real_distribution<double> gap(0.0, 40.0), lam(0.1, 2.0);
  auto trace = [&](double t0, double horizon, bool allow_inf) {
    BoundTrace tr;
    tr.horizon = horizon;
    for (double t = t0; t < horizon; t += 0.25 * steps(rng))
      tr.events.push_back(allow_inf && rng() % 7 == 0 ? BoundEvent{t, inf, 0} : ev(t, gap(rng)));
    return tr;
  };
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    auto a = trace(0, 20, true), b = trace(20, 50, true);
    BoundTrace joined{a.events, 50};
    joined.events.insert(joined.events.end(), b.events.begin(), b.events.end());
    BoundTrace shifted = b;
    shifted.horizon = 30;
    for (auto& e : shifted.events) e.t -= 20;
    const double whole = primal_dual_integral(joined, 60);
    worst = std::max(worst, rel(whole, primal_dual_integral(a, 60) + primal_dual_integral(shifted, 60)));
    worst = std::max(worst, rel(whole, oracle::riemann_integral(joined, 60, 0.25)));

    auto s = trace(0, 30, false);
    const double l = lam(rng);
    BoundTrace scaled = s;
    for (auto& e : scaled.events) e = ev(e.t, l * (e.primal - e.dual));
    const double cap = 1000.0;
    worst = std::max(worst, rel(primal_dual_integral(scaled, cap), l * primal_dual_integral(s, cap)));
    worst = std::max(worst, rel(primal_dual_integral(scaled, cap), oracle::riemann_integral(scaled, cap, 0.25)));
  }
  return {crafted && worst <= 1e-9, "crafted traces " + fmt("%g", g1) + ", " + fmt("%g", g2) + ", " + fmt("%g", g3) +
                                        "; worst relative deviation " + fmt("%.1e", worst) + " over 100 traces"};
}

Outcome cluster_predictor() {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> val(1, 9);
  const std::pair<std::size_t, std::size_t> keys[] = {{30, 10}, {40, 12}, {25, 25}};
  const int counts[] = {5, 4, 3};
  std::vector<InstanceSignature> sigs;
  oracle::Matrix rows;
  std::vector<std::vector<std::size_t>> groups(3);
  for (int g = 0; g < 3; ++g)
    for (int k = 0; k < counts[g]; ++k) {
      groups[g].push_back(rows.size());
      sigs.push_back({"i" + std::to_string(rows.size()), keys[g].first, keys[g].second});
      std::vector<double> row(6);
      for (auto& v : row) v = val(rng);
      rows.push_back(row);
    }
  const auto m = matrix_of(rows);
  const auto model = fit_clusters(sigs, m, 2);
  std::size_t mismatches = 0, invariant = 0;
  for (int g = 0; g < 3; ++g) {
    std::vector<double> mean(6, 0.0);
    for (auto r : groups[g])
      for (int c = 0; c < 6; ++c) mean[c] += rows[r][c] / static_cast<double>(groups[g].size());
    const int scan = static_cast<int>(std::min_element(mean.begin(), mean.end()) - mean.begin());
    const auto it = model.clusters.find(keys[g]);
    if (it == model.clusters.end() || it->second != scan) ++mismatches;
    if (it != model.clusters.end())
      for (double v : mean)
        if (mean[it->second] > v) ++invariant;
  }
  return {model.clusters.size() == 3 && mismatches == 0 && invariant == 0,
          std::to_string(model.clusters.size()) + " clusters, " + std::to_string(mismatches) + " argmin mismatches, " +
              std::to_string(invariant) + " invariant violations"};
}

Outcome collection_determinism() {
  const auto dir = scratch("collection");
  CollectionPlan plan;
  plan.instances = write_instances(generate_synthetic_instances(Family::dense, 10, 8), dir / "instances");
  for (int c = 0; c < 8; ++c) plan.configs.push_back({c, {{std::string(kSyntheticLevelSetting), std::to_string(c)}}});
  plan.seeds_per_pair = 3;
  plan.work_dir = dir / "work";

  SyntheticAdapter serial_adapter, parallel_adapter;
  plan.parallelism = 1;
  write_text_file(dir / "serial.tsv", format_records(run_collection(plan, serial_adapter)));
  plan.parallelism = 8;
  write_text_file(dir / "parallel.tsv", format_records(run_collection(plan, parallel_adapter)));
  const bool identical = read_text_file(dir / "serial.tsv") == read_text_file(dir / "parallel.tsv");

  plan.journal = dir / "journal.tsv";
  SyntheticAdapter first;
  run_collection(plan, first);
  std::string text = read_text_file(plan.journal);
  std::vector<std::string> lines;
  for (std::size_t pos = 0; pos < text.size();) {
    const auto nl = text.find('\n', pos);
    lines.push_back(text.substr(pos, nl - pos + 1));
    pos = nl + 1;
  }
  const std::size_t keep = lines.size() - 37;
  std::string truncated;
  for (std::size_t k = 0; k < keep; ++k) truncated += lines[k];
  write_text_file(plan.journal, truncated);
  SyntheticAdapter resumed;
  const auto again = format_records(run_collection(plan, resumed));
  const bool resume_ok = resumed.invocations() == 37 && again == read_text_file(dir / "serial.tsv");
  fs::remove_all(dir);
  return {identical && resume_ok, std::string(identical ? "byte-identical" : "different") +
                                      " record files at parallelism 1 and 8; resume after dropping 37 journal lines ran " +
                                      std::to_string(resumed.invocations()) + " triples"};
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "configuration counting", 1, configuration_counting},
      {2, "dedup semantics", 10, dedup_semantics},
      {3, "greedy guarantee", 60, greedy_guarantee},
      {4, "standardization", 5, standardization},
      {5, "gradient correctness", 30, gradient_correctness},
      {6, "permutation invariance", 30, permutation_invariance},
      {7, "end-to-end learning", 1200, end_to_end_learning},
      {8, "metric reproduction", 1, metric_reproduction},
      {9, "wins accounting", 1, wins_accounting},
      {10, "primal-dual integral", 5, integral_properties},
      {11, "cluster predictor", 1, cluster_predictor},
      {12, "collection determinism", 60, collection_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = o.pass && secs < c.budget_seconds;
    if (!pass) ++failed;
    std::printf("%s %2d %-24s %8.2f s (limit %g s)  %s\n", pass ? "PASS" : "FAIL", c.number, c.name, secs,
                c.budget_seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
