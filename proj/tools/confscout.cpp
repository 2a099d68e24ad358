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
// confscout command-line front end. Every stage reads and writes the file
// formats of the library; human-readable summaries go to stderr.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 adapter failure.

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "confscout/confscout.hpp"

namespace fs = std::filesystem;
using namespace confscout;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitAdapter = 3;

// Option combinations CLI11 cannot express; reported like parse errors.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_output(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text_file(path, text);
}

std::vector<PerfRecord> read_records(const fs::path& p) { return parse_records(read_text_file(p)); }
std::vector<PortfolioEntry> read_portfolio(const fs::path& p) { return parse_portfolio(read_text_file(p)); }

std::vector<MilpInstance> instances_only(const std::vector<LoadedInstance>& loaded) {
  std::vector<MilpInstance> out;
  for (const auto& li : loaded) out.push_back(li.instance);
  return out;
}

std::vector<std::string> ids_of(const std::vector<MilpInstance>& instances) {
  std::vector<std::string> out;
  for (const auto& i : instances) out.push_back(i.id);
  return out;
}

// Prefixes failures with the stage name, keeping the error category.
template <typename F>
auto stage(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const AdapterError& e) {
    throw AdapterError(name + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw DataError(name + ": " + e.what());
  }
}

// ---- shared option groups ---------------------------------------------------

struct AdapterOptions {
  bool synthetic = false;
  double noise = 0.05;
  std::string executable;
  std::vector<std::string> args;
  double kill_factor = 2.0;
  double grace = 5.0;
  double gap_cap = 1e20;

  void add(CLI::App* app, bool synthetic_default) {
    synthetic = synthetic_default;
    app->add_flag("--synthetic", synthetic, "Use the built-in synthetic solver instead of an external adapter");
    app->add_option("--noise", noise, "Synthetic noise amplitude (relative, uniform in [-a, a])")->capture_default_str();
    app->add_option("--adapter", executable,
                    "Adapter executable; its arguments may use {instance} {settings} {seed} {time_limit} {output}");
    app->add_option("--adapter-arg", args, "Argument passed to the adapter (repeatable)")->allow_extra_args(false);
    app->add_option("--kill-factor", kill_factor, "Kill adapters after this multiple of the time limit")
        ->capture_default_str();
    app->add_option("--grace", grace, "Extra seconds before killing an adapter")->capture_default_str();
    app->add_option("--gap-cap", gap_cap, "Gap cap used when integrating adapter traces")->capture_default_str();
  }

  std::unique_ptr<Adapter> make() const {
    if (!executable.empty()) {
      auto a = std::make_unique<ProcessAdapter>(executable, args, gap_cap);
      a->set_kill_policy(kill_factor, grace);
      return a;
    }
    if (!synthetic) throw UsageError("choose --synthetic or --adapter");
    return std::make_unique<SyntheticAdapter>(SyntheticSolver(noise));
  }
};

struct TrainOptions {
  gnn::TrainConfig cfg;
  int members = 3;
  bool sequential = false;

  void add(CLI::App* app) {
    app->add_option("--seed", cfg.seed, "Base seed; ensemble member k uses seed + k")->capture_default_str();
    app->add_option("--members", members, "Ensemble size")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--epochs", cfg.max_epochs, "Maximum epochs")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--patience", cfg.patience, "Early-stopping patience in epochs")->capture_default_str();
    app->add_option("--batch-size", cfg.batch_size, "Graphs per mini-batch")->capture_default_str();
    app->add_option("--lr", cfg.learning_rate, "Adam learning rate")->capture_default_str();
    app->add_option("--hidden", cfg.hidden, "Hidden width")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_flag("--sequential", sequential, "Train ensemble members one after another");
  }
};

struct HistogramOptions {
  HistogramSpec spec;

  void add(CLI::App* app) {
    app->add_option("--bins", spec.bins, "Histogram bins")->capture_default_str();
    app->add_option("--lo", spec.lo, "Histogram lower edge (relative improvement)")->capture_default_str();
    app->add_option("--hi", spec.hi, "Histogram upper edge (relative improvement)")->capture_default_str();
  }
};

std::string percent(double fraction) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * fraction << "%";
  return os.str();
}

void print_summary(const EvalReport& r) {
  std::cerr << "runs " << r.candidate.size() << ": total gamma candidate " << format_double(r.total_candidate)
            << " vs baseline " << format_double(r.total_baseline);
  if (r.total_baseline > 0) std::cerr << " (" << percent(r.total_improvement()) << ")";
  std::cerr << "\nwins candidate " << r.wins_candidate << ", baseline " << r.wins_baseline << ", ties " << r.ties
            << "\nper-run improvement mean " << percent(r.mean_improvement) << ", median "
            << percent(r.median_improvement) << ", best " << percent(r.best_improvement) << ", worst "
            << percent(r.worst_improvement) << "\n";
}

EvalReport compare_files(const fs::path& cand, const fs::path& base, const HistogramSpec& spec) {
  const auto c = parse_run_results(read_text_file(cand));
  const auto b = parse_run_results(read_text_file(base));
  const auto [cv, bv] = pair_runs(c, b);
  return compare(cv, bv, spec);
}

void write_report(const EvalReport& r, const fs::path& dir, const std::string& title) {
  fs::create_directories(dir);
  write_text_file(dir / "summary.tsv", format_summary(r));
  write_text_file(dir / "histogram.tsv", format_histogram(r.histogram));
  write_text_file(dir / "histogram.svg", histogram_svg(r, title));
}

// ---- stages -------------------------------------------------------------------

std::vector<MilpInstance> generate_family(const std::string& family, std::size_t count, std::uint64_t seed) {
  std::vector<MilpInstance> out;
  if (family == "all") {
    for (auto f : {Family::sparse, Family::medium, Family::dense}) {
      auto part = generate_synthetic_instances(f, count, seed);
      out.insert(out.end(), part.begin(), part.end());
    }
  } else {
    out = generate_synthetic_instances(parse_family(family), count, seed);
  }
  return out;
}

// Reduced configuration space and its export document.
std::pair<ConfigSpace, ExpansionTable> build_space(const std::string& params, const std::string& expansion,
                                                   bool synthetic) {
  std::vector<ParamDef> defs;
  if (synthetic) defs = synthetic_param_defs();
  else if (!params.empty()) defs = parse_param_defs(read_text_file(params));
  else throw UsageError("choose --params or --synthetic");
  const ExpansionTable table = expansion.empty() ? identity_table(defs) : parse_expansion_table(read_text_file(expansion));
  return {dedup(enumerate_cartesian(defs), defs, table), table};
}

std::vector<PerfRecord> collect(const std::vector<LoadedInstance>& instances,
                                const std::vector<PortfolioEntry>& portfolio, const AdapterOptions& adapter_opts,
                                std::size_t seeds, std::uint64_t first_seed, double time_limit,
                                std::size_t parallelism, const fs::path& work_dir, const fs::path& journal) {
  CollectionPlan plan;
  plan.instances = plan_instances(instances);
  plan.configs = plan_configs(portfolio);
  plan.seeds_per_pair = seeds;
  plan.first_seed = first_seed;
  plan.time_limit = time_limit;
  plan.parallelism = parallelism;
  plan.work_dir = work_dir;
  plan.journal = journal;
  const auto adapter = adapter_opts.make();
  CollectionStats stats;
  auto records = run_collection(plan, *adapter, &stats);
  std::cerr << "collected " << records.size() << " runs (" << stats.invocations << " executed, " << stats.resumed
            << " resumed, " << stats.failures << " failed)\n";
  return records;
}

struct Selection {
  SubsetChain chain;
  std::size_t k = 0;
  std::vector<PortfolioEntry> portfolio;
};

Selection select_portfolio(const std::vector<PerfRecord>& records, const std::vector<PortfolioEntry>& portfolio,
                           std::optional<std::vector<std::string>> instance_ids, double epsilon, std::size_t k_max) {
  const auto ids = portfolio_ids(portfolio);
  const PerfMatrix m = aggregate(records, ids, std::move(instance_ids));
  Selection s;
  s.chain = greedy_chain(m, k_max == 0 ? m.cols() : std::min(k_max, m.cols()));
  s.k = choose_size(s.chain, epsilon);
  s.portfolio = subset_portfolio(portfolio, s.chain.prefix(s.k));
  std::cerr << "selected " << s.k << " of " << m.cols() << " configurations (q = "
            << format_double(s.chain.quality[s.k - 1]) << ", q(all) = " << format_double(s.chain.quality_full)
            << ")\n";
  return s;
}

gnn::EnsembleTrainResult train_model(const std::vector<MilpInstance>& train_set,
                                     const std::vector<MilpInstance>& val_set, const std::vector<PerfRecord>& records,
                                     const std::vector<PortfolioEntry>& portfolio, const TrainOptions& opts) {
  const auto ids = portfolio_ids(portfolio);
  const auto tr = make_samples(train_set, aggregate(records, ids, ids_of(train_set)));
  std::vector<gnn::TrainSample> va;
  if (!val_set.empty()) va = make_samples(val_set, aggregate(records, ids, ids_of(val_set)));
  auto result = gnn::train_ensemble(tr, va, opts.cfg, opts.members, !opts.sequential);
  std::cerr << "trained " << opts.members << " member(s) on " << tr.size() << " instances";
  for (const auto& log : result.logs) {
    const auto best = std::min_element(log.begin(), log.end(),
                                       [](const auto& a, const auto& b) { return a.val_mse < b.val_mse; });
    std::cerr << "; best val mse " << format_double(best->val_mse) << " at epoch " << best->epoch;
  }
  std::cerr << "\n";
  return result;
}

std::string format_training_logs(const gnn::EnsembleTrainResult& r) {
  std::string out = "member\tepoch\ttrain_mse\tval_mse\n";
  for (std::size_t m = 0; m < r.logs.size(); ++m)
    for (const auto& e : r.logs[m])
      out += std::to_string(m) + "\t" + std::to_string(e.epoch) + "\t" + format_double(e.train_mse) + "\t" +
             format_double(e.val_mse) + "\n";
  return out;
}

// ---- synthetic adapter executable mode --------------------------------------------

int synth_adapter(const std::string& instance, const std::string& settings, std::uint64_t seed, double noise,
                  const std::string& output) {
  const MilpInstance inst = read_instance(instance);
  const int level = synthetic_level_from_settings(parse_settings(read_text_file(settings)));
  const double g = SyntheticSolver(noise).gamma(inst, level, seed, level);
  write_output(output, nlohmann::json{{"status", "ok"}, {"gamma", g}}.dump() + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"confscout: instance-wise MILP solver configuration"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  // generate
  auto* gen = app.add_subcommand("generate", "Write synthetic packing instances");
  std::string gen_family = "all", gen_out;
  std::size_t gen_count = 10;
  std::uint64_t gen_seed = 0;
  gen->add_option("--family", gen_family, "sparse, medium, dense or all")->capture_default_str();
  gen->add_option("--count", gen_count, "Instances per family")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  // configs
  auto* cfgs = app.add_subcommand("configs", "Enumerate, deduplicate and export the configuration space");
  std::string cfg_params, cfg_expansion, cfg_out, cfg_settings_dir;
  bool cfg_synthetic = false;
  std::optional<std::size_t> cfg_expect;
  cfgs->add_option("--params", cfg_params, "Parameter definitions document")->check(CLI::ExistingFile);
  cfgs->add_option("--expansion", cfg_expansion, "Expansion table (identity if omitted)")->check(CLI::ExistingFile);
  cfgs->add_flag("--synthetic", cfg_synthetic, "Use the 8-level synthetic solver portfolio");
  cfgs->add_option("--out", cfg_out, "Config-space export (JSON)")->required();
  cfgs->add_option("--settings-dir", cfg_settings_dir, "Also write one settings file per reduced configuration");
  cfgs->add_option("--expect-size", cfg_expect, "Fail with exit code 2 unless the reduced space has this size");

  // collect
  auto* col = app.add_subcommand("collect", "Run every (instance, configuration, seed) triple");
  std::string col_instances, col_portfolio, col_out, col_work, col_journal;
  std::size_t col_seeds = 1, col_parallelism = 1;
  std::uint64_t col_first_seed = 0;
  double col_time_limit = 900.0;
  AdapterOptions col_adapter;
  col->add_option("--instances", col_instances, "Instance directory or file")->required()->check(CLI::ExistingPath);
  col->add_option("--portfolio", col_portfolio, "Config-space export or portfolio")->required()->check(CLI::ExistingFile);
  col->add_option("--out", col_out, "Record file")->required();
  col->add_option("--work-dir", col_work, "Settings files and adapter outputs")->required();
  col->add_option("--journal", col_journal, "Resume journal (appended to as runs finish)");
  col->add_option("--seeds", col_seeds, "Seeds per pair")->capture_default_str()->check(CLI::PositiveNumber);
  col->add_option("--seed", col_first_seed, "First seed")->capture_default_str();
  col->add_option("--time-limit", col_time_limit, "Per-run time limit in seconds")->capture_default_str();
  col->add_option("--parallelism", col_parallelism, "Concurrent runs")->capture_default_str()->check(CLI::PositiveNumber);
  col_adapter.add(col, false);

  // select
  auto* sel = app.add_subcommand("select", "Greedy portfolio reduction on the performance matrix");
  std::string sel_records, sel_portfolio, sel_out, sel_chain, sel_instances;
  double sel_epsilon = 0.01;
  std::size_t sel_kmax = 0;
  sel->add_option("--records", sel_records, "Record file")->required()->check(CLI::ExistingFile);
  sel->add_option("--portfolio", sel_portfolio, "Candidate configurations")->required()->check(CLI::ExistingFile);
  sel->add_option("--instances", sel_instances, "Restrict the matrix to these instances")->check(CLI::ExistingPath);
  sel->add_option("--out", sel_out, "Selected portfolio")->required();
  sel->add_option("--chain", sel_chain, "Greedy chain table");
  sel->add_option("--epsilon", sel_epsilon, "Stop once within this fraction of the full-set quality")
      ->capture_default_str();
  sel->add_option("--k-max", sel_kmax, "Longest chain to build (0 = all configurations)")->capture_default_str();

  // train
  auto* trn = app.add_subcommand("train", "Train the graph network ensemble");
  std::string trn_instances, trn_val, trn_records, trn_portfolio, trn_out, trn_log;
  TrainOptions trn_opts;
  trn->add_option("--instances", trn_instances, "Training instances")->required()->check(CLI::ExistingPath);
  trn->add_option("--val-instances", trn_val, "Validation instances for early stopping")->check(CLI::ExistingPath);
  trn->add_option("--records", trn_records, "Record file covering all instances")->required()->check(CLI::ExistingFile);
  trn->add_option("--portfolio", trn_portfolio, "Selected portfolio")->required()->check(CLI::ExistingFile);
  trn->add_option("--out", trn_out, "Model file")->required();
  trn->add_option("--log", trn_log, "Per-epoch training log");
  trn_opts.add(trn);

  // predict
  auto* prd = app.add_subcommand("predict", "Predict a configuration per instance");
  std::string prd_instances, prd_model, prd_portfolio, prd_out;
  prd->add_option("--instances", prd_instances, "Instances")->required()->check(CLI::ExistingPath);
  prd->add_option("--model", prd_model, "Model file")->required()->check(CLI::ExistingFile);
  prd->add_option("--portfolio", prd_portfolio, "Portfolio the model was trained on")->required()->check(CLI::ExistingFile);
  prd->add_option("--out", prd_out, "Predictions (instance_id, config_id)")->required();

  // runs
  auto* rns = app.add_subcommand("runs", "Extract a per-run results file from records and predictions");
  std::string rns_records, rns_predictions, rns_out;
  std::optional<int> rns_config;
  rns->add_option("--records", rns_records, "Record file")->required()->check(CLI::ExistingFile);
  rns->add_option("--predictions", rns_predictions, "Predictions file")->required()->check(CLI::ExistingFile);
  rns->add_option("--config", rns_config, "Use this configuration for every instance (baseline)");
  rns->add_option("--out", rns_out, "Per-run results file")->required();

  // evaluate
  auto* evl = app.add_subcommand("evaluate", "Compare candidate and baseline per-run results");
  std::string evl_cand, evl_base, evl_out;
  HistogramOptions evl_hist;
  evl->add_option("--candidate", evl_cand, "Candidate per-run results")->required()->check(CLI::ExistingFile);
  evl->add_option("--baseline", evl_base, "Baseline per-run results")->required()->check(CLI::ExistingFile);
  evl->add_option("--out", evl_out, "Summary table (stdout if omitted)");
  evl_hist.add(evl);

  // report
  auto* rep = app.add_subcommand("report", "Summary table, histogram table and SVG histogram");
  std::string rep_cand, rep_base, rep_dir, rep_title = "Reduced primal-dual integral";
  HistogramOptions rep_hist;
  rep->add_option("--candidate", rep_cand, "Candidate per-run results")->required()->check(CLI::ExistingFile);
  rep->add_option("--baseline", rep_base, "Baseline per-run results")->required()->check(CLI::ExistingFile);
  rep->add_option("--out-dir", rep_dir, "Output directory")->required();
  rep->add_option("--title", rep_title, "Histogram title")->capture_default_str();
  rep_hist.add(rep);

  // cluster-fit / cluster-predict
  auto* cfit = app.add_subcommand("cluster-fit", "Fit the size-signature cluster predictor");
  std::string cfit_instances, cfit_records, cfit_portfolio, cfit_out;
  std::size_t cfit_min = 2;
  cfit->add_option("--instances", cfit_instances, "Instances")->required()->check(CLI::ExistingPath);
  cfit->add_option("--records", cfit_records, "Record file")->required()->check(CLI::ExistingFile);
  cfit->add_option("--portfolio", cfit_portfolio, "Portfolio")->required()->check(CLI::ExistingFile);
  cfit->add_option("--min-size", cfit_min, "Smallest group that forms its own cluster")->capture_default_str();
  cfit->add_option("--out", cfit_out, "Cluster model")->required();

  auto* cprd = app.add_subcommand("cluster-predict", "Predict configurations with a cluster model");
  std::string cprd_instances, cprd_model, cprd_out;
  cprd->add_option("--instances", cprd_instances, "Instances")->required()->check(CLI::ExistingPath);
  cprd->add_option("--model", cprd_model, "Cluster model")->required()->check(CLI::ExistingFile);
  cprd->add_option("--out", cprd_out, "Predictions")->required();

  // pipeline
  auto* pip = app.add_subcommand("pipeline", "collect, select, train, predict and evaluate in one go");
  std::string pip_dir, pip_train, pip_val, pip_test, pip_portfolio;
  std::size_t pip_ntrain = 60, pip_nval = 15, pip_ntest = 15, pip_seeds = 2, pip_parallelism = 1;
  double pip_epsilon = 0.01, pip_time_limit = 900.0;
  std::uint64_t pip_data_seed = 0;
  AdapterOptions pip_adapter;
  TrainOptions pip_train_opts;
  HistogramOptions pip_hist;
  pip->add_option("--out-dir", pip_dir, "Directory for every stage artifact")->required();
  pip->add_option("--train-instances", pip_train, "Training instances (synthetic if omitted)")->check(CLI::ExistingPath);
  pip->add_option("--val-instances", pip_val, "Validation instances")->check(CLI::ExistingPath);
  pip->add_option("--test-instances", pip_test, "Test instances")->check(CLI::ExistingPath);
  pip->add_option("--portfolio", pip_portfolio, "Candidate configurations (synthetic 8 if omitted)")
      ->check(CLI::ExistingFile);
  pip->add_option("--n-train", pip_ntrain, "Synthetic training instances (split over families)")->capture_default_str();
  pip->add_option("--n-val", pip_nval, "Synthetic validation instances")->capture_default_str();
  pip->add_option("--n-test", pip_ntest, "Synthetic test instances")->capture_default_str();
  pip->add_option("--data-seed", pip_data_seed, "Synthetic generator seed")->capture_default_str();
  pip->add_option("--seeds", pip_seeds, "Solver seeds per pair")->capture_default_str()->check(CLI::PositiveNumber);
  pip->add_option("--parallelism", pip_parallelism, "Concurrent runs")->capture_default_str()->check(CLI::PositiveNumber);
  pip->add_option("--time-limit", pip_time_limit, "Per-run time limit in seconds")->capture_default_str();
  pip->add_option("--epsilon", pip_epsilon, "Portfolio selection tolerance")->capture_default_str();
  pip_adapter.add(pip, true);
  pip_train_opts.add(pip);
  pip_hist.add(pip);

  // synth-adapter
  auto* sad = app.add_subcommand("synth-adapter", "Act as an external adapter backed by the synthetic solver");
  std::string sad_instance, sad_settings, sad_output;
  std::uint64_t sad_seed = 0;
  double sad_noise = 0.05, sad_time_limit = 0.0;
  sad->add_option("--instance", sad_instance, "Instance file")->required()->check(CLI::ExistingFile);
  sad->add_option("--settings", sad_settings, "Settings file")->required()->check(CLI::ExistingFile);
  sad->add_option("--seed", sad_seed, "Seed")->capture_default_str();
  sad->add_option("--time-limit", sad_time_limit, "Accepted for interface compatibility");
  sad->add_option("--noise", sad_noise, "Noise amplitude")->capture_default_str();
  sad->add_option("--output", sad_output, "Result document")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      const auto insts = generate_family(gen_family, gen_count, gen_seed);
      write_instances(insts, gen_out);
      std::cerr << "wrote " << insts.size() << " instances to " << gen_out << "\n";
    } else if (cfgs->parsed()) {
      const auto [space, table] = build_space(cfg_params, cfg_expansion, cfg_synthetic);
      write_output(cfg_out, config_space_to_json(space, table).dump(2) + "\n");
      if (!cfg_settings_dir.empty()) {
        fs::create_directories(cfg_settings_dir);
        for (const auto& c : space.reduced)
          write_text_file(fs::path(cfg_settings_dir) / settings_file_name(c.id), emit_settings(c, space.params, table));
      }
      std::cerr << "configurations: " << space.all.size() << " enumerated, " << space.reduced.size()
                << " after deduplication\n";
      if (cfg_expect && *cfg_expect != space.reduced.size()) {
        std::cerr << "error: expected " << *cfg_expect << " configurations after deduplication, got "
                  << space.reduced.size() << "\n";
        return kExitData;
      }
    } else if (col->parsed()) {
      const auto recs = collect(load_instances(col_instances), read_portfolio(col_portfolio), col_adapter, col_seeds,
                                col_first_seed, col_time_limit, col_parallelism, col_work, col_journal);
      write_output(col_out, format_records(recs));
    } else if (sel->parsed()) {
      std::optional<std::vector<std::string>> ids;
      if (!sel_instances.empty()) ids = ids_of(instances_only(load_instances(sel_instances)));
      const auto s = select_portfolio(read_records(sel_records), read_portfolio(sel_portfolio), ids, sel_epsilon,
                                      sel_kmax);
      write_output(sel_out, format_portfolio(s.portfolio));
      if (!sel_chain.empty()) write_output(sel_chain, format_chain(s.chain));
    } else if (trn->parsed()) {
      const auto tr = instances_only(load_instances(trn_instances));
      std::vector<MilpInstance> va;
      if (!trn_val.empty()) va = instances_only(load_instances(trn_val));
      const auto result = train_model(tr, va, read_records(trn_records), read_portfolio(trn_portfolio), trn_opts);
      write_output(trn_out, gnn::save_ensemble(result.ensemble));
      if (!trn_log.empty()) write_output(trn_log, format_training_logs(result));
    } else if (prd->parsed()) {
      const auto ensemble = gnn::load_ensemble(read_text_file(prd_model));
      const auto insts = instances_only(load_instances(prd_instances));
      const auto preds = predict_instances(ensemble, insts, portfolio_ids(read_portfolio(prd_portfolio)));
      write_output(prd_out, format_predictions(preds));
      std::cerr << "predicted " << preds.size() << " instances\n";
    } else if (rns->parsed()) {
      const auto runs = select_runs(read_records(rns_records), parse_predictions(read_text_file(rns_predictions)),
                                    rns_config);
      write_output(rns_out, format_run_results(runs));
    } else if (evl->parsed()) {
      const auto r = compare_files(evl_cand, evl_base, evl_hist.spec);
      if (evl_out.empty()) std::cout << format_summary(r);
      else write_output(evl_out, format_summary(r));
      print_summary(r);
    } else if (rep->parsed()) {
      const auto r = compare_files(rep_cand, rep_base, rep_hist.spec);
      write_report(r, rep_dir, rep_title);
      print_summary(r);
    } else if (cfit->parsed()) {
      const auto insts = instances_only(load_instances(cfit_instances));
      const auto ids = portfolio_ids(read_portfolio(cfit_portfolio));
      const auto m = aggregate(read_records(cfit_records), ids, ids_of(insts));
      std::vector<InstanceSignature> sigs;
      for (const auto& i : insts) sigs.push_back(signature_of(i));
      const auto model = fit_clusters(sigs, m, cfit_min);
      write_output(cfit_out, format_cluster_model(model));
      std::cerr << model.clusters.size() << " cluster(s) plus residual (config " << model.residual << ")\n";
    } else if (cprd->parsed()) {
      const auto model = parse_cluster_model(read_text_file(cprd_model));
      Predictions preds;
      for (const auto& i : instances_only(load_instances(cprd_instances)))
        preds.emplace_back(i.id, predict_cluster(model, i));
      write_output(cprd_out, format_predictions(preds));
    } else if (sad->parsed()) {
      return synth_adapter(sad_instance, sad_settings, sad_seed, sad_noise, sad_output);
    } else if (pip->parsed()) {
      const fs::path dir = pip_dir;
      fs::create_directories(dir);
      // Instances: given directories or a synthetic split over the three families.
      std::vector<LoadedInstance> train, val, test;
      stage("instances", [&] {
        if (!pip_train.empty()) {
          if (pip_test.empty()) throw UsageError("--train-instances needs --test-instances");
          train = load_instances(pip_train);
          test = load_instances(pip_test);
          if (!pip_val.empty()) val = load_instances(pip_val);
          return 0;
        }
        auto split = [&](std::size_t n, std::uint64_t salt, const char* name) {
          std::vector<MilpInstance> insts;
          const Family fams[] = {Family::sparse, Family::medium, Family::dense};
          for (std::size_t f = 0; f < 3; ++f) {
            const std::size_t count = n / 3 + (f < n % 3 ? 1 : 0);
            if (count == 0) continue;
            auto part = generate_synthetic_instances(fams[f], count, splitmix64(pip_data_seed + salt));
            insts.insert(insts.end(), part.begin(), part.end());
          }
          write_instances(insts, dir / "instances" / name);
          return load_instances(dir / "instances" / name);
        };
        train = split(pip_ntrain, 1, "train");
        if (pip_nval > 0) val = split(pip_nval, 2, "val");
        test = split(pip_ntest, 3, "test");
        return 0;
      });

      const auto candidates = stage("configs", [&] {
        std::vector<PortfolioEntry> p;
        if (!pip_portfolio.empty()) {
          p = read_portfolio(pip_portfolio);
        } else {
          const auto [space, table] = build_space("", "", true);
          write_text_file(dir / "configs.json", config_space_to_json(space, table).dump(2) + "\n");
          p = parse_portfolio(read_text_file(dir / "configs.json"));
        }
        return p;
      });

      const auto records = stage("collect", [&] {
        std::vector<LoadedInstance> all = train;
        all.insert(all.end(), val.begin(), val.end());
        all.insert(all.end(), test.begin(), test.end());
        auto recs = collect(all, candidates, pip_adapter, pip_seeds, 0, pip_time_limit, pip_parallelism,
                            dir / "work", dir / "journal.tsv");
        write_text_file(dir / "records.tsv", format_records(recs));
        return recs;
      });

      const auto train_insts = instances_only(train), val_insts = instances_only(val),
                 test_insts = instances_only(test);
      const auto selection = stage("select", [&] {
        auto s = select_portfolio(records, candidates, ids_of(train_insts), pip_epsilon, 0);
        write_text_file(dir / "portfolio.json", format_portfolio(s.portfolio));
        write_text_file(dir / "chain.tsv", format_chain(s.chain));
        return s;
      });

      const auto ensemble = stage("train", [&] {
        auto r = train_model(train_insts, val_insts, records, selection.portfolio, pip_train_opts);
        write_text_file(dir / "model.bin", gnn::save_ensemble(r.ensemble));
        write_text_file(dir / "training_log.tsv", format_training_logs(r));
        return r.ensemble;
      });

      const auto preds = stage("predict", [&] {
        auto p = predict_instances(ensemble, test_insts, portfolio_ids(selection.portfolio));
        write_text_file(dir / "predictions.tsv", format_predictions(p));
        return p;
      });

      stage("evaluate", [&] {
        // Baseline: the configuration with the best mean on the training set.
        const auto all_ids = portfolio_ids(candidates);
        const int baseline = single_best_config(aggregate(records, all_ids, ids_of(train_insts)));
        const auto cand_runs = select_runs(records, preds);
        const auto base_runs = select_runs(records, preds, baseline);
        write_text_file(dir / "candidate_runs.tsv", format_run_results(cand_runs));
        write_text_file(dir / "baseline_runs.tsv", format_run_results(base_runs));
        const auto [cv, bv] = pair_runs(cand_runs, base_runs);
        const auto report = compare(cv, bv, pip_hist.spec);
        write_report(report, dir / "report", "Reduced primal-dual integral vs config " + std::to_string(baseline));
        std::cerr << "baseline: config " << baseline << " (best mean on the training set)\n";
        print_summary(report);

        const PerfMatrix tm = aggregate(records, all_ids, ids_of(test_insts));
        double single = 0.0, model = 0.0, oracle = 0.0;
        const auto bcol = static_cast<Eigen::Index>(*tm.col_of(baseline));
        for (const auto& [id, cfg] : preds) {
          const auto r = static_cast<Eigen::Index>(*tm.row_of(id));
          single += tm.values(r, bcol);
          model += tm.values(r, static_cast<Eigen::Index>(*tm.col_of(cfg)));
          oracle += tm.values.row(r).minCoeff();
        }
        if (single > oracle)
          std::cerr << "gap closure vs per-instance oracle: " << percent(gap_closure(single, model, oracle)) << "\n";
        return 0;
      });
      std::cerr << "artifacts in " << dir.string() << "\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nRun with --help for more information.\n";
    return kExitUsage;
  } catch (const AdapterError& e) {
    std::cerr << "adapter error: " << e.what() << "\n";
    return kExitAdapter;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
