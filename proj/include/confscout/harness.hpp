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

// Data collection over (instance x configuration x seed).
//
// Adapter process protocol: the adapter is launched once per run with the
// instance file, a settings file ("name = value" lines), the seed, the time
// limit in seconds and an output path. It writes one JSON document there:
//   {"status": "ok" | "error", "gamma": <number>,
//    "trace": [[t, primal, dual], ...]}            (trace optional)
// null bounds in a trace mean "none yet". When gamma is absent the integral
// is computed from the trace. Nonzero exit, missing or malformed output
// yields an error record.

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

#include "confscout/config_space.hpp"
#include "confscout/error.hpp"
#include "confscout/eval.hpp"
#include "confscout/log.hpp"
#include "confscout/mps.hpp"
#include "confscout/perf_db.hpp"
#include "confscout/synthetic.hpp"

extern char** environ;

namespace confscout {

struct PlanInstance {
  std::string id;
  std::filesystem::path path;
};

struct PlanConfig {
  int id = 0;
  SettingMap settings;
};

struct CollectionPlan {
  std::vector<PlanInstance> instances;
  std::vector<PlanConfig> configs;
  std::size_t seeds_per_pair = 1;  // seeds first_seed .. first_seed + n - 1
  std::uint64_t first_seed = 0;
  double time_limit = 900.0;
  std::size_t parallelism = 1;
  std::filesystem::path work_dir;  // settings files and adapter outputs
  std::filesystem::path journal;   // record store used for resuming; empty = none
};

inline void validate(const CollectionPlan& plan) {
  if (plan.seeds_per_pair < 1) throw DataError("seeds per pair must be at least 1");
  if (!(plan.time_limit > 0.0)) throw DataError("time limit must be positive");
  if (plan.parallelism < 1) throw DataError("parallelism must be at least 1");
  std::set<std::string> ids;
  for (const auto& i : plan.instances) {
    check_identifier(i.id);
    if (!ids.insert(i.id).second) throw DataError("duplicate instance id '" + i.id + "' in plan");
  }
  std::set<int> cids;
  for (const auto& c : plan.configs)
    if (!cids.insert(c.id).second) throw DataError("duplicate config id " + std::to_string(c.id) + " in plan");
}

struct RunRequest {
  const PlanInstance* instance = nullptr;
  const PlanConfig* config = nullptr;
  std::filesystem::path settings_path;
  std::uint64_t seed = 0;
  double time_limit = 0.0;
  std::filesystem::path output_path;
};

struct RunOutcome {
  RunStatus status = RunStatus::error;
  double gamma = 0.0;
};

class Adapter {
 public:
  virtual ~Adapter() = default;
  // Throws AdapterError when the adapter cannot be used at all.
  virtual void check() const {}
  virtual RunOutcome run(const RunRequest& request) const = 0;
};

// Parses an adapter result document. gap_cap and horizon are used only when
// the gamma has to be integrated from a trace.
inline RunOutcome parse_adapter_result(std::string_view text, double horizon, double gap_cap) {
  using nlohmann::json;
  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("status") || !doc["status"].is_string())
    return {RunStatus::error, 0.0};
  const auto status = doc["status"].get<std::string>();
  if (status == "timeout_of_harness") return {RunStatus::timeout_of_harness, 0.0};
  if (status != "ok") return {RunStatus::error, 0.0};
  if (doc.contains("gamma") && doc["gamma"].is_number()) {
    const double g = doc["gamma"].get<double>();
    if (!std::isfinite(g) || g < 0.0) return {RunStatus::error, 0.0};
    return {RunStatus::ok, g};
  }
  if (!doc.contains("trace") || !doc["trace"].is_array()) return {RunStatus::error, 0.0};
  BoundTrace trace;
  trace.horizon = horizon;
  for (const auto& ev : doc["trace"]) {
    if (!ev.is_array() || ev.size() != 3 || !ev[0].is_number()) return {RunStatus::error, 0.0};
    BoundEvent e;
    e.t = ev[0].get<double>();
    e.primal = ev[1].is_number() ? ev[1].get<double>() : kNoIncumbent;
    e.dual = ev[2].is_number() ? ev[2].get<double>() : -std::numeric_limits<double>::infinity();
    trace.events.push_back(e);
  }
  try {
    return {RunStatus::ok, primal_dual_integral(trace, gap_cap)};
  } catch (const DataError&) {
    return {RunStatus::error, 0.0};
  }
}

// Runs an external executable per request. Argument tokens may contain the
// placeholders {instance}, {settings}, {seed}, {time_limit} and {output}.
class ProcessAdapter : public Adapter {
 public:
  ProcessAdapter(std::string executable, std::vector<std::string> args, double gap_cap = 1e20)
      : executable_(std::move(executable)), args_(std::move(args)), gap_cap_(gap_cap) {}

  // Processes still running after this factor of the time limit (plus a
  // fixed grace period) are killed and recorded as timeout_of_harness.
  void set_kill_policy(double factor, double grace_seconds) {
    kill_factor_ = factor;
    grace_ = grace_seconds;
  }

  void check() const override {
    if (resolve().empty()) throw AdapterError("adapter executable not found: " + executable_);
  }

  RunOutcome run(const RunRequest& req) const override {
    std::vector<std::string> argv{executable_};
    for (const auto& a : args_) argv.push_back(substitute(a, req));
    std::vector<char*> cargv;
    for (auto& s : argv) cargv.push_back(s.data());
    cargv.push_back(nullptr);

    std::error_code ec;
    std::filesystem::remove(req.output_path, ec);
    const std::string log_path = req.output_path.string() + ".log";

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
    pid_t pid = 0;
    const std::string exe = resolve();
    const int rc = posix_spawn(&pid, exe.c_str(), &actions, nullptr, cargv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) {
      log::warn("failed to spawn adapter ", exe, ": ", std::strerror(rc));
      return {RunStatus::error, 0.0};
    }

    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(kill_factor_ * req.time_limit + grace_);
    int status = 0;
    auto nap = std::chrono::microseconds(200);
    for (;;) {
      const pid_t w = ::waitpid(pid, &status, WNOHANG);
      if (w == pid) break;
      if (w < 0 && errno != EINTR) return {RunStatus::error, 0.0};
      if (std::chrono::steady_clock::now() > deadline) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        return {RunStatus::timeout_of_harness, 0.0};
      }
      std::this_thread::sleep_for(nap);
      nap = std::min(nap * 2, std::chrono::microseconds(20000));
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {RunStatus::error, 0.0};
    std::string text;
    try {
      text = read_text_file(req.output_path);
    } catch (const DataError&) {
      return {RunStatus::error, 0.0};
    }
    return parse_adapter_result(text, req.time_limit, gap_cap_);
  }

 private:
  std::string resolve() const {
    if (executable_.find('/') != std::string::npos)
      return ::access(executable_.c_str(), X_OK) == 0 ? executable_ : std::string();
    const char* path = std::getenv("PATH");
    std::string_view dirs = path ? path : "/usr/bin:/bin";
    while (!dirs.empty()) {
      const auto colon = dirs.find(':');
      const auto dir = dirs.substr(0, colon);
      const std::string candidate = std::string(dir.empty() ? "." : dir) + "/" + executable_;
      if (::access(candidate.c_str(), X_OK) == 0) return candidate;
      if (colon == std::string_view::npos) break;
      dirs.remove_prefix(colon + 1);
    }
    return {};
  }

  static std::string substitute(std::string s, const RunRequest& req) {
    const std::pair<std::string, std::string> keys[] = {
        {"{instance}", req.instance->path.string()},
        {"{settings}", req.settings_path.string()},
        {"{seed}", std::to_string(req.seed)},
        {"{time_limit}", format_double(req.time_limit)},
        {"{output}", req.output_path.string()},
    };
    for (const auto& [key, value] : keys) {
      for (std::size_t at = s.find(key); at != std::string::npos; at = s.find(key, at + value.size()))
        s.replace(at, key.size(), value);
    }
    return s;
  }

  std::string executable_;
  std::vector<std::string> args_;
  double gap_cap_;
  double kill_factor_ = 2.0;
  double grace_ = 5.0;
};

// In-process synthetic solver behind the adapter interface. The level is
// read from the configuration's "synthetic/level" setting.
class SyntheticAdapter : public Adapter {
 public:
  explicit SyntheticAdapter(SyntheticSolver solver = SyntheticSolver()) : solver_(std::move(solver)) {}

  RunOutcome run(const RunRequest& req) const override {
    ++invocations_;
    try {
      const MilpInstance& inst = instance(req.instance->path);
      const int level = synthetic_level_from_settings(req.config->settings);
      return {RunStatus::ok, solver_.gamma(inst, req.config->id, req.seed, level)};
    } catch (const DataError& e) {
      log::warn("synthetic adapter: ", e.what());
      return {RunStatus::error, 0.0};
    }
  }

  std::size_t invocations() const noexcept { return invocations_.load(); }

 private:
  const MilpInstance& instance(const std::filesystem::path& path) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(path.string());
    if (it == cache_.end()) it = cache_.emplace(path.string(), read_instance(path)).first;
    return it->second;
  }

  SyntheticSolver solver_;
  mutable std::mutex mu_;
  mutable std::map<std::string, MilpInstance> cache_;
  mutable std::atomic<std::size_t> invocations_{0};
};

struct CollectionStats {
  std::size_t invocations = 0;  // adapter runs performed by this call
  std::size_t resumed = 0;      // triples taken from the journal
  std::size_t failures = 0;     // non-ok records among the new runs
};

inline std::string settings_file_name(int config_id) { return "config_" + std::to_string(config_id) + ".set"; }

// One record per (instance, config, seed) in plan order, seeds ascending.
// Triples already present in the journal with a status other than "error"
// are not rerun. New results are appended to the journal as they finish.
// The returned list does not depend on parallelism or completion order.
inline std::vector<PerfRecord> run_collection(const CollectionPlan& plan, const Adapter& adapter,
                                              CollectionStats* stats = nullptr) {
  validate(plan);
  adapter.check();

  using Key = std::tuple<std::string, int, std::uint64_t>;
  std::map<Key, PerfRecord> done;
  std::optional<RecordStore> journal;
  if (!plan.journal.empty()) {
    journal.emplace(plan.journal);
    for (auto& r : journal->load()) done[{r.instance_id, r.config_id, r.seed}] = r;
  }

  const auto settings_dir = plan.work_dir / "settings";
  const auto runs_dir = plan.work_dir / "runs";
  std::filesystem::create_directories(settings_dir);
  std::filesystem::create_directories(runs_dir);
  for (const auto& c : plan.configs) write_text_file(settings_dir / settings_file_name(c.id), emit_settings(c.settings));

  struct Slot {
    std::size_t instance, config;
    std::uint64_t seed;
  };
  std::vector<Slot> slots;
  std::vector<PerfRecord> results;
  std::vector<std::size_t> pending;
  CollectionStats local;
  for (std::size_t i = 0; i < plan.instances.size(); ++i)
    for (std::size_t c = 0; c < plan.configs.size(); ++c)
      for (std::size_t s = 0; s < plan.seeds_per_pair; ++s) {
        const std::uint64_t seed = plan.first_seed + s;
        slots.push_back({i, c, seed});
        auto it = done.find({plan.instances[i].id, plan.configs[c].id, seed});
        if (it != done.end() && it->second.status != RunStatus::error) {
          results.push_back(it->second);
          ++local.resumed;
        } else {
          results.push_back(PerfRecord{plan.instances[i].id, plan.configs[c].id, seed, 0.0, RunStatus::error});
          pending.push_back(slots.size() - 1);
        }
      }

  std::mutex journal_mu;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failures{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < pending.size(); k = next++) {
      const Slot& slot = slots[pending[k]];
      RunRequest req;
      req.instance = &plan.instances[slot.instance];
      req.config = &plan.configs[slot.config];
      req.settings_path = settings_dir / settings_file_name(req.config->id);
      req.seed = slot.seed;
      req.time_limit = plan.time_limit;
      req.output_path = runs_dir / ("run_" + std::to_string(slot.instance) + "_" + std::to_string(req.config->id) +
                                    "_" + std::to_string(slot.seed) + ".json");
      const RunOutcome out = adapter.run(req);
      PerfRecord& rec = results[pending[k]];
      rec.status = out.status;
      rec.gamma = out.status == RunStatus::ok ? out.gamma : 0.0;
      if (out.status != RunStatus::ok) ++failures;
      if (journal) {
        std::lock_guard<std::mutex> lock(journal_mu);
        journal->append(rec);
      }
    }
  };
  const std::size_t n_workers = std::min(plan.parallelism, pending.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  local.invocations = pending.size();
  local.failures = failures.load();
  if (stats) *stats = local;
  return results;
}

}  // namespace confscout
