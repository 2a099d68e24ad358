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
#include <limits>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "confscout/error.hpp"
#include "confscout/perf_db.hpp"

namespace confscout {

inline constexpr double kNoIncumbent = std::numeric_limits<double>::infinity();

struct BoundEvent {
  double t = 0.0;
  double primal = kNoIncumbent;  // +inf until an incumbent exists
  double dual = -std::numeric_limits<double>::infinity();
};

// Minimization-canonical bound trace over [0, horizon].
struct BoundTrace {
  std::vector<BoundEvent> events;
  double horizon = 0.0;
};

// ∫_0^T min(gap(t), gap_cap) dt with gap held constant from each event until
// the next one. Periods without a finite primal or dual bound count as
// gap_cap. Events at or after the horizon are ignored.
inline double primal_dual_integral(const BoundTrace& trace, double gap_cap) {
  if (!(gap_cap > 0.0)) throw DataError("gap cap must be positive");
  if (!(trace.horizon >= 0.0) || !std::isfinite(trace.horizon)) throw DataError("invalid trace horizon");
  if (trace.events.empty()) throw DataError("empty bound trace");
  if (trace.events.front().t != 0.0) throw DataError("bound trace must start at t = 0");
  double total = 0.0;
  for (std::size_t k = 0; k < trace.events.size(); ++k) {
    const auto& e = trace.events[k];
    if (k > 0 && e.t < trace.events[k - 1].t) throw DataError("bound trace times must be non-decreasing");
    if (std::isnan(e.primal) || std::isnan(e.dual)) throw DataError("NaN bound in trace");
    double gap = gap_cap;
    if (std::isfinite(e.primal) && std::isfinite(e.dual)) {
      gap = e.primal - e.dual;
      if (gap < 0.0)
        throw DataError("negative gap at t = " + format_double(e.t) + " (primal below dual; corrupted or mis-signed trace)");
      gap = std::min(gap, gap_cap);
    }
    if (e.t >= trace.horizon) break;
    const double end = k + 1 < trace.events.size() ? std::min(trace.events[k + 1].t, trace.horizon) : trace.horizon;
    total += gap * (end - e.t);
  }
  return total;
}

// Γ = Σ γ, summed left to right.
inline double total_integral(std::span<const double> gammas) {
  double sum = 0.0;
  for (double g : gammas) sum += g;
  return sum;
}

// (γ_candidate - γ_baseline) / γ_baseline; negative means the candidate is better.
inline double improvement(double candidate, double baseline) {
  if (baseline == 0.0) throw DataError("improvement is undefined for a zero baseline");
  return (candidate - baseline) / baseline;
}

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return total_integral(xs) / static_cast<double>(xs.size());
}

// Even-length lists use the midpoint of the two central values.
inline double median_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct HistogramSpec {
  double lo = -1.0;
  double hi = 1.0;
  std::size_t bins = 20;
};

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
};

// Values outside [lo, hi) are clamped into the first/last bin.
inline Histogram histogram(std::span<const double> values, const HistogramSpec& spec) {
  if (spec.bins < 1 || !(spec.hi > spec.lo)) throw DataError("invalid histogram specification");
  Histogram h;
  const double width = (spec.hi - spec.lo) / static_cast<double>(spec.bins);
  for (std::size_t k = 0; k <= spec.bins; ++k) h.edges.push_back(spec.lo + width * static_cast<double>(k));
  h.counts.assign(spec.bins, 0);
  for (double v : values) {
    auto k = static_cast<long long>(std::floor((v - spec.lo) / width));
    k = std::clamp<long long>(k, 0, static_cast<long long>(spec.bins) - 1);
    ++h.counts[static_cast<std::size_t>(k)];
  }
  return h;
}

struct EvalReport {
  std::vector<double> candidate;
  std::vector<double> baseline;
  double total_candidate = 0.0;
  double total_baseline = 0.0;
  std::size_t wins_candidate = 0;
  std::size_t wins_baseline = 0;
  std::size_t ties = 0;
  std::vector<double> improvements;  // per run
  double mean_improvement = 0.0;
  double median_improvement = 0.0;
  double best_improvement = 0.0;   // most negative
  double worst_improvement = 0.0;  // most positive
  Histogram histogram;

  // Relative change of the totals.
  double total_improvement() const { return improvement(total_candidate, total_baseline); }
};

inline EvalReport compare(std::span<const double> candidate, std::span<const double> baseline,
                          const HistogramSpec& spec = {}) {
  if (candidate.size() != baseline.size())
    throw DataError("candidate and baseline have different run counts (" + std::to_string(candidate.size()) + " vs " +
                    std::to_string(baseline.size()) + ")");
  EvalReport r;
  r.candidate.assign(candidate.begin(), candidate.end());
  r.baseline.assign(baseline.begin(), baseline.end());
  r.total_candidate = total_integral(candidate);
  r.total_baseline = total_integral(baseline);
  for (std::size_t k = 0; k < candidate.size(); ++k) {
    if (candidate[k] < baseline[k]) ++r.wins_candidate;
    else if (baseline[k] < candidate[k]) ++r.wins_baseline;
    else ++r.ties;
    r.improvements.push_back(improvement(candidate[k], baseline[k]));
  }
  r.mean_improvement = mean_of(r.improvements);
  r.median_improvement = median_of(r.improvements);
  if (!r.improvements.empty()) {
    r.best_improvement = *std::min_element(r.improvements.begin(), r.improvements.end());
    r.worst_improvement = *std::max_element(r.improvements.begin(), r.improvements.end());
  }
  r.histogram = histogram(r.improvements, spec);
  return r;
}

// --- per-run results files -------------------------------------------------

struct RunResult {
  std::string instance_id;
  std::uint64_t seed = 0;
  int config_id = 0;
  double gamma = 0.0;

  bool operator==(const RunResult&) const = default;
};

// instance_id \t seed \t config_id \t gamma
inline std::string format_run_results(std::span<const RunResult> runs) {
  std::string out;
  for (const auto& r : runs) {
    check_identifier(r.instance_id);
    out += r.instance_id + "\t" + std::to_string(r.seed) + "\t" + std::to_string(r.config_id) + "\t" +
           format_double(r.gamma) + "\n";
  }
  return out;
}

inline std::vector<RunResult> parse_run_results(std::string_view text) {
  std::vector<RunResult> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    const std::string where = "line " + std::to_string(line_no);
    if (f.size() != 4) throw ParseError(where, "expected 4 tab-separated fields");
    RunResult r;
    try {
      check_identifier(f[0]);
      r.instance_id = std::string(f[0]);
      r.seed = parse_int<std::uint64_t>(f[1]);
      r.config_id = parse_int<int>(f[2]);
      r.gamma = parse_double(f[3]);
    } catch (const DataError& e) {
      throw ParseError(where, e.what());
    }
    if (!std::isfinite(r.gamma) || r.gamma < 0.0) throw ParseError(where, "gamma must be finite and non-negative");
    out.push_back(std::move(r));
  }
  return out;
}

// Pairs candidate and baseline runs by (instance_id, seed), in the
// candidate file's order.
inline std::pair<std::vector<double>, std::vector<double>> pair_runs(std::span<const RunResult> candidate,
                                                                     std::span<const RunResult> baseline) {
  if (candidate.size() != baseline.size())
    throw DataError("candidate and baseline have different run counts (" + std::to_string(candidate.size()) + " vs " +
                    std::to_string(baseline.size()) + ")");
  std::map<std::pair<std::string, std::uint64_t>, double> base;
  for (const auto& r : baseline)
    if (!base.emplace(std::make_pair(r.instance_id, r.seed), r.gamma).second)
      throw DataError("duplicate baseline run (" + r.instance_id + ", seed " + std::to_string(r.seed) + ")");
  std::pair<std::vector<double>, std::vector<double>> out;
  for (const auto& r : candidate) {
    auto it = base.find({r.instance_id, r.seed});
    if (it == base.end())
      throw DataError("no baseline run for (" + r.instance_id + ", seed " + std::to_string(r.seed) + ")");
    out.first.push_back(r.gamma);
    out.second.push_back(it->second);
  }
  return out;
}

// --- report export ---------------------------------------------------------

inline std::string format_summary(const EvalReport& r) {
  std::ostringstream os;
  os << "metric\tcandidate\tbaseline\n";
  os << "total_gamma\t" << format_double(r.total_candidate) << "\t" << format_double(r.total_baseline) << "\n";
  os << "wins\t" << r.wins_candidate << "\t" << r.wins_baseline << "\n";
  os << "ties\t" << r.ties << "\t" << r.ties << "\n";
  os << "runs\t" << r.candidate.size() << "\t" << r.baseline.size() << "\n";
  os << "total_improvement\t" << format_double(r.total_baseline > 0 ? r.total_improvement() : 0.0) << "\t0\n";
  os << "mean_improvement\t" << format_double(r.mean_improvement) << "\t0\n";
  os << "median_improvement\t" << format_double(r.median_improvement) << "\t0\n";
  os << "best_improvement\t" << format_double(r.best_improvement) << "\t0\n";
  os << "worst_improvement\t" << format_double(r.worst_improvement) << "\t0\n";
  return os.str();
}

// bin_lo \t bin_hi \t count
inline std::string format_histogram(const Histogram& h) {
  std::string out = "bin_lo\tbin_hi\tcount\n";
  for (std::size_t k = 0; k < h.counts.size(); ++k)
    out += format_double(h.edges[k]) + "\t" + format_double(h.edges[k + 1]) + "\t" + std::to_string(h.counts[k]) + "\n";
  return out;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Standalone SVG bar chart of the per-run improvement histogram with
// mean and median markers.
inline std::string histogram_svg(const EvalReport& r, std::string_view title) {
  const auto& h = r.histogram;
  const double W = 640, Hh = 360, left = 50, right = 20, top = 40, bottom = 50;
  const double plot_w = W - left - right, plot_h = Hh - top - bottom;
  std::size_t peak = 1;
  for (auto c : h.counts) peak = std::max(peak, c);
  const double lo = h.edges.front(), hi = h.edges.back();
  auto x_of = [&](double v) { return left + (std::clamp(v, lo, hi) - lo) / (hi - lo) * plot_w; };
  auto pct = [](double v) {
    std::ostringstream os;
    os.precision(3);
    os << v * 100.0 << "%";
    return os.str();
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh << "\" viewBox=\"0 0 " << W
     << " " << Hh << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << xml_escape(title) << "</text>\n";
  const double bw = plot_w / static_cast<double>(h.counts.size());
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    const double bh = plot_h * static_cast<double>(h.counts[k]) / static_cast<double>(peak);
    os << "<rect x=\"" << left + bw * static_cast<double>(k) << "\" y=\"" << top + plot_h - bh << "\" width=\""
       << bw - 1 << "\" height=\"" << bh << "\" fill=\"#4c72b0\"/>\n";
  }
  os << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
     << top + plot_h << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
     << "\" stroke=\"black\"/>\n";
  for (double v : {lo, 0.5 * (lo + hi), hi})
    os << "<text x=\"" << x_of(v) << "\" y=\"" << top + plot_h + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << pct(v) << "</text>\n";
  os << "<text x=\"12\" y=\"" << top + 10 << "\" font-family=\"sans-serif\" font-size=\"11\">" << peak << "</text>\n";
  os << "<line x1=\"" << x_of(r.mean_improvement) << "\" y1=\"" << top << "\" x2=\"" << x_of(r.mean_improvement)
     << "\" y2=\"" << top + plot_h << "\" stroke=\"#c44e52\" stroke-width=\"2\"/>\n";
  os << "<line x1=\"" << x_of(r.median_improvement) << "\" y1=\"" << top << "\" x2=\"" << x_of(r.median_improvement)
     << "\" y2=\"" << top + plot_h << "\" stroke=\"#55a868\" stroke-width=\"2\" stroke-dasharray=\"5,3\"/>\n";
  os << "<text x=\"" << left << "\" y=\"" << Hh - 12 << "\" font-family=\"sans-serif\" font-size=\"12\">"
     << "reduced primal-dual integral; mean " << pct(r.mean_improvement) << " (solid), median "
     << pct(r.median_improvement) << " (dashed)</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace confscout
