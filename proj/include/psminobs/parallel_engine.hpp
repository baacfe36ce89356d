#pragma once

// Parallel sampled search: m workers, each searching its own sampled copy
// of the score table with MINOBS under a shared budget, reduced by argmax.
// Also the relative score gap metric and the interval comparison used to
// report runs against a baseline.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "psminobs/budget.hpp"
#include "psminobs/order_search.hpp"
#include "psminobs/sampler.hpp"
#include "psminobs/score_io.hpp"

namespace psminobs {

struct RunConfig {
  SamplingConfig sampling;
  std::size_t m = 1;
  double time_limit = 60.0;  // seconds; ignored when iteration_budget is set
  // Per-worker budget in neighbour evaluations; makes runs reproducible.
  std::optional<std::uint64_t> iteration_budget;
  double snapshot_interval = 1800.0;  // same unit as the budget
  std::uint64_t base_seed = 0;
  unsigned threads = 0;  // 0 means m
  SearchConfig search;
  const std::atomic<bool>* cancel = nullptr;
};

inline void validate_run_config(const RunConfig& cfg) {
  validate_sampling_config(cfg.sampling);
  validate_search_config(cfg.search);
  if (cfg.m == 0) fail(ErrorCode::InvalidArgument, "need at least one worker");
  const double limit = cfg.iteration_budget ? static_cast<double>(*cfg.iteration_budget) : cfg.time_limit;
  if (!(limit > 0.0)) fail(ErrorCode::InvalidArgument, "budget must be positive");
  if (!(cfg.snapshot_interval > 0.0)) fail(ErrorCode::InvalidArgument, "snapshot interval must be positive");
  if (cfg.snapshot_interval > limit) {
    fail(ErrorCode::InvalidArgument, "snapshot interval exceeds the budget");
  }
}

/// Search seed of worker s (1-based). Worker 1 searches with the base seed
/// itself, so a one-worker run matches a direct MINOBS run.
inline std::uint64_t worker_search_seed(std::uint64_t base_seed, std::size_t s) {
  return base_seed + static_cast<std::uint64_t>(s - 1) * 0x9E3779B97F4A7C15ULL;
}

struct WorkerReport {
  std::size_t s = 0;
  std::vector<std::size_t> sampled_sizes;  // per node
  std::vector<Snapshot> snapshots;
  std::optional<OrderingEvaluation> result;
  std::string error;  // non-empty when the worker failed

  bool ok() const { return result.has_value(); }
};

struct RunReport {
  double p = 1.0;
  std::size_t m = 1;
  bool iteration_based = false;
  double budget = 0.0;
  std::uint64_t base_seed = 0;
  std::size_t population_size = 0;
  double mutation_rate = 0.0;

  std::vector<WorkerReport> workers;
  std::size_t winner = 0;  // 1-based worker index
  Dag winner_dag;
  std::optional<double> baseline;
  std::vector<std::optional<double>> deltas;  // per worker, against baseline

  const WorkerReport& winning_worker() const { return workers.at(winner - 1); }
};

/// Relative gap (S* - S_i) / S*; positive when S_i beats a negative S*.
inline double delta(double s_star, double s_i) {
  if (s_star == 0.0) fail(ErrorCode::InvalidArgument, "baseline score must be non-zero");
  return (s_star - s_i) / s_star;
}

/// Sum of the original table's scores for the DAG's parent sets; fails when
/// a parent set is not in the table.
inline double rescore_dag(const Dag& dag, const ScoreTable& table) {
  if (dag.parents.size() != table.num_vars) fail(ErrorCode::InvalidArgument, "DAG size differs from table");
  double total = 0.0;
  for (NodeId v = 0; v < table.num_vars; ++v) {
    const auto& entries = table.tables[v].entries;
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const ScoredParentSet& e) { return e.parents == dag.parents[v]; });
    if (it == entries.end()) fail(ErrorCode::UnknownParent, "parent set of node " + std::to_string(v) + " is not a candidate");
    total += it->score;
  }
  return total;
}

inline RunReport ps_minobs(const ScoreTable& table, const RunConfig& cfg) {
  validate_run_config(cfg);
  const auto start = Budget::Clock::now();

  RunReport report;
  report.p = cfg.sampling.p;
  report.m = cfg.m;
  report.iteration_based = cfg.iteration_budget.has_value();
  report.budget = report.iteration_based ? static_cast<double>(*cfg.iteration_budget) : cfg.time_limit;
  report.base_seed = cfg.base_seed;
  report.population_size = cfg.search.population_size;
  report.mutation_rate = cfg.search.mutation_rate;
  report.workers.resize(cfg.m);

  auto run_worker = [&](std::size_t s) {
    WorkerReport& w = report.workers[s - 1];
    w.s = s;
    try {
      const ScoreTable sampled = sample_score_table(s, cfg.sampling, table, cfg.base_seed);
      for (const auto& t : sampled.tables) w.sampled_sizes.push_back(t.entries.size());

      Budget budget = cfg.iteration_budget ? Budget::iterations(*cfg.iteration_budget)
                                           : Budget::wall_clock(cfg.time_limit, start);
      budget.with_cancel(cfg.cancel);
      SearchConfig search = cfg.search;
      search.rng_seed = worker_search_seed(cfg.base_seed, s);
      search.snapshot_interval = cfg.snapshot_interval;
      search.worker_id = s;
      w.result = minobs_search(sampled, search, budget, [&w](const Snapshot& snap) { w.snapshots.push_back(snap); });
    } catch (const std::exception& e) {
      w.error = e.what();
      w.result.reset();
    } catch (...) {
      w.error = "unknown failure";
      w.result.reset();
    }
  };

  const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(cfg.threads == 0 ? cfg.m : cfg.threads, cfg.m));
  if (threads <= 1) {
    for (std::size_t s = 1; s <= cfg.m; ++s) run_worker(s);
  } else {
    std::atomic<std::size_t> next{1};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t s; (s = next.fetch_add(1)) <= cfg.m;) run_worker(s);
      });
    }
  }

  // Argmax; ties go to the lowest worker index.
  for (const auto& w : report.workers) {
    if (!w.ok()) continue;
    if (report.winner == 0 || w.result->total > report.workers[report.winner - 1].result->total) report.winner = w.s;
  }
  if (report.winner == 0) {
    std::string why;
    for (const auto& w : report.workers) why += "\n  worker " + std::to_string(w.s) + ": " + w.error;
    fail(ErrorCode::AllWorkersFailed, "every worker failed:" + why);
  }
  report.winner_dag = report.winning_worker().result->to_dag();
  return report;
}

inline void attach_baseline(RunReport& report, double s_star) {
  report.baseline = s_star;
  report.deltas.clear();
  for (const auto& w : report.workers) {
    report.deltas.push_back(w.ok() ? std::optional<double>(delta(s_star, w.result->total)) : std::nullopt);
  }
}

// ------------------------------------------------------------ comparisons

struct DeltaTable {
  std::vector<double> boundaries;
  std::vector<std::size_t> workers;
  std::vector<std::vector<std::optional<double>>> deltas;  // [worker][boundary]
  std::vector<std::optional<double>> highest;              // [boundary]
};

namespace detail {

inline std::optional<double> best_until(const std::vector<Snapshot>& series, double t) {
  std::optional<double> best;
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  for (const auto& s : series) {
    if (s.elapsed <= t + tol && (!best || s.score > *best)) best = s.score;
  }
  return best;
}

inline double span(const std::vector<Snapshot>& series) {
  double out = 0.0;
  for (const auto& s : series) out = std::max(out, s.elapsed);
  return out;
}

}  // namespace detail

/// Per-interval gaps between a baseline series and each worker's series.
/// At every boundary k * interval each series contributes its best score
/// recorded at or before the boundary.
inline DeltaTable compare_runs(const std::vector<Snapshot>& baseline, const std::vector<Snapshot>& run,
                               double interval) {
  if (baseline.empty() || run.empty()) fail(ErrorCode::InvalidArgument, "snapshot series must be non-empty");
  if (!(interval > 0.0)) fail(ErrorCode::InvalidArgument, "interval must be positive");
  const double longest = std::max(detail::span(baseline), detail::span(run));
  const auto count = static_cast<std::size_t>(std::floor(longest / interval + 1e-9));
  if (count == 0) fail(ErrorCode::InvalidArgument, "interval is longer than both series");

  DeltaTable out;
  for (std::size_t k = 1; k <= count; ++k) out.boundaries.push_back(static_cast<double>(k) * interval);

  std::vector<std::size_t> ids;
  for (const auto& s : run) ids.push_back(s.worker);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  out.workers = ids;

  std::unordered_map<std::size_t, std::vector<Snapshot>> by_worker;
  for (const auto& s : run) by_worker[s.worker].push_back(s);

  out.highest.assign(count, std::nullopt);
  for (std::size_t id : ids) {
    std::vector<std::optional<double>> row(count);
    for (std::size_t k = 0; k < count; ++k) {
      const auto base = detail::best_until(baseline, out.boundaries[k]);
      const auto mine = detail::best_until(by_worker[id], out.boundaries[k]);
      if (base && mine) {
        row[k] = delta(*base, *mine);
        if (!out.highest[k] || *row[k] > *out.highest[k]) out.highest[k] = row[k];
      }
    }
    out.deltas.push_back(std::move(row));
  }
  return out;
}

/// Fraction as permille with three decimals; never prints "-0.000".
inline std::string format_permille(double fraction) {
  double v = std::round(fraction * 1000.0 * 1000.0) / 1000.0;
  if (v == 0.0) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

// ------------------------------------------------------------ CSV formats

inline std::string write_snapshots_csv(const std::vector<Snapshot>& snapshots) {
  std::string out = "worker,elapsed_s,score\n";
  for (const auto& s : snapshots) {
    out += std::to_string(s.worker) + "," + format_double(s.elapsed) + "," + format_double(s.score) + "\n";
  }
  return out;
}

/// Every worker's snapshots, worker by worker.
inline std::string write_report_csv(const RunReport& report) {
  std::vector<Snapshot> all;
  for (const auto& w : report.workers) all.insert(all.end(), w.snapshots.begin(), w.snapshots.end());
  return write_snapshots_csv(all);
}

inline std::vector<Snapshot> parse_snapshots_csv(std::string_view text) {
  std::vector<Snapshot> out;
  bool first = true;
  std::size_t number = 0;
  for (const auto& ln : detail::tokenize(text, true)) {
    number = ln.number;
    if (first) {
      first = false;
      if (ln.tokens.size() == 3 && ln.tokens[0] == "worker") continue;
    }
    if (ln.tokens.size() != 3) detail::fail_at(ErrorCode::ParseError, number, "expected worker,elapsed_s,score");
    auto worker = parse_integer<std::size_t>(ln.tokens[0]);
    auto elapsed = parse_double(ln.tokens[1]);
    auto score = parse_double(ln.tokens[2]);
    if (!worker || !elapsed || !score || !std::isfinite(*elapsed) || !std::isfinite(*score)) {
      detail::fail_at(ErrorCode::ParseError, number, "malformed snapshot row");
    }
    out.push_back(Snapshot{*elapsed, *score, *worker});
  }
  if (out.empty()) fail(ErrorCode::ParseError, "no snapshot rows");
  return out;
}

/// row,interval_end_s,delta_permille with rows S<worker> and "highest".
/// Cells without data on either side are written as NA.
inline std::string write_delta_csv(const DeltaTable& table) {
  std::string out = "row,interval_end_s,delta_permille\n";
  auto cell = [](const std::optional<double>& d) { return d ? format_permille(*d) : std::string("NA"); };
  for (std::size_t w = 0; w < table.workers.size(); ++w) {
    for (std::size_t k = 0; k < table.boundaries.size(); ++k) {
      out += "S" + std::to_string(table.workers[w]) + "," + format_double(table.boundaries[k]) + "," +
             cell(table.deltas[w][k]) + "\n";
    }
  }
  for (std::size_t k = 0; k < table.boundaries.size(); ++k) {
    out += "highest," + format_double(table.boundaries[k]) + "," + cell(table.highest[k]) + "\n";
  }
  return out;
}

/// Aligned grid, one row per worker plus the highest-DAG row.
inline std::string format_delta_table(const DeltaTable& table) {
  auto cell = [](const std::optional<double>& d) {
    std::string s = d ? format_permille(*d) + "‰" : std::string("NA");
    return std::string(s.size() < 12 ? 12 - s.size() : 0, ' ') + s;
  };
  std::string out = "          ";
  for (double b : table.boundaries) {
    std::string h = format_double(b);
    out += std::string(h.size() < 10 ? 10 - h.size() : 0, ' ') + h;
  }
  out += "\n";
  for (std::size_t w = 0; w < table.workers.size(); ++w) {
    std::string label = "S" + std::to_string(table.workers[w]);
    out += label + std::string(label.size() < 8 ? 8 - label.size() : 0, ' ');
    for (const auto& d : table.deltas[w]) out += cell(d);
    out += "\n";
  }
  out += "highest ";
  for (const auto& d : table.highest) out += cell(d);
  out += "\n";
  return out;
}

inline std::string write_report_summary(const RunReport& report) {
  std::string out;
  out += "p " + format_double(report.p) + "\n";
  out += "m " + std::to_string(report.m) + "\n";
  out += std::string("budget ") + format_double(report.budget) + (report.iteration_based ? " iterations" : " seconds") + "\n";
  out += "seed " + std::to_string(report.base_seed) + "\n";
  out += "population " + std::to_string(report.population_size) + "\n";
  out += "mutation_rate " + format_double(report.mutation_rate) + "\n";
  for (std::size_t i = 0; i < report.workers.size(); ++i) {
    const auto& w = report.workers[i];
    std::size_t sampled = 0;
    for (auto n : w.sampled_sizes) sampled += n;
    out += "worker " + std::to_string(w.s) + " sampled " + std::to_string(sampled);
    if (w.ok()) {
      out += " score " + format_double(w.result->total);
      if (i < report.deltas.size() && report.deltas[i]) out += " delta_permille " + format_permille(*report.deltas[i]);
    } else {
      out += " failed " + w.error;
    }
    out += "\n";
  }
  out += "winner " + std::to_string(report.winner) + " score " + format_double(report.winner_dag.score) + "\n";
  return out;
}

}  // namespace psminobs
