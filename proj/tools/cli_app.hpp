#pragma once

// psminobs command line: score | learn | compare | info.
// Exit codes: 0 ok, 1 other failure, 2 input parse, 3 resource cap, 4 usage.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "psminobs/psminobs.hpp"

namespace psminobs::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kParse = 2, kCap = 3, kUsage = 4 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::CombinatorialCap:
    case ErrorCode::Overflow:
      return kCap;
    case ErrorCode::InvalidArgument:
      return kUsage;
    case ErrorCode::AllWorkersFailed:
      return kFailure;
    default:
      return kParse;
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ParseError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorCode::ParseError, "error while reading " + path);
  return ss.str();
}

/// Writes every file to a sibling temp file first and renames only once all
/// of them are on disk, so a failure leaves no partial outputs behind.
inline void write_files(const std::vector<std::pair<std::string, std::string>>& files) {
  namespace fs = std::filesystem;
  std::vector<std::pair<fs::path, fs::path>> staged;
  auto discard = [&] {
    std::error_code ec;
    for (const auto& [tmp, dst] : staged) fs::remove(tmp, ec);
  };
  for (const auto& [path, content] : files) {
    fs::path dst(path);
    fs::path tmp = dst;
    tmp += ".tmp" + std::to_string(::getpid());
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (out) staged.emplace_back(tmp, dst);
    out << content;
    out.close();
    if (!out) {
      discard();
      fail(ErrorCode::InvalidArgument, "cannot write " + path);
    }
  }
  for (const auto& [tmp, dst] : staged) {
    std::error_code ec;
    fs::rename(tmp, dst, ec);
    if (ec) {
      discard();
      fail(ErrorCode::InvalidArgument, "cannot write " + dst.string() + ": " + ec.message());
    }
  }
}

struct ScoreArgs {
  std::string config;
  std::string data;
  std::string out;
  std::size_t max_indegree = 3;
  double ess = 1.0;
  bool no_prune = false;
  double cap = 1e8;
  unsigned threads = 1;
  std::string header = "auto";
};

struct LearnArgs {
  std::string config;
  std::string scores;
  std::string algo = "minobs";
  double p = 1.0;
  std::size_t m = 1;
  double sigma = 0.0;
  double time_limit = 60.0;
  std::uint64_t iterations = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  double snapshot_interval = 1800.0;
  std::size_t population = 20;
  double mutation_rate = 0.1;
  double baseline = 0.0;
  std::string out_dag;
  std::string out_csv;
};

struct CompareArgs {
  std::string config;
  std::string baseline;
  std::string run;
  double interval = 1800.0;
  std::string out;
  bool pretty = false;
};

struct InfoArgs {
  std::string config;
  std::vector<std::size_t> cps;
  std::size_t dags = 0;
  std::pair<double, std::size_t> required_m{1.0, 1};
};

struct Parsed {
  ScoreArgs score;
  LearnArgs learn;
  CompareArgs compare;
  InfoArgs info;
  CLI::App* score_cmd = nullptr;
  CLI::App* learn_cmd = nullptr;
  CLI::App* compare_cmd = nullptr;
  CLI::App* info_cmd = nullptr;
};

inline void add_config(CLI::App* sub, std::string& path) {
  sub->add_option("--config", path, "Read key = value defaults from a file ('#' starts a comment); flags override");
}

inline std::unique_ptr<CLI::App> build_app(Parsed& a) {
  auto app = std::make_unique<CLI::App>("Bayesian network structure learning with sampled parallel order search",
                                        "psminobs");
  app->require_subcommand(1);

  auto* sc = app->add_subcommand("score", "Compute BDeu scores of candidate parent sets for a dataset");
  a.score_cmd = sc;
  add_config(sc, a.score.config);
  sc->add_option("data", a.score.data, "Dataset file (rows of integer codes)")->required();
  sc->add_option("--out", a.score.out, "Score file to write (required)");
  sc->add_option("--max-indegree", a.score.max_indegree, "Largest parent set size")->capture_default_str();
  sc->add_option("--ess", a.score.ess, "Equivalent sample size of the BDeu prior")->capture_default_str();
  sc->add_flag("--no-prune", a.score.no_prune, "Keep parent sets dominated by a subset");
  sc->add_option("--cap", a.score.cap, "Refuse to enumerate more sets than this per node")->capture_default_str();
  sc->add_option("--threads", a.score.threads, "Nodes scored concurrently")->capture_default_str();
  sc->add_option("--header", a.score.header, "First lines hold names and arities: auto, yes or no")
      ->check(CLI::IsMember({"auto", "yes", "no"}))
      ->capture_default_str();

  auto* lc = app->add_subcommand("learn", "Search for a high-scoring DAG given a score file");
  a.learn_cmd = lc;
  add_config(lc, a.learn.config);
  lc->add_option("scores", a.learn.scores, "Score file")->required();
  lc->add_option("--algo", a.learn.algo, "Search algorithm: obs, inobs, minobs or ps-minobs")
      ->check(CLI::IsMember({"obs", "inobs", "minobs", "ps-minobs"}))
      ->capture_default_str();
  lc->add_option("--p", a.learn.p, "Sampling rate in (0, 1] (ps-minobs)")->capture_default_str();
  lc->add_option("--m", a.learn.m, "Number of sampled subproblems (ps-minobs)")->capture_default_str();
  lc->add_option("--sigma", a.learn.sigma, "Half-normal sigma for every node (ps-minobs; default 0.5 p N_i)");
  lc->add_option("--threads", a.learn.threads, "Workers run concurrently (ps-minobs; default m)")
      ->envname("PSMINOBS_THREADS");
  lc->add_option("--time-limit", a.learn.time_limit, "Wall-clock budget in seconds")->capture_default_str();
  lc->add_option("--iterations", a.learn.iterations,
                 "Budget in neighbour evaluations per worker instead of seconds (reproducible)");
  lc->add_option("--seed", a.learn.seed, "Random seed")->capture_default_str();
  lc->add_option("--snapshot-interval", a.learn.snapshot_interval,
                 "Best score is recorded every this many budget units (default 1800, capped at the budget)");
  lc->add_option("--population", a.learn.population, "MINOBS population size")->capture_default_str();
  lc->add_option("--mutation-rate", a.learn.mutation_rate, "Per-position mutation probability")
      ->capture_default_str();
  lc->add_option("--baseline", a.learn.baseline, "Reference score S* for relative gaps (ps-minobs)");
  lc->add_option("--out-dag", a.learn.out_dag, "DAG file to write");
  lc->add_option("--out-csv", a.learn.out_csv, "Snapshot CSV to write (worker,elapsed_s,score)");

  auto* cc = app->add_subcommand("compare", "Per-interval relative score gaps between two snapshot CSVs");
  a.compare_cmd = cc;
  add_config(cc, a.compare.config);
  cc->add_option("baseline", a.compare.baseline, "Baseline snapshot CSV")->required();
  cc->add_option("run", a.compare.run, "Snapshot CSV of the run being compared")->required();
  cc->add_option("--interval", a.compare.interval, "Interval length in budget units")->capture_default_str();
  cc->add_option("--out", a.compare.out, "CSV file to write instead of standard output");
  cc->add_flag("--pretty", a.compare.pretty, "Print an aligned table instead of CSV");

  auto* ic = app->add_subcommand("info", "Counting utilities");
  a.info_cmd = ic;
  add_config(ic, a.info.config);
  ic->add_option("--cps", a.info.cps, "n d: candidate parent sets for n nodes and in-degree d")->expected(2);
  ic->add_option("--dags", a.info.dags, "n: number of labelled DAGs on n nodes");
  ic->add_option("--required-m", a.info.required_m, "p n: subsets needed to match the full search space");
  return app;
}

inline int cmd_score(const ScoreArgs& a, std::ostream& out) {
  if (a.out.empty()) fail(ErrorCode::InvalidArgument, "score needs --out");
  DatasetOptions dopts;
  if (a.header == "yes") dopts.header = true;
  if (a.header == "no") dopts.header = false;
  const Dataset data = parse_dataset(read_file(a.data), dopts);

  ScoringConfig cfg;
  cfg.max_indegree = a.max_indegree;
  cfg.ess = a.ess;
  cfg.prune = !a.no_prune;
  cfg.per_node_cap = a.cap;
  cfg.threads = a.threads;
  const ScoreTable table = build_score_table(data, cfg);
  write_files({{a.out, write_score_file(table)}});

  for (std::size_t v = 0; v < table.num_vars; ++v) {
    out << table.var_names[v] << " " << table.tables[v].entries.size() << "\n";
  }
  out << "total " << table.total_entries() << "\n";
  return kOk;
}

inline int cmd_learn(const LearnArgs& a, const Parsed& parsed, std::ostream& out,
                     const std::atomic<bool>* cancel) {
  const CLI::App* lc = parsed.learn_cmd;
  const bool ps = a.algo == "ps-minobs";
  for (const char* flag : {"--p", "--m", "--sigma", "--baseline"}) {
    if (!ps && lc->count(flag) > 0) fail(ErrorCode::InvalidArgument, std::string(flag) + " requires --algo ps-minobs");
  }
  const bool by_iterations = lc->count("--iterations") > 0;
  if (by_iterations && a.iterations == 0) fail(ErrorCode::InvalidArgument, "--iterations must be positive");
  const double budget_limit = by_iterations ? static_cast<double>(a.iterations) : a.time_limit;
  if (!(budget_limit > 0.0)) fail(ErrorCode::InvalidArgument, "--time-limit must be positive");
  double interval = a.snapshot_interval;
  if (lc->count("--snapshot-interval") == 0) interval = std::min(interval, budget_limit);

  const ScoreTable table = parse_score_file(read_file(a.scores));
  const auto started = std::chrono::steady_clock::now();

  SearchConfig search;
  search.population_size = a.population;
  search.mutation_rate = a.mutation_rate;
  search.rng_seed = a.seed;
  search.snapshot_interval = interval;
  search.worker_id = 1;
  validate_search_config(search);
  if (!(interval > 0.0)) fail(ErrorCode::InvalidArgument, "--snapshot-interval must be positive");

  Dag dag;
  std::string csv;
  std::string summary;
  if (ps) {
    RunConfig cfg;
    cfg.sampling.p = a.p;
    if (lc->count("--sigma") > 0) cfg.sampling.sigma = a.sigma;
    cfg.m = a.m;
    cfg.time_limit = a.time_limit;
    if (by_iterations) cfg.iteration_budget = a.iterations;
    cfg.snapshot_interval = interval;
    cfg.base_seed = a.seed;
    cfg.threads = a.threads;
    cfg.search = search;
    cfg.cancel = cancel;
    RunReport report = ps_minobs(table, cfg);
    if (lc->count("--baseline") > 0) attach_baseline(report, a.baseline);
    dag = report.winner_dag;
    csv = write_report_csv(report);
    summary = write_report_summary(report);
  } else {
    Budget budget = by_iterations ? Budget::iterations(a.iterations) : Budget::wall_clock(a.time_limit);
    budget.with_cancel(cancel);
    std::vector<Snapshot> snaps;
    auto sink = [&snaps](const Snapshot& s) { snaps.push_back(s); };
    OrderingEvaluation ev;
    if (a.algo == "obs") {
      ev = obs_search(table, search, budget, sink);
    } else if (a.algo == "inobs") {
      ev = inobs_search(table, search, budget, sink);
    } else {
      ev = minobs_search(table, search, budget, sink);
    }
    dag = ev.to_dag();
    csv = write_snapshots_csv(snaps);
  }

  std::vector<std::pair<std::string, std::string>> files;
  if (!a.out_dag.empty()) files.emplace_back(a.out_dag, write_dag(dag, table.var_names));
  if (!a.out_csv.empty()) files.emplace_back(a.out_csv, csv);
  write_files(files);

  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  out << summary;
  out << "score " << format_double(dag.score) << "\n";
  out << "elapsed_s " << format_double(elapsed) << "\n";
  if (a.out_dag.empty()) out << write_dag(dag, table.var_names);
  return kOk;
}

inline int cmd_compare(const CompareArgs& a, std::ostream& out) {
  const auto baseline = parse_snapshots_csv(read_file(a.baseline));
  const auto run = parse_snapshots_csv(read_file(a.run));
  const DeltaTable table = compare_runs(baseline, run, a.interval);
  const std::string text = a.pretty ? format_delta_table(table) : write_delta_csv(table);
  if (a.out.empty()) {
    out << text;
  } else {
    write_files({{a.out, text}});
  }
  return kOk;
}

inline int cmd_info(const InfoArgs& a, const Parsed& parsed, std::ostream& out) {
  const CLI::App* ic = parsed.info_cmd;
  if (ic->count("--cps") + ic->count("--dags") + ic->count("--required-m") == 0) {
    fail(ErrorCode::InvalidArgument, "info needs --cps, --dags or --required-m");
  }
  if (ic->count("--cps") > 0) {
    const BigInt v = max_cps_count(a.cps[0], a.cps[1]);
    const SigFigs r = round_significant(v, 3);
    std::string m = std::to_string(r.mantissa);
    m.insert(1, ".");
    out << "cps " << v.str() << " (" << m << " x 10^" << r.exponent << ")\n";
  }
  if (ic->count("--dags") > 0) {
    out << "dags " << count_dags(a.dags).str() << "\n";
  }
  if (ic->count("--required-m") > 0) {
    const RequiredM r = required_m(a.required_m.first, a.required_m.second);
    out << "required_m " << (r.saturated ? std::string("inf") : format_double(r.value)) << "\n";
  }
  return kOk;
}

/// Extra arguments for every `key = value` line of the subcommand's config
/// file whose option was not given on the command line.
inline std::vector<std::string> config_arguments(const CLI::App& sub, const std::string& text) {
  std::vector<std::string> extra;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  auto trim = [](std::string v) {
    const auto b = v.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return v.substr(b, v.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, line)) {
    ++number;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::ParseError, "config line " + std::to_string(number) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    const CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config" || key == "help") {
      fail(ErrorCode::InvalidArgument, "config line " + std::to_string(number) + ": unknown key " + key);
    }
    if (opt->count() > 0) continue;
    if (opt->get_expected_max() == 0) {
      if (value == "true" || value == "1" || value == "yes") extra.push_back("--" + key);
      else if (!(value == "false" || value == "0" || value == "no")) {
        fail(ErrorCode::ParseError, "config line " + std::to_string(number) + ": expected true or false");
      }
      continue;
    }
    extra.push_back("--" + key);
    std::istringstream words(value);
    for (std::string w; words >> w;) extra.push_back(w);
  }
  return extra;
}

/// args excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                   const std::atomic<bool>* cancel = nullptr) {
  Parsed parsed;
  auto app = build_app(parsed);
  auto parse = [&](const std::vector<std::string>& argv) -> std::optional<int> {
    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    try {
      app->parse(reversed);
    } catch (const CLI::ParseError& e) {
      const int rc = app->exit(e, out, err);
      return rc == 0 ? kOk : kUsage;
    }
    return std::nullopt;
  };
  if (auto rc = parse(args)) return *rc;
  try {
    for (CLI::App* sub : {parsed.score_cmd, parsed.learn_cmd, parsed.compare_cmd, parsed.info_cmd}) {
      if (!*sub || sub->count("--config") == 0) continue;
      const std::string path = sub->get_option("--config")->as<std::string>();
      std::vector<std::string> full = args;
      for (auto& x : config_arguments(*sub, read_file(path))) full.push_back(std::move(x));
      parsed = Parsed{};
      app = build_app(parsed);
      if (auto rc = parse(full)) return *rc;
      break;
    }
    if (*parsed.score_cmd) return cmd_score(parsed.score, out);
    if (*parsed.learn_cmd) return cmd_learn(parsed.learn, parsed, out, cancel);
    if (*parsed.compare_cmd) return cmd_compare(parsed.compare, out);
    if (*parsed.info_cmd) return cmd_info(parsed.info, parsed, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace psminobs::cli
