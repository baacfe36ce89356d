#pragma once

// Order-based structure search. Given an ordering, every node takes the
// highest-ranked candidate parent set whose members all precede it; the
// structure built that way is acyclic by construction and optimal for the
// ordering. The searches below move through ordering space:
//   OBS    hill climbing with swap-adjacent moves, restarts and a tabu list
//   INOBS  hill climbing with insert moves
//   MINOBS a memetic population of INOBS-optimised orderings

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "psminobs/budget.hpp"
#include "psminobs/core_model.hpp"

namespace psminobs {

using Rng = std::mt19937_64;

struct OrderingEvaluation {
  Ordering ordering;
  std::vector<ScoredParentSet> chosen;  // indexed by node
  double total = 0.0;

  Dag to_dag() const {
    Dag dag;
    dag.parents.reserve(chosen.size());
    for (const auto& c : chosen) dag.parents.push_back(c.parents);
    dag.score = total;
    return dag;
  }
};

struct SearchConfig {
  std::size_t population_size = 20;
  double mutation_rate = 0.1;
  // Keep restarting (OBS / INOBS) or breeding (MINOBS) until the budget ends.
  bool restarts = true;
  // 0 means "number of nodes".
  std::size_t tabu_tenure = 0;
  std::uint64_t rng_seed = 0;
  double snapshot_interval = 1800.0;
  std::size_t worker_id = 0;
  // Seeds the MINOBS population instead of random orderings when non-empty.
  std::vector<Ordering> initial_population;
};

inline void validate_search_config(const SearchConfig& cfg) {
  if (cfg.population_size < 2) fail(ErrorCode::InvalidArgument, "population size must be at least 2");
  if (!(cfg.mutation_rate >= 0.0 && cfg.mutation_rate <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "mutation rate must lie in [0, 1]");
  }
}

namespace detail {

// Index of the first entry whose parents all sit before `node_pos`.
inline std::size_t first_consistent(const NodeScoreTable& table, const std::vector<std::size_t>& pos,
                                    std::size_t node_pos, std::size_t limit) {
  for (std::size_t k = 0; k < limit; ++k) {
    bool ok = true;
    for (NodeId p : table.entries[k].parents.members) {
      if (pos[p] >= node_pos) {
        ok = false;
        break;
      }
    }
    if (ok) return k;
  }
  return limit;
}

}  // namespace detail

/// Best-ranked parent set of `node` drawn only from its predecessors in `o`.
inline ScoredParentSet consistent_best_parents(const Ordering& o, NodeId node, const NodeScoreTable& table) {
  const auto pos = o.positions();
  const std::size_t k = detail::first_consistent(table, pos, pos[node], table.entries.size());
  if (k == table.entries.size()) fail(ErrorCode::MissingEmptySet, "no consistent parent set");
  return table.entries[k];
}

inline OrderingEvaluation ordering_score(const Ordering& o, const ScoreTable& table) {
  if (o.size() != table.num_vars || !o.is_permutation()) {
    fail(ErrorCode::InvalidArgument, "ordering is not a permutation of the table's nodes");
  }
  const auto pos = o.positions();
  OrderingEvaluation ev{o, std::vector<ScoredParentSet>(o.size()), 0.0};
  for (NodeId v = 0; v < o.size(); ++v) {
    const auto& t = table.tables[v];
    const std::size_t k = detail::first_consistent(t, pos, pos[v], t.entries.size());
    if (k == t.entries.size()) fail(ErrorCode::MissingEmptySet, "no consistent parent set");
    ev.chosen[v] = t.entries[k];
  }
  for (const auto& c : ev.chosen) ev.total += c.score;
  return ev;
}

inline Ordering swap_adjacent(Ordering o, std::size_t i) {
  if (i + 1 >= o.size()) fail(ErrorCode::InvalidIndex, "swap position out of range");
  std::swap(o.sequence[i], o.sequence[i + 1]);
  return o;
}

inline Ordering insert_move(Ordering o, std::size_t from, std::size_t to) {
  if (from >= o.size() || to >= o.size()) fail(ErrorCode::InvalidIndex, "insert position out of range");
  auto& s = o.sequence;
  if (from < to) {
    std::rotate(s.begin() + from, s.begin() + from + 1, s.begin() + to + 1);
  } else if (to < from) {
    std::rotate(s.begin() + to, s.begin() + from, s.begin() + from + 1);
  }
  return o;
}

/// Mutable ordering plus the chosen parent set of every node, updated
/// incrementally. The choice of a node depends only on its predecessor set,
/// so the state after any sequence of moves equals a fresh evaluation.
class OrderState {
 public:
  OrderState(const ScoreTable& table, const Ordering& o) : table_(&table) { reset(o); }

  void reset(const Ordering& o) {
    if (o.size() != table_->num_vars || !o.is_permutation()) {
      fail(ErrorCode::InvalidArgument, "ordering is not a permutation of the table's nodes");
    }
    order_ = o.sequence;
    pos_ = o.positions();
    choice_.assign(order_.size(), 0);
    for (NodeId v = 0; v < order_.size(); ++v) recompute(v);
    refresh_total();
  }

  std::size_t size() const { return order_.size(); }
  double total() const { return total_; }
  NodeId at(std::size_t position) const { return order_[position]; }
  std::size_t position_of(NodeId v) const { return pos_[v]; }
  double local(NodeId v) const { return table_->tables[v].entries[choice_[v]].score; }

  /// Swaps positions i and i+1; returns the change in total score.
  double swap(std::size_t i) {
    const NodeId a = order_[i];
    const NodeId b = order_[i + 1];
    const double before = local(a) + local(b);
    std::swap(order_[i], order_[i + 1]);
    pos_[a] = i + 1;
    pos_[b] = i;
    lost_predecessor(b, a);
    gained_predecessor(a);
    const double delta = local(a) + local(b) - before;
    total_ += delta;
    return delta;
  }

  /// Moves the node at `from` to `to`, refreshing only nodes in between.
  double insert(std::size_t from, std::size_t to) {
    if (from == to) return 0.0;
    const std::size_t lo = std::min(from, to);
    const std::size_t hi = std::max(from, to);
    double before = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) before += local(order_[k]);

    const NodeId x = order_[from];
    if (from < to) {
      std::rotate(order_.begin() + from, order_.begin() + from + 1, order_.begin() + to + 1);
    } else {
      std::rotate(order_.begin() + to, order_.begin() + from, order_.begin() + from + 1);
    }
    for (std::size_t k = lo; k <= hi; ++k) pos_[order_[k]] = k;

    for (std::size_t k = lo; k <= hi; ++k) {
      const NodeId v = order_[k];
      if (v == x) {
        recompute(v);
      } else if (from < to) {
        lost_predecessor(v, x);
      } else {
        gained_predecessor(v);
      }
    }
    double after = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) after += local(order_[k]);
    total_ += after - before;
    return after - before;
  }

  /// Re-sums local scores to discard accumulated rounding from deltas.
  void refresh_total() {
    total_ = 0.0;
    for (NodeId v = 0; v < order_.size(); ++v) total_ += local(v);
  }

  Ordering ordering() const { return Ordering{order_}; }

  OrderingEvaluation evaluation() const {
    OrderingEvaluation ev{ordering(), std::vector<ScoredParentSet>(order_.size()), 0.0};
    for (NodeId v = 0; v < order_.size(); ++v) ev.chosen[v] = table_->tables[v].entries[choice_[v]];
    for (const auto& c : ev.chosen) ev.total += c.score;
    return ev;
  }

 private:
  void recompute(NodeId v) {
    const auto& t = table_->tables[v];
    const std::size_t k = detail::first_consistent(t, pos_, pos_[v], t.entries.size());
    if (k == t.entries.size()) fail(ErrorCode::MissingEmptySet, "no consistent parent set");
    choice_[v] = k;
  }

  // Only a choice that used `gone` can be invalidated by losing it.
  void lost_predecessor(NodeId v, NodeId gone) {
    if (table_->tables[v].entries[choice_[v]].parents.contains(gone)) recompute(v);
  }

  // A new predecessor can only promote entries ranked above the current one.
  void gained_predecessor(NodeId v) {
    const auto& t = table_->tables[v];
    const std::size_t k = detail::first_consistent(t, pos_, pos_[v], choice_[v]);
    if (k < choice_[v]) choice_[v] = k;
  }

  const ScoreTable* table_;
  std::vector<NodeId> order_;
  std::vector<std::size_t> pos_;
  std::vector<std::size_t> choice_;
  double total_ = 0.0;
};

inline Ordering random_ordering(std::size_t n, Rng& rng) {
  Ordering o = Ordering::identity(n);
  std::shuffle(o.sequence.begin(), o.sequence.end(), rng);
  return o;
}

namespace detail {

constexpr double kImprovementEps = 1e-9;

using ProgressHook = std::function<void(double)>;

// Hill climbing over insert moves. For each node (random order per pass) the
// node is walked through every position by adjacent swaps, and moved to the
// best position if that strictly improves the total. Stops at a fixed point
// or when the budget runs out.
inline void inobs_climb(OrderState& state, Budget& budget, Rng& rng, const ProgressHook& progress) {
  const std::size_t n = state.size();
  if (n < 2) return;
  std::vector<NodeId> scan(n);
  for (NodeId v = 0; v < n; ++v) scan[v] = v;

  bool improved = true;
  while (improved) {
    improved = false;
    std::shuffle(scan.begin(), scan.end(), rng);
    for (NodeId x : scan) {
      const std::size_t origin = state.position_of(x);
      std::size_t cur = origin;
      double cumulative = 0.0;
      double best_delta = 0.0;
      std::size_t best_pos = origin;
      bool out_of_budget = false;

      // Leftwards to 0, then rightwards to n-1.
      while (cur > 0) {
        if (budget.exhausted()) {
          out_of_budget = true;
          break;
        }
        budget.charge();
        cumulative += state.swap(cur - 1);
        --cur;
        if (cumulative > best_delta) {
          best_delta = cumulative;
          best_pos = cur;
        }
      }
      while (!out_of_budget && cur + 1 < n) {
        if (budget.exhausted()) {
          out_of_budget = true;
          break;
        }
        budget.charge();
        cumulative += state.swap(cur);
        ++cur;
        if (cur > origin && cumulative > best_delta) {
          best_delta = cumulative;
          best_pos = cur;
        }
      }

      const std::size_t target = best_delta > kImprovementEps ? best_pos : origin;
      state.insert(cur, target);
      state.refresh_total();
      if (target != origin) {
        improved = true;
        if (progress) progress(state.total());
      }
      if (out_of_budget) return;
    }
  }
}

}  // namespace detail

/// INOBS from `start`; the result never scores below the start.
inline OrderingEvaluation inobs_local_search(const Ordering& start, const ScoreTable& table, Budget& budget,
                                             Rng& rng) {
  OrderState state(table, start);
  detail::inobs_climb(state, budget, rng, {});
  return state.evaluation();
}

/// Order crossover keeping a[lo..hi] in place; remaining positions take
/// b's other elements in b's relative order, filled left to right.
inline Ordering crossover_with_slice(const Ordering& a, const Ordering& b, std::size_t lo, std::size_t hi) {
  const std::size_t n = a.size();
  if (b.size() != n) fail(ErrorCode::InvalidArgument, "crossover parents differ in length");
  if (n == 0) return a;
  if (lo > hi || hi >= n) fail(ErrorCode::InvalidIndex, "crossover slice out of range");
  Ordering child;
  child.sequence.assign(n, 0);
  std::vector<char> taken(n, 0);
  for (std::size_t k = lo; k <= hi; ++k) {
    child.sequence[k] = a.sequence[k];
    taken[a.sequence[k]] = 1;
  }
  std::size_t write = 0;
  for (NodeId v : b.sequence) {
    if (taken[v]) continue;
    while (write >= lo && write <= hi) ++write;
    child.sequence[write++] = v;
  }
  return child;
}

inline Ordering crossover(const Ordering& a, const Ordering& b, Rng& rng) {
  if (b.size() != a.size()) fail(ErrorCode::InvalidArgument, "crossover parents differ in length");
  if (a.size() == 0) return a;
  std::uniform_int_distribution<std::size_t> pick(0, a.size() - 1);
  std::size_t lo = pick(rng);
  std::size_t hi = pick(rng);
  if (lo > hi) std::swap(lo, hi);
  return crossover_with_slice(a, b, lo, hi);
}

/// Each position is picked with probability `rate`; the node there is
/// reinserted at a uniformly random position.
inline Ordering mutate(Ordering o, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) fail(ErrorCode::InvalidArgument, "mutation rate must lie in [0, 1]");
  const std::size_t n = o.size();
  if (n < 2 || rate == 0.0) return o;
  std::bernoulli_distribution pick(rate);
  std::uniform_int_distribution<std::size_t> where(0, n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (pick(rng)) o = insert_move(std::move(o), i, where(rng));
  }
  return o;
}

namespace detail {

inline bool better(const OrderingEvaluation& a, const OrderingEvaluation& b) {
  if (a.total != b.total) return a.total > b.total;
  return a.ordering.sequence < b.ordering.sequence;
}

}  // namespace detail

/// Repeated INOBS from random orderings until the budget ends (a single
/// climb when restarts are off).
inline OrderingEvaluation inobs_search(const ScoreTable& table, const SearchConfig& cfg, Budget budget,
                                       const SnapshotSink& sink = {}) {
  Rng rng(cfg.rng_seed);
  SnapshotClock clock(cfg.snapshot_interval, sink, cfg.worker_id);
  std::optional<OrderingEvaluation> best;
  double best_seen = -std::numeric_limits<double>::infinity();
  // Boundaries already crossed are reported with the best seen before this
  // improvement.
  auto progress = [&](double total) {
    clock.poll(budget, best_seen);
    best_seen = std::max(best_seen, total);
  };
  do {
    OrderState state(table, random_ordering(table.num_vars, rng));
    budget.charge();
    progress(state.total());
    detail::inobs_climb(state, budget, rng, progress);
    auto ev = state.evaluation();
    progress(ev.total);
    if (!best || detail::better(ev, *best)) best = std::move(ev);
  } while (cfg.restarts && !budget.exhausted());
  clock.finish(budget, best->total);
  return *best;
}

/// Swap-adjacent hill climbing with a tabu list on swapped node pairs and
/// random restarts after `n` consecutive non-improving moves.
inline OrderingEvaluation obs_search(const ScoreTable& table, const SearchConfig& cfg, Budget budget,
                                     const SnapshotSink& sink = {}) {
  const std::size_t n = table.num_vars;
  Rng rng(cfg.rng_seed);
  SnapshotClock clock(cfg.snapshot_interval, sink, cfg.worker_id);
  const std::size_t tenure = cfg.tabu_tenure == 0 ? n : cfg.tabu_tenure;

  OrderState state(table, random_ordering(n, rng));
  budget.charge();
  clock.poll(budget, -std::numeric_limits<double>::infinity());
  OrderingEvaluation best = state.evaluation();
  if (n < 2) {
    clock.finish(budget, best.total);
    return best;
  }

  std::vector<std::pair<NodeId, NodeId>> tabu;  // most recent last
  std::size_t stale = 0;
  double climb_best = state.total();
  auto is_tabu = [&](NodeId a, NodeId b) {
    if (a > b) std::swap(a, b);
    return std::find(tabu.begin(), tabu.end(), std::make_pair(a, b)) != tabu.end();
  };

  while (!budget.exhausted()) {
    double best_delta = -std::numeric_limits<double>::infinity();
    std::size_t best_i = n;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (budget.exhausted()) break;
      budget.charge();
      const double delta = state.swap(i);
      state.swap(i);
      const bool aspiration = state.total() + delta > best.total + detail::kImprovementEps;
      if ((aspiration || !is_tabu(state.at(i), state.at(i + 1))) && delta > best_delta) {
        best_delta = delta;
        best_i = i;
      }
    }
    state.refresh_total();
    if (best_i == n) break;

    NodeId a = state.at(best_i);
    NodeId b = state.at(best_i + 1);
    state.swap(best_i);
    state.refresh_total();
    if (a > b) std::swap(a, b);
    tabu.emplace_back(a, b);
    if (tabu.size() > tenure) tabu.erase(tabu.begin());

    if (state.total() > climb_best + detail::kImprovementEps) {
      climb_best = state.total();
      stale = 0;
    } else {
      ++stale;
    }
    clock.poll(budget, best.total);
    if (state.total() > best.total + detail::kImprovementEps) best = state.evaluation();

    if (stale >= n) {
      if (!cfg.restarts) break;
      state.reset(random_ordering(n, rng));
      budget.charge();
      clock.poll(budget, best.total);
      tabu.clear();
      stale = 0;
      climb_best = state.total();
      if (state.total() > best.total + detail::kImprovementEps) best = state.evaluation();
    }
  }
  clock.finish(budget, best.total);
  return best;
}

/// Memetic INOBS: a population of locally optimal orderings is extended
/// each generation with INOBS-optimised offspring (crossover + mutation) and
/// truncated back to its size by total score.
inline OrderingEvaluation minobs_search(const ScoreTable& table, const SearchConfig& cfg, Budget budget,
                                        const SnapshotSink& sink = {}) {
  validate_search_config(cfg);
  const std::size_t n = table.num_vars;
  Rng rng(cfg.rng_seed);
  SnapshotClock clock(cfg.snapshot_interval, sink, cfg.worker_id);

  double best_seen = -std::numeric_limits<double>::infinity();
  // Boundaries already crossed are reported with the best seen before this
  // improvement.
  auto progress = [&](double total) {
    clock.poll(budget, best_seen);
    best_seen = std::max(best_seen, total);
  };

  auto optimise = [&](const Ordering& o) {
    OrderState state(table, o);
    budget.charge();
    progress(state.total());
    detail::inobs_climb(state, budget, rng, progress);
    auto ev = state.evaluation();
    progress(ev.total);
    return ev;
  };

  std::vector<OrderingEvaluation> population;
  population.reserve(cfg.population_size * 2);
  for (std::size_t k = 0; k < cfg.population_size; ++k) {
    Ordering start = k < cfg.initial_population.size() ? cfg.initial_population[k] : random_ordering(n, rng);
    if (budget.exhausted() && !population.empty()) break;
    population.push_back(optimise(start));
  }

  auto keep_best = [&] {
    std::sort(population.begin(), population.end(), detail::better);
    population.erase(std::unique(population.begin(), population.end(),
                                 [](const auto& x, const auto& y) { return x.ordering == y.ordering; }),
                     population.end());
    if (population.size() > cfg.population_size) population.resize(cfg.population_size);
  };
  keep_best();
  OrderingEvaluation best = population.front();

  while (cfg.restarts && !budget.exhausted()) {
    const std::size_t parents = population.size();
    std::uniform_int_distribution<std::size_t> pick(0, parents - 1);
    std::vector<OrderingEvaluation> offspring;
    for (std::size_t k = 0; k < cfg.population_size && !budget.exhausted(); ++k) {
      const std::size_t ia = pick(rng);
      std::size_t ib = pick(rng);
      if (parents > 1) {
        while (ib == ia) ib = pick(rng);
      }
      Ordering child = crossover(population[ia].ordering, population[ib].ordering, rng);
      child = mutate(std::move(child), cfg.mutation_rate, rng);
      offspring.push_back(optimise(child));
    }
    for (auto& o : offspring) population.push_back(std::move(o));
    keep_best();
    if (detail::better(population.front(), best)) best = population.front();
  }
  clock.finish(budget, best.total);
  return best;
}

}  // namespace psminobs
