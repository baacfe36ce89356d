#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace psminobs;

namespace {

double best_over_orderings(const ScoreTable& t) {
  Ordering o = Ordering::identity(t.num_vars);
  double best = -std::numeric_limits<double>::infinity();
  do {
    best = std::max(best, ordering_score(o, t).total);
  } while (std::next_permutation(o.sequence.begin(), o.sequence.end()));
  return best;
}

bool is_insert_local_optimum(const Ordering& o, const ScoreTable& t) {
  const double base = ordering_score(o, t).total;
  for (std::size_t i = 0; i < o.size(); ++i) {
    for (std::size_t j = 0; j < o.size(); ++j) {
      if (ordering_score(insert_move(o, i, j), t).total > base + 1e-9) return false;
    }
  }
  return true;
}

}  // namespace

TEST(ConsistentBestParents, PublishedTableExamples) {
  using namespace fixtures;
  const auto t = asia_score_table(true);
  // Tub first: Asia may use {Tub}.
  Ordering o{{kTub, kAsia, kSmoke, kLung}};
  EXPECT_EQ(consistent_best_parents(o, kAsia, t.tables[kAsia]).parents, ParentSet({kTub}));
  EXPECT_EQ(consistent_best_parents(o, kTub, t.tables[kTub]).parents, ParentSet{});
  EXPECT_EQ(consistent_best_parents(o, kLung, t.tables[kLung]).parents, ParentSet({kTub, kSmoke}));
  // Asia first: only the empty set.
  Ordering first{{kAsia, kTub, kSmoke, kLung}};
  EXPECT_EQ(consistent_best_parents(first, kAsia, t.tables[kAsia]).score, -2.531);
}

TEST(OrderingScore, ChoicesFormAnAcyclicConsistentDag) {
  fixtures::Gen g(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = fixtures::random_score_table(g, 6, 3);
    Rng rng(trial);
    const Ordering o = random_ordering(6, rng);
    const auto ev = ordering_score(o, t);
    const auto pos = o.positions();
    double sum = 0.0;
    for (NodeId v = 0; v < 6; ++v) {
      for (NodeId p : ev.chosen[v].parents.members) EXPECT_LT(pos[p], pos[v]);
      sum += ev.chosen[v].score;
    }
    EXPECT_EQ(ev.total, sum);
    EXPECT_TRUE(check_acyclic(ev.to_dag()));
  }
}

TEST(OrderingScore, MaxOverOrderingsIsTheDagOptimum) {
  fixtures::Gen g(23);
  for (int trial = 0; trial < 30; ++trial) {
    const auto t = fixtures::random_score_table(g, fixtures::uniform(g, 1, 5), 3);
    EXPECT_NEAR(best_over_orderings(t), oracles::exhaustive_best_dag(t), 1e-9);
  }
}

TEST(OrderingScore, RejectsNonPermutations) {
  const auto t = fixtures::asia_score_table();
  EXPECT_THROW(ordering_score(Ordering{{0, 1, 2}}, t), Error);
  EXPECT_THROW(ordering_score(Ordering{{0, 1, 1, 2}}, t), Error);
}

TEST(Moves, SwapAndInsert) {
  const Ordering o{{0, 1, 2, 3, 4}};
  EXPECT_EQ(swap_adjacent(o, 1).sequence, (std::vector<NodeId>{0, 2, 1, 3, 4}));
  EXPECT_EQ(swap_adjacent(swap_adjacent(o, 3), 3), o);
  EXPECT_EQ(insert_move(o, 1, 3).sequence, (std::vector<NodeId>{0, 2, 3, 1, 4}));
  EXPECT_EQ(insert_move(o, 3, 0).sequence, (std::vector<NodeId>{3, 0, 1, 2, 4}));
  EXPECT_EQ(insert_move(o, 2, 2), o);
  EXPECT_THROW(swap_adjacent(o, 4), Error);
  EXPECT_THROW(insert_move(o, 5, 0), Error);
}

TEST(OrderState, IncrementalMatchesFreshEvaluation) {
  fixtures::Gen g(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = fixtures::uniform(g, 2, 9);
    const auto t = fixtures::random_score_table(g, n, 3, 0.5);
    Rng rng(trial);
    Ordering ref = random_ordering(n, rng);
    OrderState state(t, ref);
    for (int step = 0; step < 200; ++step) {
      const double before = state.total();
      double delta;
      if (step % 2 == 0) {
        const std::size_t i = fixtures::uniform(g, 0, n - 2);
        delta = state.swap(i);
        ref = swap_adjacent(ref, i);
      } else {
        const std::size_t a = fixtures::uniform(g, 0, n - 1);
        const std::size_t b = fixtures::uniform(g, 0, n - 1);
        delta = state.insert(a, b);
        ref = insert_move(ref, a, b);
      }
      const auto fresh = ordering_score(ref, t);
      ASSERT_EQ(state.ordering(), ref);
      ASSERT_EQ(state.evaluation().chosen, fresh.chosen);
      EXPECT_NEAR(before + delta, fresh.total, 1e-9);
    }
  }
}

TEST(Crossover, KeepsSliceAndPermutation) {
  const Ordering a{{0, 1, 2, 3, 4, 5, 6}};
  const Ordering b{{6, 5, 4, 3, 2, 1, 0}};
  const Ordering c = crossover_with_slice(a, b, 2, 4);
  EXPECT_EQ(c.sequence, (std::vector<NodeId>{6, 5, 2, 3, 4, 1, 0}));
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const Ordering x = random_ordering(9, rng);
    const Ordering y = random_ordering(9, rng);
    EXPECT_TRUE(crossover(x, y, rng).is_permutation());
    EXPECT_EQ(crossover(x, x, rng), x);
  }
}

TEST(Mutate, RateZeroIsIdentityAndAlwaysPermutation) {
  Rng rng(4);
  const Ordering o = random_ordering(12, rng);
  EXPECT_EQ(mutate(o, 0.0, rng), o);
  for (int k = 0; k < 50; ++k) EXPECT_TRUE(mutate(o, 0.5, rng).is_permutation());
  bool changed = false;
  for (int k = 0; k < 20 && !changed; ++k) changed = !(mutate(o, 1.0, rng) == o);
  EXPECT_TRUE(changed);
}

TEST(Inobs, NeverWorseAndEndsAtInsertOptimum) {
  fixtures::Gen g(41);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = fixtures::random_score_table(g, 7, 2, 0.5);
    Rng rng(trial);
    const Ordering start = random_ordering(7, rng);
    Budget budget = Budget::unlimited_iterations();
    const auto ev = inobs_local_search(start, t, budget, rng);
    EXPECT_GE(ev.total, ordering_score(start, t).total);
    EXPECT_TRUE(is_insert_local_optimum(ev.ordering, t));
    EXPECT_EQ(ev.total, ordering_score(ev.ordering, t).total);
  }
}

TEST(Inobs, RespectsIterationBudget) {
  fixtures::Gen g(43);
  const auto t = fixtures::random_score_table(g, 8, 2);
  Rng rng(1);
  Budget budget = Budget::iterations(5);
  inobs_local_search(random_ordering(8, rng), t, budget, rng);
  EXPECT_LE(budget.units_used(), 5u);
}

TEST(Searches, DeterministicForFixedSeedAndBudget) {
  fixtures::Gen g(47);
  const auto t = fixtures::random_score_table(g, 10, 2);
  SearchConfig cfg;
  cfg.rng_seed = 99;
  cfg.snapshot_interval = 100;
  cfg.population_size = 6;
  auto run = [&](auto search) {
    std::vector<Snapshot> snaps;
    auto ev = search(t, cfg, Budget::iterations(3000), [&](const Snapshot& s) { snaps.push_back(s); });
    return std::make_pair(ev.ordering, snaps);
  };
  auto minobs = [](auto&&... a) { return minobs_search(a...); };
  auto inobs = [](auto&&... a) { return inobs_search(a...); };
  auto obs = [](auto&&... a) { return obs_search(a...); };
  EXPECT_EQ(run(minobs), run(minobs));
  EXPECT_EQ(run(inobs), run(inobs));
  EXPECT_EQ(run(obs), run(obs));
}

TEST(Searches, SnapshotsAreMonotoneAndEndAtResult) {
  fixtures::Gen g(53);
  const auto t = fixtures::random_score_table(g, 12, 2);
  SearchConfig cfg;
  cfg.rng_seed = 5;
  cfg.snapshot_interval = 250;
  cfg.population_size = 4;
  for (int algo = 0; algo < 3; ++algo) {
    std::vector<Snapshot> snaps;
    auto sink = [&](const Snapshot& s) { snaps.push_back(s); };
    const Budget budget = Budget::iterations(2000);
    OrderingEvaluation ev = algo == 0   ? minobs_search(t, cfg, budget, sink)
                            : algo == 1 ? inobs_search(t, cfg, budget, sink)
                                        : obs_search(t, cfg, budget, sink);
    ASSERT_FALSE(snaps.empty());
    for (std::size_t k = 1; k < snaps.size(); ++k) {
      EXPECT_GE(snaps[k].score, snaps[k - 1].score);
      EXPECT_GT(snaps[k].elapsed, snaps[k - 1].elapsed);
    }
    EXPECT_EQ(snaps.back().score, ev.total);
    EXPECT_LE(snaps.back().elapsed, 2000.0 + 1.0);
    EXPECT_EQ(ev.total, ordering_score(ev.ordering, t).total);
    // Boundary snapshots at each multiple of the interval.
    for (std::size_t k = 0; k + 1 < snaps.size() && k < 7; ++k) {
      EXPECT_EQ(snaps[k].elapsed, 250.0 * static_cast<double>(k + 1));
    }
  }
}

TEST(Minobs, FindsOptimumOnSmallTables) {
  fixtures::Gen g(59);
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = fixtures::random_score_table(g, 6, 3);
    SearchConfig cfg;
    cfg.rng_seed = trial;
    cfg.population_size = 8;
    const auto ev = minobs_search(t, cfg, Budget::iterations(20000));
    EXPECT_NEAR(ev.total, oracles::exhaustive_best_dag(t), 1e-9);
  }
}

TEST(Minobs, InitialPopulationIsUsed) {
  const auto t = fixtures::asia_score_table(true);
  SearchConfig cfg;
  cfg.restarts = false;
  cfg.population_size = 2;
  cfg.initial_population = {Ordering{{1, 3, 2, 0}}, Ordering{{1, 3, 2, 0}}};
  const auto ev = minobs_search(t, cfg, Budget::unlimited_iterations());
  EXPECT_NEAR(ev.total, oracles::exhaustive_best_dag(t), 1e-9);
}

TEST(SearchConfig, Validation) {
  SearchConfig cfg;
  cfg.population_size = 1;
  EXPECT_THROW(validate_search_config(cfg), Error);
  cfg.population_size = 4;
  cfg.mutation_rate = 1.5;
  EXPECT_THROW(validate_search_config(cfg), Error);
}
