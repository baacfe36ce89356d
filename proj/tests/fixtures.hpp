#pragma once

// Published reference values and synthetic data generators shared by the
// unit tests and the acceptance binary.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "psminobs/psminobs.hpp"

namespace fixtures {

using namespace psminobs;

// ---------------------------------------------------------------- counts

struct CpsCell {
  std::size_t n;
  std::size_t d;
  std::uint64_t mantissa;  // three significant figures
  int exponent;
};

// Candidate parent set totals by node count and maximum in-degree.
inline const std::vector<CpsCell>& cps_table() {
  static const std::vector<CpsCell> cells = {
      {10, 1, 100, 2},     {10, 2, 460, 2},     {10, 3, 130, 3},     {10, 4, 256, 3},     {10, 5, 382, 3},
      {50, 1, 250, 3},     {50, 2, 613, 4},     {50, 3, 983, 5},     {50, 4, 116, 7},     {50, 5, 107, 8},
      {100, 1, 100, 4},    {100, 2, 495, 5},    {100, 3, 162, 7},    {100, 4, 393, 8},    {100, 5, 754, 9},
      {500, 1, 250, 5},    {500, 2, 624, 7},    {500, 3, 104, 10},   {500, 4, 129, 12},   {500, 5, 128, 14},
      {1000, 1, 100, 6},   {1000, 2, 499, 8},   {1000, 3, 166, 11},  {1000, 4, 414, 13},  {1000, 5, 825, 15},
      {5000, 1, 250, 7},   {5000, 2, 625, 10},  {5000, 3, 104, 14},  {5000, 4, 130, 17},  {5000, 5, 129, 20},
      {10000, 1, 100, 8},  {10000, 2, 499, 11}, {10000, 3, 167, 15}, {10000, 4, 416, 18}, {10000, 5, 833, 21},
  };
  return cells;
}

// ---------------------------------------------------------- pruning table

enum AsiaNode : NodeId { kAsia = 0, kTub = 1, kSmoke = 2, kLung = 3 };

struct PublishedEntry {
  NodeId node;
  std::vector<NodeId> parents;
  double score;
  bool retained;
};

// Four Asia-network variables, sample size 50, in-degree 3; `retained`
// marks the sets that survive subset-dominance pruning.
inline const std::vector<PublishedEntry>& asia_entries() {
  static const std::vector<PublishedEntry> e = {
      {kAsia, {}, -2.531, true},
      {kAsia, {kTub}, -2.381, true},
      {kAsia, {kLung}, -2.727, false},
      {kAsia, {kSmoke}, -3.032, false},
      {kAsia, {kTub, kLung}, -2.758, false},
      {kAsia, {kTub, kSmoke}, -2.948, false},
      {kAsia, {kSmoke, kLung}, -3.790, false},
      {kAsia, {kTub, kSmoke, kLung}, -3.302, false},

      {kTub, {}, -7.126, true},
      {kTub, {kLung}, -5.292, true},
      {kTub, {kAsia}, -6.976, true},
      {kTub, {kSmoke}, -7.426, false},
      {kTub, {kSmoke, kLung}, -3.790, true},
      {kTub, {kAsia, kLung}, -5.323, false},
      {kTub, {kAsia, kSmoke}, -7.342, false},
      {kTub, {kAsia, kSmoke, kLung}, -3.302, true},

      {kSmoke, {}, -36.201, true},
      {kSmoke, {kTub}, -36.502, false},
      {kSmoke, {kAsia}, -36.702, false},
      {kSmoke, {kLung}, -37.760, false},
      {kSmoke, {kTub, kLung}, -36.258, false},
      {kSmoke, {kAsia, kTub}, -37.069, false},
      {kSmoke, {kAsia, kLung}, -38.823, false},
      {kSmoke, {kAsia, kTub, kLung}, -36.803, false},

      {kLung, {}, -16.133, true},
      {kLung, {kTub}, -14.299, true},
      {kLung, {kAsia}, -16.329, false},
      {kLung, {kSmoke}, -17.692, false},
      {kLung, {kTub, kSmoke}, -14.056, true},
      {kLung, {kAsia, kTub}, -14.676, false},
      {kLung, {kAsia, kSmoke}, -18.450, false},
      {kLung, {kAsia, kTub, kSmoke}, -14.410, false},
  };
  return e;
}

inline NodeScoreTable asia_node_table(NodeId node, bool retained_only = false) {
  std::vector<ScoredParentSet> entries;
  for (const auto& e : asia_entries()) {
    if (e.node == node && (!retained_only || e.retained)) {
      entries.push_back({ParentSet::from_unsorted(e.parents), e.score});
    }
  }
  return make_node_table(node, std::move(entries), 4);
}

inline ScoreTable asia_score_table(bool retained_only = false) {
  std::vector<NodeScoreTable> tables;
  for (NodeId v = 0; v < 4; ++v) tables.push_back(asia_node_table(v, retained_only));
  return make_score_table(std::move(tables), {"Asia", "Tub", "Smoke", "Lung"});
}

// ------------------------------------------------ interval score series

constexpr double kHalfHour = 1800.0;

// Raw BDeu scores at each half hour for the Audio-train case, p=10%, m=10.
inline const std::array<double, 8>& audio_baseline() {
  static const std::array<double, 8> s = {-620010.1, -620008.8, -620005.1, -620005.1,
                                          -620005.1, -620005.1, -620005.1, -620005.1};
  return s;
}

inline const std::array<std::array<double, 8>, 10>& audio_workers() {
  static const std::array<std::array<double, 8>, 10> s = {{
      {-620373.9, -620373.9, -620372.7, -620005.1, -620005.1, -619992.9, -619990.9, -619990.9},
      {-619990.9, -619989.0, -619989.0, -619989.0, -619989.0, -619989.0, -619989.0, -619989.0},
      {-620025.1, -620023.7, -620013.9, -620013.9, -620013.9, -620013.9, -620013.9, -620013.9},
      {-619993.1, -619993.1, -619993.1, -619993.1, -619993.1, -619993.1, -619993.1, -619993.1},
      {-620025.7, -620025.7, -620025.7, -620025.7, -620025.7, -620025.7, -620025.7, -620025.7},
      {-620007.6, -620007.6, -620003.0, -619990.9, -619990.9, -619990.9, -619990.9, -619990.9},
      {-619996.6, -619996.6, -619992.9, -619990.9, -619990.9, -619990.9, -619990.9, -619990.9},
      {-619995.4, -619994.1, -619994.1, -619994.1, -619994.1, -619994.1, -619994.1, -619994.1},
      {-620012.2, -620012.2, -620012.2, -620001.4, -620001.4, -620001.4, -620001.4, -620001.4},
      {-620014.2, -620014.2, -620014.2, -620014.2, -620014.2, -620014.2, -620014.2, -620014.2},
  }};
  return s;
}

// Published permille gaps for the same runs; last row is the highest DAG.
inline const std::array<std::array<double, 8>, 11>& audio_permille() {
  static const std::array<std::array<double, 8>, 11> s = {{
      {-0.587, -0.589, -0.593, 0.000, 0.000, 0.020, 0.023, 0.023},
      {0.031, 0.032, 0.026, 0.026, 0.026, 0.026, 0.026, 0.026},
      {-0.024, -0.024, -0.014, -0.014, -0.014, -0.014, -0.014, -0.014},
      {0.027, 0.025, 0.019, 0.019, 0.019, 0.019, 0.019, 0.019},
      {-0.025, -0.027, -0.033, -0.033, -0.033, -0.033, -0.033, -0.033},
      {0.004, 0.002, 0.003, 0.023, 0.023, 0.023, 0.023, 0.023},
      {0.022, 0.020, 0.020, 0.023, 0.023, 0.023, 0.023, 0.023},
      {0.024, 0.024, 0.018, 0.018, 0.018, 0.018, 0.018, 0.018},
      {-0.003, -0.005, -0.011, 0.006, 0.006, 0.006, 0.006, 0.006},
      {-0.007, -0.009, -0.015, -0.015, -0.015, -0.015, -0.015, -0.015},
      {0.031, 0.032, 0.026, 0.026, 0.026, 0.026, 0.026, 0.026},
  }};
  return s;
}

inline std::vector<Snapshot> audio_baseline_snapshots() {
  std::vector<Snapshot> out;
  for (std::size_t k = 0; k < 8; ++k) out.push_back({kHalfHour * static_cast<double>(k + 1), audio_baseline()[k], 0});
  return out;
}

inline std::vector<Snapshot> audio_worker_snapshots() {
  std::vector<Snapshot> out;
  for (std::size_t w = 0; w < 10; ++w) {
    for (std::size_t k = 0; k < 8; ++k) {
      out.push_back({kHalfHour * static_cast<double>(k + 1), audio_workers()[w][k], w + 1});
    }
  }
  return out;
}

// ------------------------------------------------------------ synthetic

using Gen = std::mt19937_64;

inline std::size_t uniform(Gen& g, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(g);
}

/// Independent uniform columns; every arity is realised by at least one row
/// when rows allow it.
inline Dataset random_dataset(Gen& g, std::size_t n, std::size_t rows, std::size_t max_arity) {
  Dataset d;
  d.num_vars = n;
  d.arities.resize(n);
  for (auto& a : d.arities) a = uniform(g, 1, max_arity);
  d.rows.assign(rows, std::vector<Code>(n));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t v = 0; v < n; ++v) {
      d.rows[r][v] = static_cast<Code>(r < d.arities[v] ? r : uniform(g, 0, d.arities[v] - 1));
    }
  }
  std::shuffle(d.rows.begin(), d.rows.end(), g);
  return validate_dataset(std::move(d));
}

/// Forward sample of a random DAG over `n` variables with up to
/// `max_parents` parents each and skewed conditional distributions.
inline Dataset forward_sampled_dataset(Gen& g, std::size_t n, std::size_t rows, std::size_t max_parents,
                                       std::size_t max_arity) {
  std::vector<std::size_t> arity(n);
  for (auto& a : arity) a = uniform(g, 2, max_arity);
  std::vector<std::vector<std::size_t>> parents(n);
  for (std::size_t v = 1; v < n; ++v) {
    const std::size_t k = uniform(g, 0, std::min(v, max_parents));
    std::vector<std::size_t> pool(v);
    for (std::size_t i = 0; i < v; ++i) pool[i] = i;
    std::shuffle(pool.begin(), pool.end(), g);
    parents[v].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  }
  // One categorical distribution per parent configuration.
  std::gamma_distribution<double> concentration(0.5, 1.0);
  std::vector<std::vector<std::discrete_distribution<int>>> cpt(n);
  for (std::size_t v = 0; v < n; ++v) {
    std::size_t configs = 1;
    for (auto p : parents[v]) configs *= arity[p];
    for (std::size_t j = 0; j < configs; ++j) {
      std::vector<double> w(arity[v]);
      for (auto& x : w) x = concentration(g) + 1e-3;
      cpt[v].emplace_back(w.begin(), w.end());
    }
  }
  Dataset d;
  d.num_vars = n;
  d.rows.assign(rows, std::vector<Code>(n));
  for (auto& row : d.rows) {
    for (std::size_t v = 0; v < n; ++v) {
      std::size_t j = 0;
      for (auto p : parents[v]) j = j * arity[p] + static_cast<std::size_t>(row[p]);
      row[v] = cpt[v][j](g);
    }
  }
  for (std::size_t v = 0; v < n; ++v) d.arities.push_back(arity[v]);
  return validate_dataset(std::move(d));
}

/// Random table: the empty set plus each other subset of size <= d with
/// probability `keep`, all with distinct random scores.
inline ScoreTable random_score_table(Gen& g, std::size_t n, std::size_t d, double keep = 0.6) {
  std::uniform_real_distribution<double> score(-100.0, -1.0);
  std::bernoulli_distribution take(keep);
  std::vector<NodeScoreTable> tables;
  for (NodeId v = 0; v < n; ++v) {
    std::vector<ScoredParentSet> entries;
    entries.push_back({ParentSet{}, score(g)});
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
      if (mask & (1u << v)) continue;
      if (static_cast<std::size_t>(__builtin_popcount(mask)) > d || !take(g)) continue;
      std::vector<NodeId> members;
      for (NodeId u = 0; u < n; ++u) {
        if (mask & (1u << u)) members.push_back(u);
      }
      entries.push_back({ParentSet(members), score(g)});
    }
    tables.push_back(make_node_table(v, std::move(entries), n));
  }
  return make_score_table(std::move(tables));
}

}  // namespace fixtures
