#pragma once

// Rank-biased sampling of candidate parent sets. Ranks are 1-based: rank 1
// is a node's highest-scoring parent set. A rank k is weighted by the
// discrete half-normal exp(-k^2 / (2 sigma^2)), renormalised over 1..N.
//
// Subset index s = 1 is the deterministic truncation (top ceil(p*N) ranks
// plus the last rank); s > 1 draws ceil(p*N) distinct ranks from the
// half-normal over the whole list.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "psminobs/core_model.hpp"
#include "psminobs/order_search.hpp"

namespace psminobs {

struct SamplingConfig {
  double p = 1.0;
  // Explicit sigma for every node; when unset sigma_i = 0.5 * p * N_i.
  std::optional<double> sigma;
};

inline void validate_sampling_config(const SamplingConfig& cfg) {
  if (!(cfg.p > 0.0 && cfg.p <= 1.0)) fail(ErrorCode::InvalidArgument, "sampling rate must lie in (0, 1]");
  if (cfg.sigma && !(*cfg.sigma > 0.0)) fail(ErrorCode::InvalidArgument, "sigma must be positive");
}

inline double node_sigma(const SamplingConfig& cfg, std::size_t entries) {
  return cfg.sigma ? *cfg.sigma : 0.5 * cfg.p * static_cast<double>(entries);
}

/// ceil(p * N), at least 1 and at most N. The small tolerance keeps
/// products such as 0.2 * 10 from rounding up past an exact integer.
inline std::size_t sample_size(double p, std::size_t entries) {
  if (entries == 0) return 0;
  const double raw = p * static_cast<double>(entries);
  auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::clamp<std::size_t>(k, 1, entries);
}

/// log w_k - log w_1 for ranks k = 1..N (unnormalised, never underflows).
inline std::vector<double> half_normal_log_weights(double sigma, std::size_t entries) {
  if (!(sigma > 0.0)) fail(ErrorCode::InvalidArgument, "sigma must be positive");
  std::vector<double> lw(entries);
  const double two_sigma_sq = 2.0 * sigma * sigma;
  for (std::size_t k = 1; k <= entries; ++k) {
    const double kk = static_cast<double>(k);
    lw[k - 1] = -((kk - 1.0) * (kk + 1.0)) / two_sigma_sq;
  }
  return lw;
}

/// Normalised half-normal probabilities over ranks 1..N.
inline std::vector<double> half_normal_weights(double sigma, std::size_t entries) {
  if (entries == 0) fail(ErrorCode::InvalidArgument, "need at least one rank");
  auto w = half_normal_log_weights(sigma, entries);
  double sum = 0.0;
  for (double& x : w) {
    x = std::exp(x);
    sum += x;
  }
  for (double& x : w) x /= sum;
  return w;
}

/// `count` independent 1-based ranks drawn with replacement.
inline std::vector<std::size_t> draw_ranks_with_replacement(const std::vector<double>& weights, std::size_t count,
                                                            Rng& rng) {
  std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
  std::vector<std::size_t> ranks(count);
  for (auto& r : ranks) r = dist(rng) + 1;
  return ranks;
}

/// `count` distinct 1-based ranks drawn without replacement, each draw
/// proportional to the weights of the ranks still available. Implemented
/// as Gumbel top-k on log weights, which has the same law as sequential
/// renormalised draws. Returned in ascending rank order.
inline std::vector<std::size_t> draw_ranks_without_replacement(const std::vector<double>& log_weights,
                                                               std::size_t count, Rng& rng) {
  const std::size_t n = log_weights.size();
  count = std::min(count, n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<double, std::size_t>> keys(n);
  for (std::size_t k = 0; k < n; ++k) {
    double u = unit(rng);
    while (u <= 0.0) u = unit(rng);
    keys[k] = {log_weights[k] - std::log(-std::log(u)), k};
  }
  auto by_key = [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  std::nth_element(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(count), keys.end(), by_key);
  std::vector<std::size_t> ranks;
  ranks.reserve(count);
  for (std::size_t k = 0; k < count; ++k) ranks.push_back(keys[k].second + 1);
  std::sort(ranks.begin(), ranks.end());
  return ranks;
}

/// Reduced table for subset index s. The empty parent set is always kept.
inline NodeScoreTable sample_node_subset(std::size_t s, const SamplingConfig& cfg, const NodeScoreTable& table,
                                         Rng& rng) {
  validate_sampling_config(cfg);
  if (s == 0) fail(ErrorCode::InvalidArgument, "subset index starts at 1");
  const std::size_t n = table.entries.size();
  if (n == 0) fail(ErrorCode::MissingEmptySet, "empty node table");
  const std::size_t count = sample_size(cfg.p, n);

  std::vector<char> keep(n, 0);
  if (s == 1) {
    for (std::size_t k = 0; k < count; ++k) keep[k] = 1;
    keep[n - 1] = 1;
  } else {
    const auto lw = half_normal_log_weights(node_sigma(cfg, n), n);
    for (std::size_t rank : draw_ranks_without_replacement(lw, count, rng)) keep[rank - 1] = 1;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (table.entries[k].parents.empty()) keep[k] = 1;
  }

  NodeScoreTable out{table.node, {}};
  for (std::size_t k = 0; k < n; ++k) {
    if (keep[k]) out.entries.push_back(table.entries[k]);
  }
  return out;
}

/// splitmix64 finaliser.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// RNG seed for sampling node `node` of subset `s`; independent of the
/// order in which subsets or nodes are processed.
inline std::uint64_t sampling_seed(std::uint64_t base_seed, std::size_t s, NodeId node) {
  return base_seed ^ mix64(mix64(static_cast<std::uint64_t>(s)) ^ (static_cast<std::uint64_t>(node) << 1 | 1));
}

inline ScoreTable sample_score_table(std::size_t s, const SamplingConfig& cfg, const ScoreTable& table,
                                     std::uint64_t base_seed) {
  validate_sampling_config(cfg);
  std::vector<NodeScoreTable> tables;
  tables.reserve(table.num_vars);
  for (NodeId v = 0; v < table.num_vars; ++v) {
    Rng rng(sampling_seed(base_seed, s, v));
    tables.push_back(sample_node_subset(s, cfg, table.tables[v], rng));
  }
  return make_score_table(std::move(tables), table.var_names);
}

struct RequiredM {
  double value = 1.0;
  bool saturated = false;  // 1/p^n exceeds the largest finite double
};

/// m = 1 / p^n: subsets needed for m * prod(p N_i) to match prod(N_i).
inline RequiredM required_m(double p, std::size_t n) {
  if (!(p > 0.0 && p <= 1.0)) fail(ErrorCode::InvalidArgument, "sampling rate must lie in (0, 1]");
  if (n == 0) fail(ErrorCode::InvalidArgument, "node count must be positive");
  const double log_m = -static_cast<double>(n) * std::log(p);
  if (log_m > std::log(std::numeric_limits<double>::max())) {
    return {std::numeric_limits<double>::infinity(), true};
  }
  return {std::exp(log_m), false};
}

struct CombinationCounts {
  double log_sampled = 0.0;  // log(m) + sum_i log(p N_i)
  double log_full = 0.0;     // sum_i log(N_i)
};

inline CombinationCounts subset_combinations(double p, double m, const ScoreTable& table) {
  if (!(p > 0.0 && p <= 1.0)) fail(ErrorCode::InvalidArgument, "sampling rate must lie in (0, 1]");
  if (!(m > 0.0)) fail(ErrorCode::InvalidArgument, "m must be positive");
  CombinationCounts out;
  out.log_sampled = std::log(m);
  for (const auto& t : table.tables) {
    const double entries = static_cast<double>(t.entries.size());
    out.log_sampled += std::log(p * entries);
    out.log_full += std::log(entries);
  }
  return out;
}

}  // namespace psminobs
