#pragma once

// BDeu local scores over candidate parent sets, subset-dominance pruning,
// and the CPS / DAG counting utilities.
//
// The structure prior log P(G) is uniform and therefore dropped: every
// reported score is the sum of local marginal-likelihood terms only.

#include <math.h>

#include <algorithm>
#include <atomic>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "psminobs/core_model.hpp"

namespace psminobs {

using BigInt = boost::multiprecision::cpp_int;

struct ScoringConfig {
  std::size_t max_indegree = 3;
  double ess = 1.0;
  bool prune = true;
  // Upper bound on candidate parent sets enumerated per node.
  std::uint64_t per_node_cap = 100'000'000;
  // Worker threads for per-node table construction; 0 or 1 is sequential.
  unsigned threads = 1;
};

inline void validate_scoring_config(const ScoringConfig& cfg, std::size_t num_vars) {
  if (!(cfg.ess > 0.0) || !std::isfinite(cfg.ess)) {
    fail(ErrorCode::InvalidArgument, "equivalent sample size must be positive");
  }
  if (num_vars == 0) fail(ErrorCode::NoVariables, "no variables to score");
  if (cfg.max_indegree >= num_vars) {
    fail(ErrorCode::InvalidArgument, "max in-degree " + std::to_string(cfg.max_indegree) +
                                         " must be below the variable count " +
                                         std::to_string(num_vars));
  }
}

/// Natural log of the gamma function for x > 0. Reentrant (no signgam write).
inline double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

struct ConfigCount {
  std::vector<Code> parent_values;
  std::uint64_t total = 0;                 // N_ij
  std::vector<std::uint64_t> child_counts;  // N_ijk, length r

  bool operator==(const ConfigCount&) const = default;
};

/// Counts for one (child, parents) family. Only observed parent
/// configurations are materialised; `q` is the full product of parent
/// arities regardless.
struct ContingencyCounts {
  std::vector<ConfigCount> configs;  // sorted by parent_values
  double q = 1.0;
  std::size_t r = 1;
  std::uint64_t rows = 0;
};

namespace detail {

inline void check_family(const Dataset& data, NodeId child, const ParentSet& parents) {
  if (child >= data.num_vars) fail(ErrorCode::InvalidIndex, "child index out of range");
  for (std::size_t k = 0; k < parents.members.size(); ++k) {
    const NodeId p = parents.members[k];
    if (p >= data.num_vars) fail(ErrorCode::InvalidIndex, "parent index out of range");
    if (p == child) fail(ErrorCode::InvalidIndex, "child appears in its own parent set");
    if (k > 0 && parents.members[k - 1] >= p) {
      fail(ErrorCode::DuplicateParent, "parent set is not strictly increasing");
    }
  }
}

// Observed configurations in first-seen order, each with N_ijk over child
// values. Keys are mixed-radix encodings of the parent values when the full
// configuration space fits in 64 bits.
struct FamilyCounts {
  std::vector<std::uint64_t> keys;
  std::vector<std::uint64_t> cells;  // row-major [config][child value]
  std::size_t r = 1;
};

inline FamilyCounts count_family(const Dataset& data, NodeId child, const ParentSet& parents) {
  FamilyCounts out;
  out.r = data.arities[child];
  const auto& ps = parents.members;

  std::uint64_t space = 1;
  bool fits = true;
  for (NodeId p : ps) {
    const std::uint64_t a = data.arities[p];
    if (space > std::numeric_limits<std::uint64_t>::max() / a) {
      fits = false;
      break;
    }
    space *= a;
  }

  auto emit = [&](std::size_t slot, Code child_value) { ++out.cells[slot * out.r + child_value]; };

  constexpr std::uint64_t kDenseLimit = 1u << 16;
  if (fits && space * out.r <= kDenseLimit) {
    std::vector<std::uint32_t> slot_of(space, UINT32_MAX);
    for (const auto& row : data.rows) {
      std::uint64_t key = 0;
      for (NodeId p : ps) key = key * data.arities[p] + static_cast<std::uint64_t>(row[p]);
      if (slot_of[key] == UINT32_MAX) {
        slot_of[key] = static_cast<std::uint32_t>(out.keys.size());
        out.keys.push_back(key);
        out.cells.resize(out.cells.size() + out.r, 0);
      }
      emit(slot_of[key], row[child]);
    }
  } else if (fits) {
    std::unordered_map<std::uint64_t, std::size_t> slot_of;
    for (const auto& row : data.rows) {
      std::uint64_t key = 0;
      for (NodeId p : ps) key = key * data.arities[p] + static_cast<std::uint64_t>(row[p]);
      auto [it, inserted] = slot_of.try_emplace(key, out.keys.size());
      if (inserted) {
        out.keys.push_back(key);
        out.cells.resize(out.cells.size() + out.r, 0);
      }
      emit(it->second, row[child]);
    }
  } else {
    // Configuration space beyond 64 bits: key on the value tuple itself.
    std::map<std::vector<Code>, std::size_t> slot_of;
    std::vector<Code> tuple(ps.size());
    for (const auto& row : data.rows) {
      for (std::size_t k = 0; k < ps.size(); ++k) tuple[k] = row[ps[k]];
      auto [it, inserted] = slot_of.try_emplace(tuple, out.keys.size());
      if (inserted) {
        out.keys.push_back(out.keys.size());
        out.cells.resize(out.cells.size() + out.r, 0);
      }
      emit(it->second, row[child]);
    }
  }
  return out;
}

inline double full_config_count(const Dataset& data, const ParentSet& parents) {
  double q = 1.0;
  for (NodeId p : parents.members) q *= static_cast<double>(data.arities[p]);
  return q;
}

}  // namespace detail

/// N_ij and N_ijk for one family from a single pass over the rows.
inline ContingencyCounts count_configurations(const Dataset& data, NodeId child,
                                              const ParentSet& parents) {
  detail::check_family(data, child, parents);
  ContingencyCounts out;
  out.r = data.arities[child];
  out.q = detail::full_config_count(data, parents);
  out.rows = data.num_rows();

  std::map<std::vector<Code>, ConfigCount> by_tuple;
  std::vector<Code> tuple(parents.size());
  for (const auto& row : data.rows) {
    for (std::size_t k = 0; k < parents.size(); ++k) tuple[k] = row[parents.members[k]];
    auto& cc = by_tuple[tuple];
    if (cc.child_counts.empty()) {
      cc.parent_values = tuple;
      cc.child_counts.assign(out.r, 0);
    }
    ++cc.total;
    ++cc.child_counts[static_cast<std::size_t>(row[child])];
  }
  out.configs.reserve(by_tuple.size());
  for (auto& [key, cc] : by_tuple) out.configs.push_back(std::move(cc));
  return out;
}

/// BDeu local score of `child` given `parents` (natural log, prior term
/// omitted). Unobserved parent configurations contribute zero.
inline double bdeu_local_score(const Dataset& data, NodeId child, const ParentSet& parents,
                               double ess) {
  detail::check_family(data, child, parents);
  if (!(ess > 0.0)) fail(ErrorCode::InvalidArgument, "equivalent sample size must be positive");

  const auto counts = detail::count_family(data, child, parents);
  const double q = detail::full_config_count(data, parents);
  const double r = static_cast<double>(counts.r);
  const double alpha_j = ess / q;
  const double alpha_jk = ess / (r * q);
  const double lg_alpha_j = log_gamma(alpha_j);
  const double lg_alpha_jk = log_gamma(alpha_jk);

  double score = 0.0;
  const std::size_t configs = counts.keys.size();
  for (std::size_t j = 0; j < configs; ++j) {
    std::uint64_t n_ij = 0;
    double inner = 0.0;
    for (std::size_t k = 0; k < counts.r; ++k) {
      const std::uint64_t n_ijk = counts.cells[j * counts.r + k];
      if (n_ijk == 0) continue;
      n_ij += n_ijk;
      inner += log_gamma(static_cast<double>(n_ijk) + alpha_jk) - lg_alpha_jk;
    }
    score += lg_alpha_j - log_gamma(static_cast<double>(n_ij) + alpha_j) + inner;
  }
  if (!std::isfinite(score)) {
    fail(ErrorCode::Overflow, "BDeu score of node " + std::to_string(child) + " is not finite");
  }
  return score;
}

/// Σ_{k=0}^{d} C(n-1, k): candidate parent sets of one node.
inline BigInt cps_per_node(std::size_t n, std::size_t d) {
  BigInt total = 0;
  BigInt binom = 1;  // C(n-1, k)
  for (std::size_t k = 0; k <= d && k + 1 <= n; ++k) {
    total += binom;
    binom = binom * (n - 1 - k) / (k + 1);
  }
  return total;
}

/// f(n, d) = n Σ_{k=0}^{d} C(n-1, k), exact.
inline BigInt max_cps_count(std::size_t n, std::size_t d) {
  if (d >= n) {
    fail(ErrorCode::InvalidArgument, "max in-degree must be below the node count");
  }
  return BigInt(n) * cps_per_node(n, d);
}

/// Number of labelled DAGs on n nodes:
/// a(n) = Σ_{i=1}^{n} (-1)^{i+1} C(n,i) 2^{i(n-i)} a(n-i), a(0) = 1.
inline BigInt count_dags(std::size_t n) {
  std::vector<BigInt> a(n + 1);
  a[0] = 1;
  for (std::size_t m = 1; m <= n; ++m) {
    BigInt sum = 0;
    BigInt binom = 1;  // C(m, i)
    for (std::size_t i = 1; i <= m; ++i) {
      binom = binom * (m - i + 1) / i;
      BigInt term = binom * a[m - i];
      term <<= static_cast<unsigned>(i * (m - i));
      if (i % 2 == 1) {
        sum += term;
      } else {
        sum -= term;
      }
    }
    a[m] = sum;
  }
  return a[n];
}

/// Decimal mantissa/exponent of `value` rounded half-up to `digits`
/// significant figures: 16180000 with 3 digits -> {162, 7} meaning 1.62e7.
struct SigFigs {
  std::uint64_t mantissa = 0;
  int exponent = 0;
  int digits = 3;

  std::string to_string() const {
    std::string m = std::to_string(mantissa);
    if (m.size() > 1) m.insert(1, ".");
    return m + "e" + std::to_string(exponent);
  }
};

inline SigFigs round_significant(const BigInt& value, int digits = 3) {
  if (value <= 0) return SigFigs{0, 0, digits};
  std::string s = value.str();
  int exponent = static_cast<int>(s.size()) - 1;
  if (static_cast<int>(s.size()) <= digits) {
    s.append(static_cast<std::size_t>(digits) - s.size(), '0');
    return SigFigs{std::stoull(s), exponent, digits};
  }
  std::uint64_t head = std::stoull(s.substr(0, static_cast<std::size_t>(digits)));
  if (s[static_cast<std::size_t>(digits)] >= '5') ++head;
  std::uint64_t limit = 1;
  for (int i = 0; i < digits; ++i) limit *= 10;
  if (head == limit) {
    head /= 10;
    ++exponent;
  }
  return SigFigs{head, exponent, digits};
}

/// Every subset of V \ {child} with at most d members, scored and ranked.
inline NodeScoreTable enumerate_scored(const Dataset& data, NodeId child, const ScoringConfig& cfg) {
  validate_scoring_config(cfg, data.num_vars);
  if (child >= data.num_vars) fail(ErrorCode::InvalidIndex, "child index out of range");
  const std::size_t n = data.num_vars;
  const BigInt expected = cps_per_node(n, cfg.max_indegree);
  if (expected > BigInt(cfg.per_node_cap)) {
    fail(ErrorCode::CombinatorialCap, expected.str() + " candidate parent sets per node exceed the cap of " +
                                          std::to_string(cfg.per_node_cap));
  }

  std::vector<NodeId> others;
  others.reserve(n - 1);
  for (NodeId v = 0; v < n; ++v) {
    if (v != child) others.push_back(v);
  }

  std::vector<ScoredParentSet> entries;
  entries.reserve(static_cast<std::size_t>(expected));
  for (std::size_t size = 0; size <= cfg.max_indegree; ++size) {
    // Index combinations of `size` elements from `others`, lexicographic.
    std::vector<std::size_t> idx(size);
    for (std::size_t k = 0; k < size; ++k) idx[k] = k;
    while (true) {
      std::vector<NodeId> members(size);
      for (std::size_t k = 0; k < size; ++k) members[k] = others[idx[k]];
      ParentSet ps(std::move(members));
      const double s = bdeu_local_score(data, child, ps, cfg.ess);
      entries.push_back(ScoredParentSet{std::move(ps), s});

      std::size_t k = size;
      while (k > 0 && idx[k - 1] == others.size() - size + k - 1) --k;
      if (k == 0) break;
      ++idx[k - 1];
      for (std::size_t j = k; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return make_node_table(child, std::move(entries), n);
}

/// Keeps U iff no proper subset S of U present in the input scores at least
/// as well (score(S) >= score(U)). Pruned entries still act as dominators.
inline NodeScoreTable prune_table(const NodeScoreTable& table) {
  std::unordered_map<ParentSet, double, ParentSetHash> score_of;
  score_of.reserve(table.entries.size());
  bool has_empty = false;
  for (const auto& e : table.entries) {
    score_of.emplace(e.parents, e.score);
    has_empty = has_empty || e.parents.empty();
  }
  if (!has_empty) {
    fail(ErrorCode::MissingEmptySet, "node " + std::to_string(table.node) + " has no empty parent set");
  }

  NodeScoreTable out{table.node, {}};
  ParentSet subset;
  for (const auto& e : table.entries) {
    const auto& members = e.parents.members;
    const std::size_t size = members.size();
    if (size >= 63) fail(ErrorCode::CombinatorialCap, "parent set too large for subset pruning");
    bool dominated = false;
    const std::uint64_t full = (std::uint64_t{1} << size) - 1;
    for (std::uint64_t mask = 0; mask < full && !dominated; ++mask) {
      subset.members.clear();
      for (std::size_t k = 0; k < size; ++k) {
        if (mask >> k & 1U) subset.members.push_back(members[k]);
      }
      auto it = score_of.find(subset);
      dominated = it != score_of.end() && it->second >= e.score;
    }
    if (!dominated) out.entries.push_back(e);
  }
  // Input is already in rank order and filtering preserves it.
  return out;
}

inline ScoreTable build_score_table(const Dataset& data, const ScoringConfig& cfg) {
  validate_scoring_config(cfg, data.num_vars);
  const std::size_t n = data.num_vars;
  const BigInt expected = cps_per_node(n, cfg.max_indegree);
  if (expected > BigInt(cfg.per_node_cap)) {
    fail(ErrorCode::CombinatorialCap, expected.str() + " candidate parent sets per node exceed the cap of " +
                                          std::to_string(cfg.per_node_cap));
  }

  std::vector<NodeScoreTable> tables(n);
  auto build_node = [&](NodeId v) {
    auto t = enumerate_scored(data, v, cfg);
    tables[v] = cfg.prune ? prune_table(t) : std::move(t);
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (NodeId v = 0; v < n; ++v) build_node(v);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          try {
            for (std::size_t v; (v = next.fetch_add(1)) < n;) build_node(static_cast<NodeId>(v));
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return make_score_table(std::move(tables), data.var_names);
}

}  // namespace psminobs
