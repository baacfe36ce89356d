#pragma once

// Shared domain types: datasets, parent sets, ranked score tables,
// orderings and DAGs. Everything here is a plain value type; once built
// and validated, instances are never mutated and may be shared freely
// between worker threads.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "psminobs/error.hpp"

namespace psminobs {

using NodeId = std::uint32_t;
using Code = std::int32_t;

inline std::string default_var_name(std::size_t i) { return "V" + std::to_string(i); }

inline std::vector<std::string> default_var_names(std::size_t n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 0; i < n; ++i) names.push_back(default_var_name(i));
  return names;
}

/// Discrete observation matrix. Rows are records; column i takes codes in
/// [0, arities[i]).
struct Dataset {
  std::size_t num_vars = 0;
  std::vector<std::size_t> arities;
  std::vector<std::vector<Code>> rows;
  std::vector<std::string> var_names;

  std::size_t num_rows() const { return rows.size(); }

  bool operator==(const Dataset&) const = default;
};

/// Checks the dataset invariants. Missing arities are inferred as observed
/// max + 1 (a constant or empty column gets arity 1); missing names become
/// V0..V(n-1).
inline Dataset validate_dataset(Dataset raw) {
  if (raw.num_vars == 0) fail(ErrorCode::NoVariables, "dataset has zero variables");
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    if (raw.rows[r].size() != raw.num_vars) {
      fail(ErrorCode::RaggedRow, "row " + std::to_string(r) + " has " +
                                     std::to_string(raw.rows[r].size()) + " entries, expected " +
                                     std::to_string(raw.num_vars));
    }
  }
  const bool infer = raw.arities.empty();
  if (!infer && raw.arities.size() != raw.num_vars) {
    fail(ErrorCode::RaggedRow, "arity list length does not match variable count");
  }
  if (infer) raw.arities.assign(raw.num_vars, 1);
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    for (std::size_t i = 0; i < raw.num_vars; ++i) {
      const Code c = raw.rows[r][i];
      if (c < 0) {
        fail(ErrorCode::CodeOutOfRange,
             "negative code at row " + std::to_string(r) + ", column " + std::to_string(i));
      }
      if (infer) {
        raw.arities[i] = std::max(raw.arities[i], static_cast<std::size_t>(c) + 1);
      } else if (static_cast<std::size_t>(c) >= raw.arities[i]) {
        fail(ErrorCode::CodeOutOfRange, "code " + std::to_string(c) + " at row " +
                                            std::to_string(r) + ", column " + std::to_string(i) +
                                            " exceeds arity " + std::to_string(raw.arities[i]));
      }
    }
  }
  for (std::size_t i = 0; i < raw.num_vars; ++i) {
    if (raw.arities[i] == 0) fail(ErrorCode::CodeOutOfRange, "arity must be at least 1");
  }
  if (raw.var_names.empty()) {
    raw.var_names = default_var_names(raw.num_vars);
  } else if (raw.var_names.size() != raw.num_vars) {
    fail(ErrorCode::RaggedRow, "name list length does not match variable count");
  }
  return raw;
}

/// Strictly increasing list of node indices.
struct ParentSet {
  std::vector<NodeId> members;

  ParentSet() = default;
  explicit ParentSet(std::vector<NodeId> sorted_members) : members(std::move(sorted_members)) {}

  /// Sorts the input; duplicates are an error.
  static ParentSet from_unsorted(std::vector<NodeId> nodes) {
    std::sort(nodes.begin(), nodes.end());
    if (std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end()) {
      fail(ErrorCode::DuplicateParent, "parent set lists a node twice");
    }
    return ParentSet(std::move(nodes));
  }

  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }
  bool contains(NodeId v) const { return std::binary_search(members.begin(), members.end(), v); }

  auto operator<=>(const ParentSet&) const = default;
  bool operator==(const ParentSet&) const = default;
};

struct ParentSetHash {
  std::size_t operator()(const ParentSet& ps) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (NodeId v : ps.members) {
      h ^= v + 0x9E3779B97F4A7C15ULL;
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

struct ScoredParentSet {
  ParentSet parents;
  double score = 0.0;

  bool operator==(const ScoredParentSet&) const = default;
};

// Canonical rank order: score descending, then parent list ascending.
inline bool ranks_before(const ScoredParentSet& a, const ScoredParentSet& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.parents < b.parents;
}

/// Ranked candidate parent sets of one node. Rank k (1-based) is entries[k-1].
struct NodeScoreTable {
  NodeId node = 0;
  std::vector<ScoredParentSet> entries;

  std::size_t size() const { return entries.size(); }

  bool operator==(const NodeScoreTable&) const = default;
};

/// Sorts into canonical rank order and checks every invariant.
inline NodeScoreTable make_node_table(NodeId node, std::vector<ScoredParentSet> entries,
                                      std::size_t num_vars) {
  std::sort(entries.begin(), entries.end(), ranks_before);
  std::size_t empties = 0;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    if (!std::isfinite(e.score)) {
      fail(ErrorCode::InvalidArgument, "non-finite score in table of node " + std::to_string(node));
    }
    if (std::adjacent_find(e.parents.members.begin(), e.parents.members.end(),
                           std::greater_equal<>()) != e.parents.members.end()) {
      fail(ErrorCode::DuplicateParent, "parent set is not strictly increasing");
    }
    for (NodeId p : e.parents.members) {
      if (p >= num_vars) fail(ErrorCode::InvalidIndex, "parent index out of range");
      if (p == node) fail(ErrorCode::InvalidIndex, "node listed as its own parent");
    }
    if (e.parents.empty()) ++empties;
    if (k > 0 && entries[k - 1].parents == e.parents) {
      fail(ErrorCode::DuplicateParent, "parent set listed twice for node " + std::to_string(node));
    }
  }
  if (empties == 0) {
    fail(ErrorCode::MissingEmptySet, "node " + std::to_string(node) + " has no empty parent set");
  }
  return NodeScoreTable{node, std::move(entries)};
}

struct ScoreTable {
  std::size_t num_vars = 0;
  std::vector<NodeScoreTable> tables;
  std::vector<std::string> var_names;

  std::size_t total_entries() const {
    std::size_t total = 0;
    for (const auto& t : tables) total += t.size();
    return total;
  }

  bool operator==(const ScoreTable&) const = default;
};

inline ScoreTable make_score_table(std::vector<NodeScoreTable> tables,
                                   std::vector<std::string> names = {}) {
  ScoreTable st;
  st.num_vars = tables.size();
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (tables[i].node != i) fail(ErrorCode::InvalidIndex, "tables must be indexed by node");
  }
  st.tables = std::move(tables);
  st.var_names = names.empty() ? default_var_names(st.num_vars) : std::move(names);
  if (st.var_names.size() != st.num_vars) {
    fail(ErrorCode::CountMismatch, "name list length does not match node count");
  }
  return st;
}

/// A permutation of 0..n-1; sequence[0] has no predecessors.
struct Ordering {
  std::vector<NodeId> sequence;

  std::size_t size() const { return sequence.size(); }

  static Ordering identity(std::size_t n) {
    Ordering o;
    o.sequence.resize(n);
    std::iota(o.sequence.begin(), o.sequence.end(), NodeId{0});
    return o;
  }

  bool is_permutation() const {
    std::vector<char> seen(sequence.size(), 0);
    for (NodeId v : sequence) {
      if (v >= sequence.size() || seen[v]) return false;
      seen[v] = 1;
    }
    return true;
  }

  /// positions()[v] is the index of node v in the sequence.
  std::vector<std::size_t> positions() const {
    std::vector<std::size_t> pos(sequence.size());
    for (std::size_t i = 0; i < sequence.size(); ++i) pos[sequence[i]] = i;
    return pos;
  }

  bool operator==(const Ordering&) const = default;
};

struct Dag {
  std::vector<ParentSet> parents;
  double score = 0.0;

  std::size_t num_vars() const { return parents.size(); }

  bool operator==(const Dag&) const = default;
};

/// Kahn peeling; true iff a topological order exists.
inline bool check_acyclic(const Dag& dag) {
  const std::size_t n = dag.parents.size();
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<NodeId>> children(n);
  for (std::size_t v = 0; v < n; ++v) {
    for (NodeId p : dag.parents[v].members) {
      if (p >= n) fail(ErrorCode::InvalidIndex, "parent index out of range");
      children[p].push_back(static_cast<NodeId>(v));
      ++indegree[v];
    }
  }
  std::vector<NodeId> ready;
  for (std::size_t v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push_back(static_cast<NodeId>(v));
  }
  std::size_t peeled = 0;
  while (!ready.empty()) {
    const NodeId v = ready.back();
    ready.pop_back();
    ++peeled;
    for (NodeId c : children[v]) {
      if (--indegree[c] == 0) ready.push_back(c);
    }
  }
  return peeled == n;
}

inline double average_indegree(const Dag& dag) {
  if (dag.parents.empty()) return 0.0;
  std::size_t edges = 0;
  for (const auto& ps : dag.parents) edges += ps.size();
  return static_cast<double>(edges) / static_cast<double>(dag.parents.size());
}

}  // namespace psminobs
