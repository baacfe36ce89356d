#pragma once

// Text formats: pre-computed score files, integer-coded datasets and DAGs.
//
// Score file layout ("\n" newlines):
//   n
//   NAME K            -- once per variable, followed by its K entries
//   SCORE J P1 .. PJ  -- local score, parent count, parent references
// Parent references are 0-based indices or variable names. The writer
// always emits indices and canonical rank order.

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <vector>

#include "psminobs/core_model.hpp"

namespace psminobs {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view tok) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

template <typename Int>
std::optional<Int> parse_integer(std::string_view tok) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  Int v{};
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || tok.empty()) return std::nullopt;
  return v;
}

namespace detail {

struct Line {
  std::size_t number = 0;  // 1-based
  std::vector<std::string_view> tokens;
};

// Splits on "\n" (tolerating "\r\n"); tokens separated by whitespace and,
// when `commas` is set, by commas. Blank lines are dropped.
inline std::vector<Line> tokenize(std::string_view text, bool commas) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++number;
    std::string_view raw = text.substr(start, end - start);
    Line line{number, {}};
    std::size_t i = 0;
    auto is_sep = [&](char c) {
      return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f' || (commas && c == ',');
    };
    while (i < raw.size()) {
      while (i < raw.size() && is_sep(raw[i])) ++i;
      std::size_t j = i;
      while (j < raw.size() && !is_sep(raw[j])) ++j;
      if (j > i) line.tokens.push_back(raw.substr(i, j - i));
      i = j;
    }
    if (!line.tokens.empty()) lines.push_back(std::move(line));
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

[[noreturn]] inline void fail_at(ErrorCode code, std::size_t line, const std::string& what) {
  fail(code, "line " + std::to_string(line) + ": " + what);
}

}  // namespace detail

struct ScoreFileOptions {
  // When a variable lacks the empty parent set, insert it scored one below
  // the variable's lowest finite score instead of failing.
  bool insert_missing_empty = false;
};

struct ScoreFileHeaderInfo {
  std::size_t num_vars = 0;
  std::vector<std::string> names;
  std::vector<std::size_t> declared_counts;
};

namespace detail {

struct RawBlock {
  std::string name;
  std::size_t declared = 0;
  std::size_t header_line = 0;
  struct RawEntry {
    double score;
    std::vector<std::string_view> refs;
    std::size_t line;
  };
  std::vector<RawEntry> entries;
};

inline std::vector<RawBlock> read_score_blocks(std::string_view text, std::size_t& num_vars) {
  const auto lines = tokenize(text, false);
  if (lines.empty()) fail(ErrorCode::ParseError, "empty score file");
  if (lines[0].tokens.size() != 1) fail_at(ErrorCode::ParseError, lines[0].number, "expected variable count");
  auto n = parse_integer<std::size_t>(lines[0].tokens[0]);
  if (!n) fail_at(ErrorCode::ParseError, lines[0].number, "variable count is not an integer");
  num_vars = *n;

  std::vector<RawBlock> blocks;
  std::size_t li = 1;
  while (li < lines.size()) {
    const auto& hdr = lines[li];
    if (blocks.size() == num_vars) {
      fail_at(ErrorCode::CountMismatch, hdr.number, "more variable blocks than the declared " + std::to_string(num_vars));
    }
    if (hdr.tokens.size() != 2) fail_at(ErrorCode::ParseError, hdr.number, "expected 'NAME COUNT'");
    auto declared = parse_integer<std::size_t>(hdr.tokens[1]);
    if (!declared) fail_at(ErrorCode::ParseError, hdr.number, "entry count is not an integer");
    RawBlock block{std::string(hdr.tokens[0]), *declared, hdr.number, {}};
    ++li;
    // Entries are consumed one line at a time, so a corrupt count cannot
    // trigger a large up-front allocation.
    for (std::size_t k = 0; k < block.declared; ++k, ++li) {
      if (li >= lines.size()) {
        fail_at(ErrorCode::CountMismatch, block.header_line,
                "variable '" + block.name + "' declares " + std::to_string(block.declared) +
                    " entries but the file ends after " + std::to_string(k));
      }
      const auto& ln = lines[li];
      auto score = parse_double(ln.tokens[0]);
      if (!score || ln.tokens.size() < 2) {
        fail_at(ErrorCode::CountMismatch, ln.number,
                "variable '" + block.name + "' declares " + std::to_string(block.declared) +
                    " entries but only " + std::to_string(k) + " were found");
      }
      if (!std::isfinite(*score)) fail_at(ErrorCode::ParseError, ln.number, "score is not finite");
      auto size = parse_integer<std::size_t>(ln.tokens[1]);
      if (!size) fail_at(ErrorCode::ParseError, ln.number, "parent count is not an integer");
      if (ln.tokens.size() != *size + 2) {
        fail_at(ErrorCode::ParseError, ln.number, "parent count does not match the parents listed");
      }
      block.entries.push_back({*score, {ln.tokens.begin() + 2, ln.tokens.end()}, ln.number});
    }
    blocks.push_back(std::move(block));
  }
  if (blocks.size() != num_vars) {
    fail(ErrorCode::CountMismatch, "file declares " + std::to_string(num_vars) + " variables but has " +
                                       std::to_string(blocks.size()) + " blocks");
  }
  return blocks;
}

}  // namespace detail

inline ScoreFileHeaderInfo read_score_file_header(std::string_view text) {
  std::size_t n = 0;
  auto blocks = detail::read_score_blocks(text, n);
  ScoreFileHeaderInfo info;
  info.num_vars = n;
  for (const auto& b : blocks) {
    info.names.push_back(b.name);
    info.declared_counts.push_back(b.declared);
  }
  return info;
}

inline ScoreTable parse_score_file(std::string_view text, const ScoreFileOptions& opts = {}) {
  std::size_t n = 0;
  auto blocks = detail::read_score_blocks(text, n);

  std::unordered_map<std::string_view, NodeId> index_of;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (!index_of.emplace(blocks[i].name, static_cast<NodeId>(i)).second) {
      detail::fail_at(ErrorCode::ParseError, blocks[i].header_line,
                      "variable name '" + blocks[i].name + "' appears twice");
    }
    names.push_back(blocks[i].name);
  }

  // Integer tokens are indices; anything else must be a variable name.
  auto resolve = [&](std::string_view ref, std::size_t line) -> NodeId {
    if (auto idx = parse_integer<std::size_t>(ref)) {
      if (*idx >= n) detail::fail_at(ErrorCode::UnknownParent, line, "parent index " + std::string(ref) + " out of range");
      return static_cast<NodeId>(*idx);
    }
    auto it = index_of.find(ref);
    if (it == index_of.end()) detail::fail_at(ErrorCode::UnknownParent, line, "unknown parent '" + std::string(ref) + "'");
    return it->second;
  };

  std::vector<NodeScoreTable> tables;
  tables.reserve(n);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    std::vector<ScoredParentSet> entries;
    bool has_empty = false;
    double lowest = 0.0;
    for (const auto& raw : blocks[i].entries) {
      std::vector<NodeId> members;
      for (auto ref : raw.refs) members.push_back(resolve(ref, raw.line));
      std::sort(members.begin(), members.end());
      if (std::adjacent_find(members.begin(), members.end()) != members.end()) {
        detail::fail_at(ErrorCode::DuplicateParent, raw.line, "parent listed twice");
      }
      if (std::binary_search(members.begin(), members.end(), static_cast<NodeId>(i))) {
        detail::fail_at(ErrorCode::InvalidIndex, raw.line, "variable listed as its own parent");
      }
      has_empty = has_empty || members.empty();
      lowest = entries.empty() ? raw.score : std::min(lowest, raw.score);
      entries.push_back(ScoredParentSet{ParentSet(std::move(members)), raw.score});
    }
    if (!has_empty) {
      if (!opts.insert_missing_empty) {
        detail::fail_at(ErrorCode::MissingEmptySet, blocks[i].header_line,
                        "variable '" + blocks[i].name + "' has no empty parent set");
      }
      entries.push_back(ScoredParentSet{ParentSet{}, entries.empty() ? 0.0 : lowest - 1.0});
    }
    tables.push_back(make_node_table(static_cast<NodeId>(i), std::move(entries), n));
  }
  return make_score_table(std::move(tables), std::move(names));
}

inline std::string write_score_file(const ScoreTable& table) {
  std::string out = std::to_string(table.num_vars) + "\n";
  for (std::size_t i = 0; i < table.num_vars; ++i) {
    const std::string name =
        i < table.var_names.size() && !table.var_names[i].empty() ? table.var_names[i] : default_var_name(i);
    const auto& node = table.tables[i];
    out += name + " " + std::to_string(node.entries.size()) + "\n";
    for (const auto& e : node.entries) {
      out += format_double(e.score);
      out += " " + std::to_string(e.parents.size());
      for (NodeId p : e.parents.members) out += " " + std::to_string(p);
      out += "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------- datasets

struct DatasetOptions {
  // nullopt: a first line containing any non-integer token is a names line,
  // and a names line is always followed by an arity line.
  std::optional<bool> header;
};

inline Dataset parse_dataset(std::string_view text, const DatasetOptions& opts = {}) {
  const auto lines = detail::tokenize(text, true);
  if (lines.empty()) fail(ErrorCode::NoVariables, "dataset is empty");

  bool header = false;
  if (opts.header) {
    header = *opts.header;
  } else {
    for (auto tok : lines[0].tokens) {
      if (!parse_integer<Code>(tok)) header = true;
    }
  }

  Dataset raw;
  std::size_t li = 0;
  raw.num_vars = lines[0].tokens.size();
  if (header) {
    for (auto tok : lines[0].tokens) raw.var_names.emplace_back(tok);
    if (lines.size() < 2) detail::fail_at(ErrorCode::ParseError, lines[0].number, "names line without arity line");
    const auto& ar = lines[1];
    if (ar.tokens.size() != raw.num_vars) detail::fail_at(ErrorCode::RaggedRow, ar.number, "arity line length mismatch");
    for (auto tok : ar.tokens) {
      auto a = parse_integer<std::size_t>(tok);
      if (!a || *a == 0) detail::fail_at(ErrorCode::ParseError, ar.number, "arity '" + std::string(tok) + "' is not a positive integer");
      raw.arities.push_back(*a);
    }
    li = 2;
  }
  for (; li < lines.size(); ++li) {
    const auto& ln = lines[li];
    if (ln.tokens.size() != raw.num_vars) {
      detail::fail_at(ErrorCode::RaggedRow, ln.number, "expected " + std::to_string(raw.num_vars) + " values, got " +
                                                            std::to_string(ln.tokens.size()));
    }
    std::vector<Code> row;
    row.reserve(raw.num_vars);
    for (auto tok : ln.tokens) {
      auto c = parse_integer<Code>(tok);
      if (!c) detail::fail_at(ErrorCode::ParseError, ln.number, "'" + std::string(tok) + "' is not an integer code");
      row.push_back(*c);
    }
    raw.rows.push_back(std::move(row));
  }
  return validate_dataset(std::move(raw));
}

/// Names line, arity line, then one space-separated row per record.
inline std::string write_dataset(const Dataset& data) {
  std::string out;
  const auto names = data.var_names.empty() ? default_var_names(data.num_vars) : data.var_names;
  for (std::size_t i = 0; i < data.num_vars; ++i) out += (i ? " " : "") + names[i];
  out += "\n";
  for (std::size_t i = 0; i < data.num_vars; ++i) out += (i ? " " : "") + std::to_string(data.arities[i]);
  out += "\n";
  for (const auto& row : data.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? " " : "") + std::to_string(row[i]);
    out += "\n";
  }
  return out;
}

// -------------------------------------------------------------------- DAGs

/// One "child <- parents..." line per node, then "score <value>".
inline std::string write_dag(const Dag& dag, const std::vector<std::string>& names = {}) {
  auto name = [&](std::size_t i) { return i < names.size() ? names[i] : default_var_name(i); };
  std::string out;
  for (std::size_t v = 0; v < dag.parents.size(); ++v) {
    out += name(v) + " <-";
    for (NodeId p : dag.parents[v].members) out += " " + name(p);
    out += "\n";
  }
  out += "score " + format_double(dag.score) + "\n";
  return out;
}

inline Dag parse_dag(std::string_view text, const std::vector<std::string>& names) {
  std::unordered_map<std::string_view, NodeId> index_of;
  for (std::size_t i = 0; i < names.size(); ++i) index_of.emplace(names[i], static_cast<NodeId>(i));
  auto lookup = [&](std::string_view tok, std::size_t line) {
    auto it = index_of.find(tok);
    if (it == index_of.end()) detail::fail_at(ErrorCode::UnknownParent, line, "unknown variable '" + std::string(tok) + "'");
    return it->second;
  };

  Dag dag;
  dag.parents.resize(names.size());
  std::vector<char> seen(names.size(), 0);
  bool have_score = false;
  for (const auto& ln : detail::tokenize(text, false)) {
    if (ln.tokens[0] == "score") {
      if (ln.tokens.size() != 2) detail::fail_at(ErrorCode::ParseError, ln.number, "expected 'score VALUE'");
      auto s = parse_double(ln.tokens[1]);
      if (!s) detail::fail_at(ErrorCode::ParseError, ln.number, "score is not a number");
      dag.score = *s;
      have_score = true;
      continue;
    }
    if (ln.tokens.size() < 2 || ln.tokens[1] != "<-") detail::fail_at(ErrorCode::ParseError, ln.number, "expected 'child <- parents'");
    const NodeId child = lookup(ln.tokens[0], ln.number);
    if (seen[child]) detail::fail_at(ErrorCode::ParseError, ln.number, "node listed twice");
    seen[child] = 1;
    std::vector<NodeId> members;
    for (std::size_t k = 2; k < ln.tokens.size(); ++k) members.push_back(lookup(ln.tokens[k], ln.number));
    auto ps = ParentSet::from_unsorted(std::move(members));
    if (ps.contains(child)) detail::fail_at(ErrorCode::CyclicStructure, ln.number, "self loop");
    dag.parents[child] = std::move(ps);
  }
  for (std::size_t v = 0; v < names.size(); ++v) {
    if (!seen[v]) fail(ErrorCode::CountMismatch, "no line for node '" + names[v] + "'");
  }
  if (!have_score) fail(ErrorCode::ParseError, "missing score line");
  if (!check_acyclic(dag)) fail(ErrorCode::CyclicStructure, "parsed structure contains a directed cycle");
  return dag;
}

}  // namespace psminobs
