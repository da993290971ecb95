#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "specdet/graph.hpp"

namespace specdet {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A parsed edge list: the dense graph plus the original id of each vertex.
struct EdgeListGraph {
  Graph graph;
  std::vector<std::int64_t> original_ids;
};

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline bool next_token(std::string_view& rest, std::string_view& tok) {
  rest = trim(rest);
  if (rest.empty()) return false;
  std::size_t end = 0;
  while (end < rest.size() && !is_space(rest[end])) ++end;
  tok = rest.substr(0, end);
  rest.remove_prefix(end);
  return true;
}

inline std::int64_t parse_id(std::string_view tok, std::size_t line) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError(line, "expected an integer vertex id, got '" + std::string(tok) + "'");
  return value;
}

}  // namespace detail

/// Parses a SNAP-style edge list. Ids are remapped densely in order of first
/// appearance; a pair listed in either or both orientations becomes one
/// undirected edge.
inline EdgeListGraph from_edge_list(std::istream& in) {
  EdgeListGraph out;
  std::unordered_map<std::int64_t, Vertex> remap;
  auto id_of = [&](std::int64_t raw) {
    auto [it, inserted] = remap.try_emplace(raw, static_cast<Vertex>(out.original_ids.size()));
    if (inserted) out.original_ids.push_back(raw);
    return it->second;
  };

  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = detail::trim(line);
    if (rest.empty() || rest.front() == '#') continue;
    std::string_view a, b, extra;
    if (!detail::next_token(rest, a) || !detail::next_token(rest, b))
      throw ParseError(line_no, "expected two vertex ids");
    if (detail::next_token(rest, extra))
      throw ParseError(line_no, "unexpected trailing token '" + std::string(extra) + "'");
    const std::int64_t ra = detail::parse_id(a, line_no);
    const std::int64_t rb = detail::parse_id(b, line_no);
    const Vertex va = id_of(ra);
    const Vertex vb = id_of(rb);
    edges.emplace_back(va, vb);
  }
  if (edges.empty()) throw ParseError(0, "empty graph");
  out.graph = Graph(out.original_ids.size(), std::move(edges));
  return out;
}

inline EdgeListGraph from_edge_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  return from_edge_list(in);
}

inline EdgeListGraph read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list '" + path + "'");
  return from_edge_list(in);
}

/// Writes one "u v" line per edge. Lines are ordered so that re-parsing a
/// graph produced by from_edge_list reproduces the same dense ids: each
/// vertex is introduced either next to an already-seen vertex, by its
/// self-loop, or together with its successor.
inline void write_edge_list(std::ostream& out, const Graph& g) {
  const std::size_t n = g.vertex_count();
  std::vector<bool> written_intro(n, false);
  std::size_t seen_upto = 0;
  for (Vertex v = 0; v < n; ++v) {
    const auto nbrs = g.neighbors(v);
    Vertex skip = v;  // edge (v, skip) already written as introducer, if skip != v
    bool skip_active = false;
    if (v >= seen_upto) {
      if (!nbrs.empty() && nbrs.front() <= v) {
        out << nbrs.front() << ' ' << v << '\n';
        skip = nbrs.front();
        skip_active = true;
        seen_upto = v + 1;
      } else if (g.has_edge(v, v + 1)) {
        out << v << ' ' << v + 1 << '\n';
        written_intro[v + 1] = true;
        seen_upto = v + 2;
      } else {
        seen_upto = v + 1;
      }
    }
    for (Vertex w : nbrs) {
      if (w > v) break;
      if (skip_active && w == skip) continue;
      if (w + 1 == v && written_intro[v]) {
        written_intro[v] = false;
        continue;
      }
      out << w << ' ' << v << '\n';
    }
  }
}

inline std::string to_edge_list(const Graph& g) {
  std::ostringstream out;
  write_edge_list(out, g);
  return out.str();
}

}  // namespace specdet
