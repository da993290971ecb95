#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace specdet {

using Vertex = std::uint32_t;

/// Undirected edge, stored with u <= v. A self-loop has u == v.
struct Edge {
  Vertex u = 0;
  Vertex v = 0;

  Edge() = default;
  Edge(Vertex a, Vertex b) : u(std::min(a, b)), v(std::max(a, b)) {}

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Sorted set of distinct vertex ids.
class VertexSubset {
 public:
  VertexSubset() = default;
  explicit VertexSubset(std::vector<Vertex> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    if (std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end())
      throw std::invalid_argument("vertex subset contains duplicates");
  }

  std::span<const Vertex> indices() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  bool contains(Vertex v) const { return std::binary_search(ids_.begin(), ids_.end(), v); }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

  friend bool operator==(const VertexSubset&, const VertexSubset&) = default;

 private:
  std::vector<Vertex> ids_;
};

struct DegreeVector {
  std::vector<std::uint64_t> k;
  std::uint64_t volume = 0;
};

/// Immutable undirected, unweighted graph on vertices [0, N). Edges are kept
/// as a sorted duplicate-free set; a CSR view is built at construction for
/// row iteration. Self-loops appear once in their own row, so row lengths are
/// the degrees with a self-loop counted once.
class Graph {
 public:
  Graph() = default;

  explicit Graph(std::size_t vertex_count, std::vector<Edge> edges = {})
      : n_(vertex_count), edges_(std::move(edges)) {
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    for (const Edge& e : edges_)
      if (e.v >= n_)
        throw std::out_of_range("edge endpoint " + std::to_string(e.v) + " outside [0, " +
                                std::to_string(n_) + ")");
    build_rows();
  }

  std::size_t vertex_count() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }

  std::span<const Vertex> neighbors(Vertex v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  std::size_t degree(Vertex v) const { return offsets_[v + 1] - offsets_[v]; }

  bool has_edge(Vertex a, Vertex b) const {
    return std::binary_search(edges_.begin(), edges_.end(), Edge(a, b));
  }

  bool has_self_loops() const {
    return std::any_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.u == e.v; });
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

 private:
  void build_rows() {
    offsets_.assign(n_ + 1, 0);
    for (const Edge& e : edges_) {
      ++offsets_[e.u + 1];
      if (e.u != e.v) ++offsets_[e.v + 1];
    }
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
    adjacency_.resize(offsets_[n_]);
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (const Edge& e : edges_) {
      adjacency_[fill[e.u]++] = e.v;
      if (e.u != e.v) adjacency_[fill[e.v]++] = e.u;
    }
    for (std::size_t v = 0; v < n_; ++v)
      std::sort(adjacency_.begin() + offsets_[v], adjacency_.begin() + offsets_[v + 1]);
  }

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_ = {0};
  std::vector<Vertex> adjacency_;
};

inline DegreeVector degrees(const Graph& g) {
  DegreeVector d;
  d.k.resize(g.vertex_count());
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    d.k[v] = g.degree(v);
    d.volume += d.k[v];
  }
  return d;
}

namespace detail {

inline void check_placement(const Graph& host, const Graph& guest, std::span<const Vertex> placement) {
  if (placement.size() != guest.vertex_count())
    throw std::invalid_argument("placement maps " + std::to_string(placement.size()) +
                                " vertices but the embedded graph has " +
                                std::to_string(guest.vertex_count()));
  for (Vertex v : placement)
    if (v >= host.vertex_count())
      throw std::out_of_range("placement vertex " + std::to_string(v) + " outside host graph");
}

inline std::vector<Edge> mapped_edges(const Graph& guest, std::span<const Vertex> placement) {
  std::vector<Edge> out;
  out.reserve(guest.edge_count());
  for (const Edge& e : guest.edges()) out.emplace_back(placement[e.u], placement[e.v]);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

/// Union of `host` with `guest` relabelled through `placement` (guest vertex
/// i becomes host vertex placement[i]). The result lives on host's vertices.
inline Graph graph_union(const Graph& host, const Graph& guest, std::span<const Vertex> placement) {
  detail::check_placement(host, guest, placement);
  const auto mapped = detail::mapped_edges(guest, placement);
  std::vector<Edge> merged;
  merged.reserve(host.edge_count() + mapped.size());
  std::set_union(host.edges().begin(), host.edges().end(), mapped.begin(), mapped.end(),
                 std::back_inserter(merged));
  return Graph(host.vertex_count(), std::move(merged));
}

/// Edges of the placed signal that the background does not already contain.
inline Graph foreground_residual_edges(const Graph& background, const Graph& signal,
                                       std::span<const Vertex> placement) {
  detail::check_placement(background, signal, placement);
  const auto mapped = detail::mapped_edges(signal, placement);
  std::vector<Edge> fresh;
  std::set_difference(mapped.begin(), mapped.end(), background.edges().begin(),
                      background.edges().end(), std::back_inserter(fresh));
  return Graph(background.vertex_count(), std::move(fresh));
}

}  // namespace specdet
