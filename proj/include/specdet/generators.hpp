#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "specdet/graph.hpp"
#include "specdet/rng.hpp"

namespace specdet {

// ---------------------------------------------------------------------------
// Models

struct ErModel {
  std::size_t n = 0;
  double p = 0.0;
};

struct ClModel {
  std::vector<double> d;  // expected degrees
};

/// Recursive-matrix generator: base 2x2 matrix [[a, b], [c, d]], 2^levels
/// vertices, `iterations` directed edge draws.
struct RmatModel {
  std::array<double, 4> base = {0.5, 0.125, 0.125, 0.25};
  unsigned levels = 0;
  std::uint64_t iterations = 0;
  bool keep_diagonal = true;  // self-pairs surviving clip-and-flip

  std::size_t vertex_count() const { return std::size_t{1} << levels; }
};

using NoiseModel = std::variant<ErModel, ClModel, RmatModel>;

struct ClusterSignal {
  std::size_t size = 0;
  double p = 0.0;
};

struct BipartiteSignal {
  std::size_t side1 = 0;
  std::size_t side2 = 0;
  double p = 0.0;
};

using SignalModel = std::variant<ClusterSignal, BipartiteSignal>;

inline void validate(const ErModel& m) {
  if (!(m.p > 0.0 && m.p < 1.0)) throw std::invalid_argument("ER probability must lie in (0, 1)");
}

inline void validate(const ClModel& m) {
  double sum = 0.0;
  for (double x : m.d) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("CL expected degrees must be finite and >= 0");
    sum += x;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("CL expected degrees must have a positive sum");
}

inline void validate(const RmatModel& m) {
  double sum = 0.0;
  for (double x : m.base) {
    if (!(x >= 0.0)) throw std::invalid_argument("R-MAT base entries must be nonnegative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("R-MAT base entries must sum to 1");
  if (m.levels > 30) throw std::invalid_argument("R-MAT level count too large");
}

inline void validate(const ClusterSignal& s) {
  if (s.size == 0) throw std::invalid_argument("cluster size must be positive");
  if (!(s.p > 0.0 && s.p <= 1.0)) throw std::invalid_argument("signal probability must lie in (0, 1]");
}

inline void validate(const BipartiteSignal& s) {
  if (s.side1 == 0 || s.side2 == 0) throw std::invalid_argument("bipartite sides must be positive");
  if (!(s.p > 0.0 && s.p <= 1.0)) throw std::invalid_argument("signal probability must lie in (0, 1]");
}

inline std::size_t vertex_count(const NoiseModel& m) {
  return std::visit(
      [](const auto& x) -> std::size_t {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ErModel>) return x.n;
        else if constexpr (std::is_same_v<T, ClModel>) return x.d.size();
        else return x.vertex_count();
      },
      m);
}

inline std::size_t vertex_count(const SignalModel& s) {
  return std::visit(
      [](const auto& x) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, ClusterSignal>) return x.size;
        else return x.side1 + x.side2;
      },
      s);
}

// ---------------------------------------------------------------------------
// Background samplers

/// Every pair i <= j (self-pairs included) independently with probability p.
/// Walks the upper triangle by geometric skips, so the cost is O(N + M).
inline Graph sample_er(std::size_t n, double p, RngSeed seed) {
  validate(ErModel{n, p});
  Rng rng(seed);
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(p * static_cast<double>(n) * static_cast<double>(n + 1) / 2.0 * 1.1) + 16);
  // Row i holds pairs (i, i..n-1): n - i slots.
  std::uint64_t row = 0;
  std::uint64_t col = 0;  // offset within the row
  std::uint64_t skip = rng.geometric_skip(p);
  while (row < n) {
    std::uint64_t remaining = n - row - col;
    while (skip >= remaining) {
      skip -= remaining;
      ++row;
      col = 0;
      if (row >= n) break;
      remaining = n - row;
    }
    if (row >= n) break;
    col += skip;
    edges.emplace_back(static_cast<Vertex>(row), static_cast<Vertex>(row + col));
    ++col;
    skip = rng.geometric_skip(p);
  }
  return Graph(n, std::move(edges));
}

inline double cl_pair_probability(const ClModel& m, double volume, std::size_t i, std::size_t j) {
  return std::min(1.0, m.d[i] * m.d[j] / volume);
}

/// Pair (i, j), i <= j, present with probability min(1, d_i d_j / sum d).
/// Uses the sorted-skip scheme of Miller and Hagberg: within a row, vertices
/// are visited in decreasing d, so the proposal probability only shrinks and
/// a geometric skip plus an acceptance test samples each pair exactly once.
inline Graph sample_cl(const ClModel& model, RngSeed seed) {
  validate(model);
  const std::size_t n = model.d.size();
  const double volume = std::accumulate(model.d.begin(), model.d.end(), 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return model.d[a] > model.d[b]; });

  Rng rng(seed);
  std::vector<Edge> edges;
  for (std::size_t ui = 0; ui < n; ++ui) {
    const std::size_t u = order[ui];
    if (model.d[u] == 0.0) break;
    std::size_t vi = ui;
    double p = cl_pair_probability(model, volume, u, order[vi]);
    while (vi < n && p > 0.0) {
      if (p < 1.0) {
        const std::uint64_t s = rng.geometric_skip(p);
        if (s >= n - vi) break;
        vi += s;
      }
      const std::size_t v = order[vi];
      const double q = cl_pair_probability(model, volume, u, v);
      if (rng.uniform() < q / p) edges.emplace_back(static_cast<Vertex>(u), static_cast<Vertex>(v));
      p = q;
      ++vi;
    }
  }
  return Graph(n, std::move(edges));
}

inline std::vector<double> expected_degrees(const ClModel& m) { return m.d; }

// ---------------------------------------------------------------------------
// R-MAT

/// Probability that the directed cell (i, j) is hit by one draw: product over
/// levels of the base cell selected by the matching bits of i and j.
inline double rmat_cell_probability(const RmatModel& m, std::uint64_t i, std::uint64_t j) {
  double prob = 1.0;
  for (unsigned level = 0; level < m.levels; ++level) {
    const unsigned bi = (i >> level) & 1U;
    const unsigned bj = (j >> level) & 1U;
    prob *= m.base[2 * bi + bj];
  }
  return prob;
}

/// 1 - (1 - p_hat_ij)^t: the chance that cell (i, j) is hit at least once.
inline double rmat_edge_probability(const RmatModel& m, std::uint64_t i, std::uint64_t j) {
  const std::uint64_t n = m.vertex_count();
  if (i >= n || j >= n) throw std::out_of_range("R-MAT vertex outside [0, 2^levels)");
  if (m.iterations == 0) return 0.0;
  const double phat = rmat_cell_probability(m, i, j);
  return -std::expm1(static_cast<double>(m.iterations) * std::log1p(-phat));
}

/// Undirected edge probability after clip-and-flip: the upper-triangle cell
/// decides the pair.
inline double rmat_pair_probability(const RmatModel& m, std::uint64_t i, std::uint64_t j) {
  if (i == j && !m.keep_diagonal) return 0.0;
  return rmat_edge_probability(m, std::min(i, j), std::max(i, j));
}

/// Draws `iterations` directed cells by quadrant descent, drops cells below
/// the diagonal and mirrors the rest (clip-and-flip).
inline Graph sample_rmat(const RmatModel& model, RngSeed seed) {
  validate(model);
  Rng rng(seed);
  const double a = model.base[0];
  const double ab = a + model.base[1];
  const double abc = ab + model.base[2];
  std::vector<Edge> edges;
  edges.reserve(model.iterations / 2 + 16);
  for (std::uint64_t it = 0; it < model.iterations; ++it) {
    std::uint64_t row = 0, col = 0;
    for (unsigned level = 0; level < model.levels; ++level) {
      const double r = rng.uniform();
      const unsigned quadrant = r < a ? 0U : r < ab ? 1U : r < abc ? 2U : 3U;
      row |= std::uint64_t{quadrant >> 1} << level;
      col |= std::uint64_t{quadrant & 1U} << level;
    }
    if (row > col) continue;
    if (row == col && !model.keep_diagonal) continue;
    edges.emplace_back(static_cast<Vertex>(row), static_cast<Vertex>(col));
  }
  return Graph(model.vertex_count(), std::move(edges));
}

/// d_i = sum_j p_ij of the undirected R-MAT probability matrix.
inline std::vector<double> expected_degrees(const RmatModel& m) {
  const std::size_t n = m.vertex_count();
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double p = rmat_pair_probability(m, i, j);
      d[i] += p;
      if (j != i) d[j] += p;
    }
  return d;
}

inline std::vector<double> expected_degrees(const ErModel& m) {
  return std::vector<double>(m.n, m.p * static_cast<double>(m.n));
}

inline std::vector<double> expected_degrees(const NoiseModel& m) {
  return std::visit([](const auto& x) { return expected_degrees(x); }, m);
}

inline Graph sample_background(const NoiseModel& m, RngSeed seed) {
  return std::visit(
      [&](const auto& x) -> Graph {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ErModel>) return sample_er(x.n, x.p, seed);
        else if constexpr (std::is_same_v<T, ClModel>) return sample_cl(x, seed);
        else return sample_rmat(x, seed);
      },
      m);
}

// ---------------------------------------------------------------------------
// Signals and placement

/// Cluster: each of the C(N_S, 2) pairs with probability p_S. Bipartite:
/// vertices [0, N_1) form side one; each cross pair with probability p_S.
/// No self-loops in either.
inline Graph sample_signal(const SignalModel& model, RngSeed seed) {
  Rng rng(seed);
  std::vector<Edge> edges;
  return std::visit(
      [&](const auto& s) -> Graph {
        validate(s);
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ClusterSignal>) {
          for (std::size_t i = 0; i < s.size; ++i)
            for (std::size_t j = i + 1; j < s.size; ++j)
              if (rng.bernoulli(s.p)) edges.emplace_back(static_cast<Vertex>(i), static_cast<Vertex>(j));
          return Graph(s.size, std::move(edges));
        } else {
          for (std::size_t i = 0; i < s.side1; ++i)
            for (std::size_t j = 0; j < s.side2; ++j)
              if (rng.bernoulli(s.p)) edges.emplace_back(static_cast<Vertex>(i), static_cast<Vertex>(s.side1 + j));
          return Graph(s.side1 + s.side2, std::move(edges));
        }
      },
      model);
}

/// Mean internal degree of the signal model, 2 E|E_S| / |V_S|.
inline double signal_average_degree(const SignalModel& model) {
  return std::visit(
      [](const auto& s) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, ClusterSignal>)
          return s.p * static_cast<double>(s.size - 1);
        else
          return 2.0 * s.p * static_cast<double>(s.side1 * s.side2) / static_cast<double>(s.side1 + s.side2);
      },
      model);
}

struct UniformEmbedding {};
struct LowDegreeEmbedding {
  double threshold = 5.0;
};
using EmbeddingPolicy = std::variant<UniformEmbedding, LowDegreeEmbedding>;

/// Picks N_S distinct vertices uniformly from the candidate pool (all
/// vertices, or those with expected degree below the threshold).
inline VertexSubset choose_embedding_vertices(std::span<const double> expected_degrees, std::size_t count,
                                              const EmbeddingPolicy& policy, RngSeed seed) {
  std::vector<Vertex> pool;
  if (const auto* low = std::get_if<LowDegreeEmbedding>(&policy)) {
    for (std::size_t i = 0; i < expected_degrees.size(); ++i)
      if (expected_degrees[i] < low->threshold) pool.push_back(static_cast<Vertex>(i));
  } else {
    pool.resize(expected_degrees.size());
    std::iota(pool.begin(), pool.end(), Vertex{0});
  }
  if (pool.size() < count)
    throw std::invalid_argument("embedding pool has " + std::to_string(pool.size()) + " vertices, need " +
                                std::to_string(count));
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return VertexSubset(std::move(pool));
}

/// Random bijection from signal vertices onto the chosen subset.
inline std::vector<Vertex> shuffled_placement(const VertexSubset& subset, RngSeed seed) {
  std::vector<Vertex> placement(subset.begin(), subset.end());
  Rng rng(seed);
  for (std::size_t i = placement.size(); i > 1; --i) std::swap(placement[i - 1], placement[rng.below(i)]);
  return placement;
}

}  // namespace specdet
