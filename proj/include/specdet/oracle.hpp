#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specdet/graph.hpp"
#include "specdet/lanczos.hpp"
#include "specdet/operators.hpp"

namespace specdet {

inline constexpr std::size_t dense_limit = 4096;

namespace detail {

inline double log_binomial(double n, double k) { return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1); }

inline double log_sum_exp(const std::vector<double>& xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

inline double symmetric_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline double largest_singular_value(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues()[0];
}

inline void check_dense(std::size_t n) {
  if (n > dense_limit)
    throw std::invalid_argument("graph has " + std::to_string(n) + " vertices, above the dense limit " +
                                std::to_string(dense_limit));
}

inline Eigen::MatrixXd dense_adjacency(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.vertex_count());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : g.edges()) a(e.u, e.v) = a(e.v, e.u) = 1.0;
  return a;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Likelihood ratio for an ER cluster in an ER background

/// Exact likelihood ratio of "an ER(N_S, p_S) cluster was added on some
/// N_S-subset" against "plain ER(N, p)", averaged over all subsets. Subsets
/// are grouped by their internal edge count and summed in the log domain.
inline double likelihood_ratio_er(const Graph& g, std::size_t cluster_size, double p, double p_cluster,
                                  std::uint64_t max_subsets = 10'000'000) {
  const std::size_t n = g.vertex_count();
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("background probability must lie in (0, 1)");
  if (!(p_cluster >= 0.0 && p_cluster <= 1.0)) throw std::invalid_argument("cluster probability must lie in [0, 1]");
  if (p_cluster >= 1.0) throw std::invalid_argument("degenerate likelihood: cluster probability 1");
  if (cluster_size < 1 || cluster_size > n) throw std::invalid_argument("cluster size must lie in [1, N]");
  if (g.has_self_loops()) throw std::invalid_argument("likelihood ratio is defined for graphs without self-loops");
  const double log_count = detail::log_binomial(static_cast<double>(n), static_cast<double>(cluster_size));
  if (log_count > std::log(static_cast<double>(max_subsets)) + 1e-9)
    throw std::invalid_argument("C(" + std::to_string(n) + ", " + std::to_string(cluster_size) +
                                ") subsets exceed the enumeration limit " + std::to_string(max_subsets));

  const double p_hat = p + p_cluster - p * p_cluster;
  const double pairs = static_cast<double>(cluster_size) * static_cast<double>(cluster_size - 1) / 2.0;
  const double log_base = pairs * (std::log1p(-p_hat) - std::log1p(-p));
  const double log_ratio = std::log(p_hat) + std::log1p(-p) - std::log(p) - std::log1p(-p_hat);

  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (const Edge& e : g.edges()) adj[e.u][e.v] = adj[e.v][e.u] = true;

  // Histogram of internal edge counts over all subsets.
  std::vector<double> histogram(static_cast<std::size_t>(pairs) + 1, 0.0);
  std::vector<std::size_t> pick(cluster_size);
  for (std::size_t i = 0; i < cluster_size; ++i) pick[i] = i;
  for (;;) {
    std::size_t edges = 0;
    for (std::size_t a = 0; a < cluster_size; ++a)
      for (std::size_t b = a + 1; b < cluster_size; ++b) edges += adj[pick[a]][pick[b]];
    histogram[edges] += 1.0;
    std::size_t i = cluster_size;
    while (i > 0 && pick[i - 1] == n - cluster_size + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < cluster_size; ++j) pick[j] = pick[j - 1] + 1;
  }

  std::vector<double> terms;
  for (std::size_t e = 0; e < histogram.size(); ++e)
    if (histogram[e] > 0.0) terms.push_back(std::log(histogram[e]) + static_cast<double>(e) * log_ratio);
  return std::exp(log_base + detail::log_sum_exp(terms) - log_count);
}

// ---------------------------------------------------------------------------
// Signal/background partition norms and the eigenvector concentration bound

struct PartitionNorms {
  double norm_bs = 0.0;    // background residuals within the signal vertices
  double norm_bsn = 0.0;   // between signal and non-signal vertices
  double norm_bn = 0.0;    // within the non-signal vertices
  double norm_ahat = 0.0;  // foreground edges absent from the background
};

/// Spectral norms of the blocks of B = A - U W^T split by `signal_vertices`,
/// plus that of the foreground graph `ahat`. Dense throughout.
inline PartitionNorms partition_norms(const Graph& g, const ExpectedFactors& expected,
                                      const VertexSubset& signal_vertices, const Graph& ahat) {
  const std::size_t n = g.vertex_count();
  detail::check_dense(n);
  if (ahat.vertex_count() != n) throw std::invalid_argument("foreground graph must share the background's vertices");
  const Eigen::MatrixXd b = ResidualsOperator(g, expected).dense();
  std::vector<Eigen::Index> inside, outside;
  std::vector<bool> is_signal(n, false);
  for (Vertex v : signal_vertices) {
    if (v >= n) throw std::out_of_range("signal vertex " + std::to_string(v) + " out of range");
    is_signal[v] = true;
  }
  for (std::size_t i = 0; i < n; ++i) (is_signal[i] ? inside : outside).push_back(static_cast<Eigen::Index>(i));

  const Eigen::MatrixXd a_hat = detail::dense_adjacency(ahat);
  PartitionNorms pn;
  pn.norm_bs = detail::symmetric_norm(b(inside, inside));
  pn.norm_bsn = detail::largest_singular_value(b(inside, outside));
  pn.norm_bn = detail::symmetric_norm(b(outside, outside));
  pn.norm_ahat = detail::symmetric_norm(a_hat(inside, inside));
  return pn;
}

/// Lower bound on ||u_S||^2 for the principal eigenvector u of B + A_hat.
/// Requires ||A_hat|| > ||B_N|| + ||B_S||.
inline double mass_lower_bound(const PartitionNorms& pn) {
  if (!(pn.norm_ahat > pn.norm_bn + pn.norm_bs))
    throw std::invalid_argument("bound requires ||A_hat|| > ||B_N|| + ||B_S||, got " + std::to_string(pn.norm_ahat) +
                                " <= " + std::to_string(pn.norm_bn) + " + " + std::to_string(pn.norm_bs));
  const double alpha = pn.norm_ahat + pn.norm_bs - pn.norm_bn;
  const double beta = 2.0 * pn.norm_bsn;
  const double gamma = pn.norm_bn + pn.norm_bs - pn.norm_ahat;
  const double b2 = beta * beta;
  const double disc = std::max(0.0, b2 * b2 - 4.0 * b2 * gamma * (alpha + gamma));
  return (b2 - 2.0 * alpha * gamma - std::sqrt(disc)) / (2.0 * (alpha * alpha + b2));
}

struct MassBoundCheck {
  PartitionNorms norms;
  bool hypothesis = false;
  double delta_min = std::numeric_limits<double>::quiet_NaN();
  double measured = 0.0;  // ||u_S||^2 for the top eigenvector after embedding
};

/// Embeds `signal` on `placement`, then compares the measured signal mass of
/// the principal eigenvector of B + A_hat with the bound. The expected value
/// is held fixed, so B + A_hat is exactly the residuals of the union.
inline MassBoundCheck check_mass_bound(const Graph& background, const ExpectedFactors& expected, const Graph& signal,
                                    std::span<const Vertex> placement, const LanczosOptions& opts = {}) {
  const Graph ahat = foreground_residual_edges(background, signal, placement);
  const VertexSubset where(std::vector<Vertex>(placement.begin(), placement.end()));
  MassBoundCheck out;
  out.norms = partition_norms(background, expected, where, ahat);
  out.hypothesis = out.norms.norm_ahat > out.norms.norm_bn + out.norms.norm_bs;
  if (out.hypothesis) out.delta_min = mass_lower_bound(out.norms);
  const ResidualsOperator after(graph_union(background, signal, placement), expected);
  const EigenPairs top = top_eigenpairs(after, 1, opts);
  for (Vertex v : where) out.measured += top.vectors(v, 0) * top.vectors(v, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Concentration of a regular signal on a single eigenvector

struct ConcentrationReport {
  double x = 0.0;  // x^T B x for the normalized signal indicator x
  double y = 0.0;  // ||B x||^2
  double delta = 0.0;
  double b_lower_bound = 0.0;
  double measured_b = 0.0;  // z_m^2
  Eigen::Index m_star = 0;  // position of lambda_m in descending order
  double eps1_plus = std::numeric_limits<double>::quiet_NaN();
  double eps1_minus = std::numeric_limits<double>::quiet_NaN();
  double eps2_plus = std::numeric_limits<double>::quiet_NaN();
  double eps2_minus = std::numeric_limits<double>::quiet_NaN();
  bool applicable = true;
  std::string note;
};

/// d-regular circulant graph on n vertices: i ~ i +- 1, ..., i +- half_degree.
inline Graph circulant_graph(std::size_t n, std::size_t half_degree) {
  if (2 * half_degree >= n) throw std::invalid_argument("circulant degree must be below the vertex count");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 1; s <= half_degree; ++s)
      edges.emplace_back(static_cast<Vertex>(i), static_cast<Vertex>((i + s) % n));
  return Graph(n, std::move(edges));
}

/// Embeds a d_S-regular `signal` and evaluates how strongly the signal
/// indicator concentrates on the eigenvector of M = B + A_hat nearest to
/// d_S + X. M is split as B~ + S with S the mapped signal, so the quadratic
/// identities hold exactly even where the background already has edges
/// inside the signal vertices.
inline ConcentrationReport verify_concentration(const Graph& background, const ExpectedFactors& expected,
                                                const Graph& signal, std::span<const Vertex> placement,
                                                double cluster_gap = 1e-3) {
  const std::size_t n = background.vertex_count();
  detail::check_dense(n);
  const DegreeVector sd = degrees(signal);
  if (signal.vertex_count() == 0 || signal.has_self_loops() ||
      std::adjacent_find(sd.k.begin(), sd.k.end(), std::not_equal_to<>()) != sd.k.end())
    throw std::invalid_argument("signal must be regular without self-loops");
  const double d_s = static_cast<double>(sd.k.front());
  const Graph ahat = foreground_residual_edges(background, signal, placement);

  Eigen::MatrixXd m = ResidualsOperator(background, expected).dense() + detail::dense_adjacency(ahat);
  Eigen::MatrixXd s_mapped = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  for (const Edge& e : signal.edges()) s_mapped(placement[e.u], placement[e.v]) = s_mapped(placement[e.v], placement[e.u]) = 1.0;
  const Eigen::MatrixXd b_tilde = m - s_mapped;

  Eigen::VectorXd ind = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  const double w = 1.0 / std::sqrt(static_cast<double>(placement.size()));
  for (Vertex v : placement) ind[v] = w;

  ConcentrationReport rep;
  const Eigen::VectorXd bx = b_tilde * ind;
  rep.x = ind.dot(bx);
  rep.y = bx.squaredNorm();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd lambda = es.eigenvalues().reverse();
  const Eigen::VectorXd z = (es.eigenvectors().rowwise().reverse()).transpose() * ind;
  const double target = d_s + rep.x;
  (lambda.array() - target).abs().minCoeff(&rep.m_star);
  const Eigen::Index ms = rep.m_star;
  rep.delta = target - lambda[ms];
  rep.measured_b = z[ms] * z[ms];

  const Eigen::Index close = ((lambda.array() - target).abs() < cluster_gap).count();
  if (close >= 2) {
    rep.applicable = false;
    rep.note = std::to_string(close) + " eigenvalues within " + std::to_string(cluster_gap) + " of d_S + X";
  }

  double a = 0.0, c = 0.0, s1p = 0.0, s1m = 0.0, s2p = 0.0, s2m = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (i == ms) continue;
    const double zi2 = z[i] * z[i];
    const double gap = lambda[i] - lambda[ms];
    if (i < ms) {
      a += zi2;
      s1p += gap * zi2;
      s2p += gap * gap * zi2;
    } else {
      c += zi2;
      s1m += gap * zi2;
      s2m += gap * gap * zi2;
    }
  }
  const double q = rep.delta * rep.delta + rep.y - rep.x * rep.x;
  double min_eps1 = std::numeric_limits<double>::infinity();
  double min_eps2 = std::numeric_limits<double>::infinity();
  if (a > 0.0) {
    rep.eps1_plus = s1p / a;
    rep.eps2_plus = s2p / a;
    min_eps1 = std::min(min_eps1, rep.eps1_plus);
    min_eps2 = std::min(min_eps2, rep.eps2_plus);
  }
  if (c > 0.0) {
    rep.eps1_minus = s1m / c;
    rep.eps2_minus = s2m / c;
    min_eps1 = std::min(min_eps1, -rep.eps1_minus);
    min_eps2 = std::min(min_eps2, rep.eps2_minus);
  }
  if (!(min_eps1 > 0.0) || !(min_eps2 > 0.0)) {
    rep.applicable = false;
    if (rep.note.empty()) rep.note = "nonpositive denominator";
  }
  const double t1 = std::isinf(min_eps2) ? 0.0 : q / min_eps2;
  const double t2 = std::isinf(min_eps1) ? 0.0 : std::abs(rep.delta) / min_eps1;
  rep.b_lower_bound = 1.0 - t1 - t2;
  return rep;
}

// ---------------------------------------------------------------------------
// Change of the estimated expected value under embedding

struct DeltaK {
  double exact = 0.0;
  double bound = 0.0;
};

/// Spectral norm of k k^T/|k|_1 - (k + kh)(k + kh)^T/(|k|_1 + |kh|_1) by dense
/// eigensolve, and its triangle-inequality bound.
inline DeltaK delta_k_exact_and_bound(const Eigen::Ref<const Eigen::VectorXd>& k,
                                      const Eigen::Ref<const Eigen::VectorXd>& khat) {
  if (k.size() != khat.size()) throw std::invalid_argument("degree vectors differ in length");
  detail::check_dense(static_cast<std::size_t>(k.size()));
  const double k1 = k.lpNorm<1>();
  if (!(k1 > 0.0)) throw std::invalid_argument("degree vector must be nonzero");
  const double kh1 = khat.lpNorm<1>();
  const Eigen::VectorXd after = k + khat;
  const Eigen::MatrixXd diff = k * k.transpose() / k1 - after * after.transpose() / (k1 + kh1);
  const double k2 = k.norm(), kh2 = khat.norm();
  return {detail::symmetric_norm(diff), (kh1 * k2 * k2 + 2.0 * k1 * k2 * kh2 + k1 * kh2 * kh2) / (k1 * k1)};
}

}  // namespace specdet
