#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "specdet/generators.hpp"
#include "specdet/oracle.hpp"
#include "specdet/rng.hpp"

namespace specdet {

// Randomized experiments over the oracles; each returns a JSON report with a
// "violations" count.

/// Direct evaluation of the ER likelihood ratio: for every subset, the ratio
/// of per-pair likelihood products under "cluster here" and under H0.
inline double likelihood_ratio_direct(const Graph& g, std::size_t cluster_size, double p, double p_cluster) {
  const std::size_t n = g.vertex_count();
  const double p_hat = p + p_cluster - p * p_cluster;
  std::vector<int> pick(cluster_size);
  double sum = 0.0, count = 0.0;
  std::vector<bool> in(n, false);
  for (std::size_t i = 0; i < cluster_size; ++i) pick[i] = static_cast<int>(i);
  for (;;) {
    std::fill(in.begin(), in.end(), false);
    for (int v : pick) in[v] = true;
    double ratio = 1.0;
    for (Vertex i = 0; i < n; ++i)
      for (Vertex j = i + 1; j < n; ++j) {
        if (!(in[i] && in[j])) continue;
        const bool e = g.has_edge(i, j);
        ratio *= e ? p_hat / p : (1.0 - p_hat) / (1.0 - p);
      }
    sum += ratio;
    count += 1.0;
    std::size_t i = cluster_size;
    while (i > 0 && pick[i - 1] == static_cast<int>(n - cluster_size + i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < cluster_size; ++j) pick[j] = pick[j - 1] + 1;
  }
  return sum / count;
}

struct LikelihoodExperiment {
  std::size_t graphs = 500;
  std::size_t max_vertices = 8;
  std::uint64_t seed = 2;
  double rel_tol = 1e-9;
};

inline nlohmann::json run_likelihood(const LikelihoodExperiment& ex) {
  std::size_t checks = 0, violations = 0;
  double worst = 0.0;
  for (std::size_t t = 0; t < ex.graphs; ++t) {
    Rng rng(RngSeed{ex.seed, t});
    const std::size_t n = 3 + rng.below(ex.max_vertices - 2);
    const double density = 0.1 + 0.8 * rng.uniform();
    std::vector<Edge> edges;
    for (Vertex i = 0; i < n; ++i)
      for (Vertex j = i + 1; j < n; ++j)
        if (rng.bernoulli(density)) edges.emplace_back(i, j);
    const Graph g(n, std::move(edges));
    for (std::size_t ns : {2, 3})
      for (double p : {0.2, 0.5})
        for (double ps : {0.0, 0.5, 0.9}) {
          const double fast = likelihood_ratio_er(g, ns, p, ps);
          const double direct = likelihood_ratio_direct(g, ns, p, ps);
          const double rel = std::abs(fast - direct) / std::abs(direct);
          worst = std::max(worst, rel);
          ++checks;
          if (!(rel <= ex.rel_tol)) ++violations;
        }
  }
  return {{"check", "likelihood"}, {"graphs", ex.graphs}, {"comparisons", checks},
          {"max_relative_error", worst}, {"violations", violations}};
}

struct MassBoundExperiment {
  std::size_t n = 1024;
  double p = 1.6e-3;
  ClusterSignal signal{15, 0.9};
  std::size_t trials = 100;
  std::uint64_t seed = 3;
};

/// ER background, exact expected value p J, uniformly placed cluster.
inline nlohmann::json run_mass_bound(const MassBoundExperiment& ex) {
  const ExpectedFactors expected = er_expected_factors(ex.n, ex.p);
  const std::vector<double> flat(ex.n, 1.0);
  std::size_t satisfied = 0, excluded = 0, violations = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  nlohmann::json cases = nlohmann::json::array();
  for (std::size_t t = 0; t < ex.trials; ++t) {
    const RngSeed seed{ex.seed, t};
    const Graph bg = sample_er(ex.n, ex.p, seed.derive(salt::background));
    const Graph sig = sample_signal(ex.signal, seed.derive(salt::signal));
    const VertexSubset where = choose_embedding_vertices(flat, sig.vertex_count(), UniformEmbedding{}, seed.derive(salt::embedding));
    const auto placement = shuffled_placement(where, seed.derive(salt::placement));
    LanczosOptions lo;
    lo.seed = seed.derive(salt::eigensolve);
    const MassBoundCheck c = check_mass_bound(bg, expected, sig, placement, lo);
    if (!c.hypothesis) {
      ++excluded;
      continue;
    }
    ++satisfied;
    const double margin = c.measured - c.delta_min;
    min_margin = std::min(min_margin, margin);
    if (margin < 0.0) ++violations;
    cases.push_back({{"trial", t}, {"delta_min", c.delta_min}, {"measured", c.measured}});
  }
  return {{"check", "mass-bound"}, {"trials", ex.trials}, {"hypothesis_satisfied", satisfied},
          {"excluded", excluded}, {"violations", violations},
          {"min_margin", satisfied ? min_margin : 0.0}, {"cases", std::move(cases)}};
}

struct ConcentrationExperiment {
  unsigned levels = 8;  // CL degrees from the R-MAT expected degrees of 2^levels vertices
  std::size_t signal_size = 12;
  std::size_t half_degree = 3;
  double threshold = 5.0;
  std::size_t trials = 50;
  std::uint64_t seed = 10;
  double slack = 1e-9;
};

/// Regular circulant signals on low-degree vertices of a CL background,
/// residuals against the exact CL expected value.
inline nlohmann::json run_concentration(const ConcentrationExperiment& ex) {
  RmatModel rm;
  rm.levels = ex.levels;
  rm.iterations = 12 * rm.vertex_count();
  const ClModel cl{expected_degrees(rm)};
  const ExpectedFactors expected = cl_expected_factors(cl.d);
  const Graph sig = circulant_graph(ex.signal_size, ex.half_degree);
  std::size_t applicable = 0, flagged = 0, violations = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  nlohmann::json cases = nlohmann::json::array();
  for (std::size_t t = 0; t < ex.trials; ++t) {
    const RngSeed seed{ex.seed, t};
    const Graph bg = sample_cl(cl, seed.derive(salt::background));
    const VertexSubset where =
        choose_embedding_vertices(cl.d, ex.signal_size, LowDegreeEmbedding{ex.threshold}, seed.derive(salt::embedding));
    const auto placement = shuffled_placement(where, seed.derive(salt::placement));
    const ConcentrationReport rep = verify_concentration(bg, expected, sig, placement);
    if (!rep.applicable) {
      ++flagged;
      continue;
    }
    ++applicable;
    const double margin = rep.measured_b - rep.b_lower_bound;
    min_margin = std::min(min_margin, margin);
    if (margin < -ex.slack) ++violations;
    cases.push_back({{"trial", t}, {"bound", rep.b_lower_bound}, {"measured", rep.measured_b}, {"m", rep.m_star}});
  }
  return {{"check", "concentration"}, {"trials", ex.trials}, {"applicable", applicable},
          {"inapplicable", flagged}, {"violations", violations},
          {"min_margin", applicable ? min_margin : 0.0}, {"cases", std::move(cases)}};
}

struct DeltaKExperiment {
  std::size_t draws = 100;
  std::size_t max_vertices = 64;
  std::uint64_t seed = 9;
};

inline nlohmann::json run_delta_k(const DeltaKExperiment& ex) {
  std::size_t violations = 0;
  double worst_ratio = 0.0;
  for (std::size_t t = 0; t < ex.draws; ++t) {
    Rng rng(RngSeed{ex.seed, t});
    const auto n = static_cast<Eigen::Index>(2 + rng.below(ex.max_vertices - 1));
    Eigen::VectorXd k(n), kh = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) k[i] = static_cast<double>(rng.below(20));
    if (k.sum() == 0.0) k[0] = 1.0;
    const auto touched = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(std::min<Eigen::Index>(n, 16))));
    for (Eigen::Index i = 0; i < touched; ++i) kh[static_cast<Eigen::Index>(rng.below(n))] = static_cast<double>(rng.below(15));
    const DeltaK dk = delta_k_exact_and_bound(k, kh);
    if (dk.exact > dk.bound * (1.0 + 1e-12) + 1e-12) ++violations;
    if (dk.bound > 0.0) worst_ratio = std::max(worst_ratio, dk.exact / dk.bound);
  }
  return {{"check", "deltak"}, {"draws", ex.draws}, {"violations", violations}, {"max_exact_over_bound", worst_ratio}};
}

}  // namespace specdet
