#include <cmath>

#include <gtest/gtest.h>

#include "oracles/bayes_ratio.hpp"
#include "specdet/oracle.hpp"
#include "specdet/verify.hpp"

using namespace specdet;

namespace {

std::vector<std::vector<bool>> adjacency_rows(const Graph& g) {
  std::vector<std::vector<bool>> adj(g.vertex_count(), std::vector<bool>(g.vertex_count(), false));
  for (const Edge& e : g.edges()) adj[e.u][e.v] = adj[e.v][e.u] = true;
  return adj;
}

Graph loop_free(std::size_t n, double p, RngSeed seed) {
  Rng rng(seed);
  std::vector<Edge> e;
  for (Vertex i = 0; i < n; ++i)
    for (Vertex j = i + 1; j < n; ++j)
      if (rng.bernoulli(p)) e.emplace_back(i, j);
  return Graph(n, std::move(e));
}

Graph clique(std::size_t n, std::size_t size, Vertex offset = 0) {
  std::vector<Edge> e;
  for (Vertex i = 0; i < size; ++i)
    for (Vertex j = i + 1; j < size; ++j) e.emplace_back(offset + i, offset + j);
  return Graph(n, std::move(e));
}

}  // namespace

TEST(LikelihoodRatio, NoClusterMeansRatioOne) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Graph g = loop_free(7, 0.4, RngSeed{s, 0});
    EXPECT_NEAR(likelihood_ratio_er(g, 3, 0.4, 0.0), 1.0, 1e-12);
  }
}

TEST(LikelihoodRatio, HandEnumeratedTriangle) {
  EXPECT_NEAR(likelihood_ratio_er(Graph(3, {{0, 1}}), 2, 0.5, 0.5), 5.0 / 6.0, 1e-14);
}

TEST(LikelihoodRatio, MatchesBayesEnumeration) {
  for (std::uint64_t s = 0; s < 40; ++s) {
    Rng rng(RngSeed{s, 1});
    const std::size_t n = 3 + rng.below(8);
    const Graph g = loop_free(n, 0.1 + 0.8 * rng.uniform(), RngSeed{s, 2});
    const auto adj = adjacency_rows(g);
    for (std::size_t ns : {std::size_t{2}, std::size_t{3}})
      for (double p : {0.2, 0.5})
        for (double ps : {0.0, 0.5, 0.9}) {
          const double expected = oracle::bayes_ratio(n, adj, ns, p, ps);
          EXPECT_LE(std::abs(likelihood_ratio_er(g, ns, p, ps) - expected), 1e-9 * std::abs(expected))
              << "n=" << n << " ns=" << ns << " p=" << p << " ps=" << ps;
        }
  }
}

TEST(LikelihoodRatio, DirectProductAgrees) {
  const Graph g = loop_free(8, 0.3, RngSeed{4, 0});
  EXPECT_NEAR(likelihood_ratio_direct(g, 3, 0.3, 0.6) / likelihood_ratio_er(g, 3, 0.3, 0.6), 1.0, 1e-12);
}

TEST(LikelihoodRatio, Guards) {
  const Graph g = loop_free(6, 0.5, RngSeed{1, 0});
  EXPECT_THROW(likelihood_ratio_er(g, 2, 0.5, 1.0), std::invalid_argument);
  EXPECT_THROW(likelihood_ratio_er(g, 2, 0.0, 0.5), std::invalid_argument);
  EXPECT_THROW(likelihood_ratio_er(g, 7, 0.5, 0.5), std::invalid_argument);
  EXPECT_THROW(likelihood_ratio_er(Graph(40), 20, 0.5, 0.5), std::invalid_argument);
  EXPECT_THROW(likelihood_ratio_er(Graph(3, {{1, 1}}), 2, 0.5, 0.5), std::invalid_argument);
}

TEST(PartitionNorms, ZeroResiduals) {
  const PartitionNorms pn = partition_norms(Graph(6), ExpectedFactors::none(6), VertexSubset({0, 1, 2}), Graph(6));
  EXPECT_EQ(pn.norm_bs, 0.0);
  EXPECT_EQ(pn.norm_bsn, 0.0);
  EXPECT_EQ(pn.norm_bn, 0.0);
  EXPECT_EQ(pn.norm_ahat, 0.0);
}

TEST(PartitionNorms, CliqueForeground) {
  const PartitionNorms pn = partition_norms(Graph(8), ExpectedFactors::none(8), VertexSubset({0, 1, 2, 3}), clique(8, 4));
  EXPECT_NEAR(pn.norm_ahat, 3.0, 1e-12);
}

TEST(PartitionNorms, SingleCrossEdge) {
  const PartitionNorms pn =
      partition_norms(Graph(6, {{1, 4}}), ExpectedFactors::none(6), VertexSubset({0, 1, 2}), Graph(6));
  EXPECT_NEAR(pn.norm_bsn, 1.0, 1e-12);
  EXPECT_EQ(pn.norm_bs, 0.0);
  EXPECT_EQ(pn.norm_bn, 0.0);
}

TEST(PartitionNorms, Guards) {
  EXPECT_THROW(partition_norms(Graph(4), ExpectedFactors::none(4), VertexSubset({0}), Graph(5)), std::invalid_argument);
  EXPECT_THROW(partition_norms(Graph(4), ExpectedFactors::none(4), VertexSubset({7}), Graph(4)), std::out_of_range);
  EXPECT_THROW(partition_norms(Graph(dense_limit + 1), ExpectedFactors::none(dense_limit + 1), VertexSubset({0}),
                               Graph(dense_limit + 1)),
               std::invalid_argument);
}

TEST(EigenvectorBound, PureSignalIsOne) {
  PartitionNorms pn;
  pn.norm_ahat = 4.0;
  EXPECT_NEAR(mass_lower_bound(pn), 1.0, 1e-15);
  const MassBoundCheck c = check_mass_bound(Graph(10), ExpectedFactors::none(10), clique(5, 5),
                                         std::vector<Vertex>{2, 3, 5, 7, 9});
  EXPECT_TRUE(c.hypothesis);
  EXPECT_NEAR(c.delta_min, 1.0, 1e-12);
  EXPECT_NEAR(c.measured, 1.0, 1e-10);
}

TEST(EigenvectorBound, WeakensAsCouplingGrows) {
  PartitionNorms pn;
  pn.norm_ahat = 10.0;
  pn.norm_bs = 1.0;
  pn.norm_bn = 3.0;
  double previous = 2.0;
  for (double coupling = 0.0; coupling <= 50.0; coupling += 0.5) {
    pn.norm_bsn = coupling;
    const double bound = mass_lower_bound(pn);
    EXPECT_LE(bound, previous + 1e-12) << coupling;
    previous = bound;
  }
  EXPECT_LT(previous, 0.05);
}

TEST(EigenvectorBound, HypothesisViolatedThrows) {
  PartitionNorms pn;
  pn.norm_ahat = 3.0;
  pn.norm_bn = 2.0;
  pn.norm_bs = 1.0;
  try {
    mass_lower_bound(pn);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("||A_hat|| > ||B_N|| + ||B_S||"), std::string::npos);
  }
}

TEST(EigenvectorBound, HoldsOnRandomEmbeddings) {
  const nlohmann::json r = run_mass_bound({.n = 256, .p = 0.006, .signal = {12, 0.9}, .trials = 15, .seed = 21});
  EXPECT_EQ(r.at("violations").get<std::size_t>(), 0u);
  EXPECT_GT(r.at("hypothesis_satisfied").get<std::size_t>(), 0u);
}

TEST(Concentration, CliqueOnEmptyBackgroundIsExact) {
  const ConcentrationReport rep =
      verify_concentration(Graph(10), ExpectedFactors::none(10), clique(4, 4), std::vector<Vertex>{1, 4, 6, 8});
  EXPECT_TRUE(rep.applicable);
  EXPECT_NEAR(rep.measured_b, 1.0, 1e-12);
  EXPECT_NEAR(rep.b_lower_bound, 1.0, 1e-12);
  EXPECT_NEAR(rep.x, 0.0, 1e-15);
}

TEST(Concentration, ClusteredSpectrumInapplicable) {
  // The background triangle and the signal triangle share the eigenvalue 2 = d_S + X.
  const ConcentrationReport rep =
      verify_concentration(clique(8, 3, 3), ExpectedFactors::none(8), clique(3, 3), std::vector<Vertex>{0, 1, 2});
  EXPECT_FALSE(rep.applicable);
  EXPECT_FALSE(rep.note.empty());
}

TEST(Concentration, RejectsIrregularSignal) {
  EXPECT_THROW(verify_concentration(Graph(6), ExpectedFactors::none(6), Graph(3, {{0, 1}}), std::vector<Vertex>{0, 1, 2}),
               std::invalid_argument);
}

TEST(Concentration, CirculantIsRegular) {
  const DegreeVector d = degrees(circulant_graph(11, 3));
  for (auto k : d.k) EXPECT_EQ(k, 6u);
  EXPECT_THROW(circulant_graph(6, 3), std::invalid_argument);
}

TEST(Concentration, BoundHoldsOnLowDegreeEmbeddings) {
  const nlohmann::json r = run_concentration({.levels = 7, .trials = 10, .seed = 31});
  EXPECT_EQ(r.at("violations").get<std::size_t>(), 0u);
  EXPECT_GT(r.at("applicable").get<std::size_t>(), 0u);
}

TEST(DegreeShift, NoShift) {
  const DeltaK d = delta_k_exact_and_bound(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d::Zero());
  EXPECT_NEAR(d.exact, 0.0, 1e-15);
  EXPECT_EQ(d.bound, 0.0);
}

TEST(DegreeShift, TwoVertexExample) {
  const DeltaK d = delta_k_exact_and_bound(Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 0));
  EXPECT_NEAR(d.exact, (2.0 + std::sqrt(10.0)) / 6.0, 1e-14);
  EXPECT_NEAR(d.bound, 1.0 + std::sqrt(2.0), 1e-14);
  EXPECT_LE(d.exact, d.bound);
}

TEST(DegreeShift, ExactNeverExceedsBound) {
  EXPECT_EQ(run_delta_k({.draws = 100, .max_vertices = 64, .seed = 17}).at("violations").get<std::size_t>(), 0u);
}

TEST(DegreeShift, Guards) {
  EXPECT_THROW(delta_k_exact_and_bound(Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones()), std::invalid_argument);
  EXPECT_THROW(delta_k_exact_and_bound(Eigen::Vector2d::Ones(), Eigen::Vector3d::Ones()), std::invalid_argument);
}

TEST(Verify, LikelihoodExperimentReportsNoViolations) {
  const nlohmann::json r = run_likelihood({.graphs = 30, .max_vertices = 8, .seed = 5, .rel_tol = 1e-9});
  EXPECT_EQ(r.at("violations").get<std::size_t>(), 0u);
  EXPECT_LE(r.at("max_relative_error").get<double>(), 1e-9);
}
