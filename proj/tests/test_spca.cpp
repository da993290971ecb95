#include <cmath>

#include <gtest/gtest.h>

#include "specdet/generators.hpp"
#include "specdet/operators.hpp"
#include "specdet/spca.hpp"

using namespace specdet;

namespace {

Eigen::MatrixXd random_symmetric(Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(RngSeed{seed, 41});
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) m(i, j) = m(j, i) = scale * rng.normal();
  return m;
}

// Dense residuals of an ER graph carrying a planted clique on the first `size` vertices.
Eigen::MatrixXd planted_residuals(std::size_t n, double p, std::size_t size, std::uint64_t seed) {
  const Graph bg = sample_er(n, p, RngSeed{seed, 1});
  std::vector<Vertex> place(size);
  std::iota(place.begin(), place.end(), Vertex{0});
  const Graph g = graph_union(bg, sample_signal(ClusterSignal{size, 1.0}, RngSeed{seed, 2}), place);
  return exact_operator(g, er_expected_factors(n, p)).dense();
}

double min_eigenvalue(const Eigen::MatrixXd& x) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(x, Eigen::EigenvaluesOnly).eigenvalues()[0];
}

}  // namespace

TEST(SimplexProjection, Examples) {
  EXPECT_TRUE(project_simplex(Eigen::Vector2d(3.0, 1.0)).isApprox(Eigen::Vector2d(1.0, 0.0)));
  EXPECT_TRUE(project_simplex(Eigen::Vector2d(-1.0, -1.0)).isApprox(Eigen::Vector2d(0.5, 0.5)));
  EXPECT_THROW(project_simplex(Eigen::VectorXd()), std::invalid_argument);
}

TEST(SpectahedronProjection, Examples) {
  EXPECT_TRUE(project_spectahedron(Eigen::Vector2d(3.0, 1.0).asDiagonal().toDenseMatrix())
                  .isApprox(Eigen::Vector2d(1.0, 0.0).asDiagonal().toDenseMatrix()));
  EXPECT_TRUE(project_spectahedron(-Eigen::MatrixXd::Identity(2, 2)).isApprox(0.5 * Eigen::MatrixXd::Identity(2, 2)));
}

TEST(SpectahedronProjection, FeasibleAndIdempotent) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Eigen::MatrixXd p = project_spectahedron(random_symmetric(12, s));
    EXPECT_NEAR(p.trace(), 1.0, 1e-12);
    EXPECT_GE(min_eigenvalue(p), -1e-12);
    EXPECT_LE((project_spectahedron(p) - p).norm(), 1e-12);
  }
}

TEST(SpectahedronProjection, PartialMatchesFull) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    // Small scale pushes many eigenvalues above the threshold and exercises the dense branch.
    const double scale = s % 2 ? 1.0 : 0.02;
    const Eigen::MatrixXd y = random_symmetric(40, s, scale);
    Eigen::Index k = 2;
    const auto partial = detail::project_spectahedron_partial(y, k, Eigen::VectorXd(), RngSeed{s, 0});
    EXPECT_LE((partial.dense() - project_spectahedron(y)).norm(), 1e-8) << "seed " << s;
    EXPECT_GE(k, 2);
  }
}

TEST(Spca, ZeroPenaltyRecoversTopEigenvector) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Eigen::MatrixXd b = planted_residuals(96, 0.05, 10, s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    const Eigen::VectorXd v1 = es.eigenvectors().col(b.rows() - 1);
    const double top = es.eigenvalues()[b.rows() - 1];
    const SpcaResult r = solve_spca(b, {.lambda = 0.0, .step_size = std::nullopt, .max_iters = 200});
    EXPECT_LE(std::min((r.x_hat - v1).norm(), (r.x_hat + v1).norm()), 1e-6);
    EXPECT_LE(std::abs((b * r.x_hat_matrix).trace() - top), 1e-5 * std::abs(top));
  }
}

TEST(Spca, LargePenaltyDrivesToSingleVertex) {
  // Diagonal matrices all pay the same penalty; the largest diagonal entry of B breaks the tie.
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Eigen::MatrixXd b = random_symmetric(30, s);
    const double lambda = 1.01 * b.cwiseAbs().maxCoeff() * static_cast<double>(b.rows());
    Eigen::Index top = 0;
    b.diagonal().maxCoeff(&top);
    double previous = std::numeric_limits<double>::infinity();
    for (int iters : {100, 500, 2000}) {
      const SpcaResult r = solve_spca(b, {.lambda = lambda, .step_size = std::nullopt, .max_iters = iters});
      EXPECT_LT(r.x_hat.lpNorm<1>(), previous) << "seed " << s << " iters " << iters;
      previous = r.x_hat.lpNorm<1>();
      if (iters == 2000) {
        EXPECT_LE(previous, 1.3) << "seed " << s;
        EXPECT_GE(std::abs(r.x_hat[top]), 0.99) << "seed " << s;
      }
    }
  }
}

TEST(Spca, IteratesStayFeasibleAndImproveOnStart) {
  for (double lambda : {0.1, 0.5, 2.0}) {
    const Eigen::MatrixXd b = planted_residuals(64, 0.08, 8, 11);
    const SpcaResult r = solve_spca(b, {.lambda = lambda, .step_size = std::nullopt, .max_iters = 100});
    EXPECT_NEAR(r.x_hat_matrix.trace(), 1.0, 1e-9);
    EXPECT_GE(min_eigenvalue(r.x_hat_matrix), -1e-9);
    EXPECT_NEAR(r.x_hat.norm(), 1.0, 1e-12);
    EXPECT_GE(r.objective, r.objective_trace.front());
    EXPECT_EQ(r.objective, *std::max_element(r.objective_trace.begin(), r.objective_trace.end()));
    EXPECT_NEAR(r.objective, spca_objective(b, r.x_hat_matrix, lambda), 1e-9);
  }
}

TEST(Spca, SparsityGrowsWithPenalty) {
  const Eigen::MatrixXd b = planted_residuals(96, 0.05, 10, 4);
  double previous = std::numeric_limits<double>::infinity();
  for (double lambda : {0.0, 0.05, 0.2, 1.0}) {
    const double l1 = stat_sparse_pca(solve_spca(b, {.lambda = lambda, .step_size = std::nullopt, .max_iters = 150}));
    EXPECT_LE(l1, previous + 1e-6) << "lambda " << lambda;
    previous = l1;
  }
}

TEST(Spca, PlantedCliqueIdentified) {
  const Eigen::MatrixXd b = planted_residuals(128, 0.04, 12, 5);
  const DetectionOutcome out = identify_sparse(solve_spca(b, {.lambda = 0.5, .step_size = std::nullopt, .max_iters = 150}));
  std::size_t hit = 0;
  for (Vertex v = 0; v < 12; ++v) hit += out.flagged.contains(v);
  EXPECT_GE(hit, 10u);
  EXPECT_LE(out.flagged.size(), 16u);
}

TEST(Spca, Deterministic) {
  const Eigen::MatrixXd b = planted_residuals(48, 0.1, 6, 6);
  const SpcaResult a = solve_spca(b, {.lambda = 0.3, .step_size = std::nullopt, .max_iters = 40});
  const SpcaResult c = solve_spca(b, {.lambda = 0.3, .step_size = std::nullopt, .max_iters = 40});
  EXPECT_EQ(a.objective_trace, c.objective_trace);
  EXPECT_EQ(a.x_hat, c.x_hat);
}

TEST(Spca, RejectsBadInput) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(3, 3);
  b(0, 1) = b(1, 0) = std::nan("");
  EXPECT_THROW(solve_spca(b, {}), std::invalid_argument);
  EXPECT_THROW(solve_spca(Eigen::MatrixXd(0, 0), {}), std::invalid_argument);
  EXPECT_THROW(solve_spca(Eigen::MatrixXd::Identity(3, 3), {.lambda = -1.0, .step_size = std::nullopt}), std::invalid_argument);
  EXPECT_THROW(solve_spca(Eigen::MatrixXd::Identity(3, 3), {.step_size = 0.0}), std::invalid_argument);
  EXPECT_THROW(solve_spca(Eigen::MatrixXd::Identity(3, 2), {}), std::invalid_argument);
}
