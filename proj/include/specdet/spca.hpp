#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "specdet/detection.hpp"
#include "specdet/lanczos.hpp"
#include "specdet/operators.hpp"

namespace specdet {

/// Euclidean projection onto the probability simplex {w >= 0, sum w = 1}.
inline Eigen::VectorXd project_simplex(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) throw std::invalid_argument("cannot project an empty vector onto the simplex");
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0, tau = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumsum += sorted[i];
    const double t = (cumsum - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - t > 0.0) tau = t;
  }
  return (v.array() - tau).max(0.0).matrix();
}

/// Euclidean projection onto {X psd, tr X = 1} through a full dense
/// eigendecomposition.
inline Eigen::MatrixXd project_spectahedron(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
  const Eigen::VectorXd w = project_simplex(es.eigenvalues());
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

struct SpcaConfig {
  double lambda = 0.0;
  std::optional<double> step_size;  // empty selects eta0 / sqrt(k)
  int max_iters = 500;
  double obj_tol = 1e-6;
  RngSeed seed{0x59ca, 0};
};

struct SpcaResult {
  Eigen::MatrixXd x_hat_matrix;  // trace-1 psd iterate with the best objective
  Eigen::VectorXd x_hat;         // its unit principal eigenvector
  std::vector<double> objective_trace;
  double objective = -std::numeric_limits<double>::infinity();
  int iterations = 0;
};

/// tr(B X) - lambda * sum |X_ij|.
inline double spca_objective(const Eigen::MatrixXd& b, const Eigen::MatrixXd& x, double lambda) {
  return b.cwiseProduct(x).sum() - lambda * x.cwiseAbs().sum();
}

namespace detail {

/// Spectahedron projection kept in factored form V diag(w) V^T.
struct LowRankPsd {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd weights;

  Eigen::MatrixXd dense() const { return vectors * weights.asDiagonal() * vectors.transpose(); }
  Eigen::VectorXd principal() const {
    Eigen::Index arg = 0;
    weights.maxCoeff(&arg);
    return vectors.col(arg);
  }
};

inline LowRankPsd trim_projection(const Eigen::VectorXd& values, const Eigen::MatrixXd& vectors, double tau) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (values[i] > tau) keep.push_back(i);
  LowRankPsd out{Eigen::MatrixXd(vectors.rows(), keep.size()), Eigen::VectorXd(keep.size())};
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.vectors.col(c) = vectors.col(keep[c]);
    out.weights[c] = values[keep[c]] - tau;
  }
  return out;
}

/// Simplex threshold tau for the given (descending) values.
inline double simplex_threshold(const Eigen::VectorXd& desc) {
  double cumsum = 0.0, tau = 0.0;
  for (Eigen::Index i = 0; i < desc.size(); ++i) {
    cumsum += desc[i];
    const double t = (cumsum - 1.0) / static_cast<double>(i + 1);
    if (desc[i] - t > 0.0) tau = t;
  }
  return tau;
}

/// The k algebraically largest eigenpairs of a dense symmetric matrix
/// (descending) through LAPACK's relatively robust representation solver.
inline void dense_top_k(const Eigen::MatrixXd& y, Eigen::Index k, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const auto n = static_cast<lapack_int>(y.rows());
  Eigen::MatrixXd a = y;
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z(n, k);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(k));
  lapack_int found = 0;
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, a.data(), n, 0.0, 0.0, n - static_cast<lapack_int>(k) + 1, n,
                     0.0, &found, w.data(), z.data(), n, support.data());
  if (info != 0 || found != k) throw std::runtime_error("dense eigensolver failed (info " + std::to_string(info) + ")");
  values = w.head(k).reverse();
  vectors = z.rowwise().reverse();
}

/// Exact spectahedron projection of a symmetric matrix from its leading
/// eigenpairs only. With the top k+1 eigenvalues known, the simplex
/// threshold from the top k is exact as soon as it is at least the (k+1)-th
/// eigenvalue; otherwise k doubles. Lanczos handles small k, LAPACK the rest.
inline LowRankPsd project_spectahedron_partial(const Eigen::MatrixXd& y, Eigen::Index& k, const Eigen::VectorXd& start,
                                               RngSeed seed) {
  constexpr Eigen::Index lanczos_limit = 10;
  const Eigen::Index n = y.rows();
  const DenseOperator op(y);
  LanczosOptions lo;
  lo.seed = seed;
  lo.start = start;
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  for (;;) {
    k = std::min(k, n - 1);
    if (k + 1 <= lanczos_limit) {
      EigenPairs eigs = top_eigenpairs(op, k + 1, lo);
      values = std::move(eigs.values);
      vectors = std::move(eigs.vectors);
    } else {
      dense_top_k(y, k + 1, values, vectors);
    }
    const double tau = simplex_threshold(values.head(k));
    if (tau >= values[k] || k + 1 == n) {
      const double cut = k + 1 == n ? simplex_threshold(values) : tau;
      const Eigen::Index used = (values.array() > cut).count();
      // The rank in use, plus headroom, seeds the next call.
      k = std::max<Eigen::Index>(2, used + 2);
      return trim_projection(values, vectors, cut);
    }
    k *= 2;
  }
}

}  // namespace detail

/// Projected subgradient ascent on tr(B X) - lambda * 1^T |X| 1 over the
/// spectahedron, started from the top eigenvector of B. Each iterate is
/// X <- P(X + eta (B - lambda sign X)); the best iterate is returned.
inline SpcaResult solve_spca(const Eigen::MatrixXd& b, const SpcaConfig& cfg) {
  const Eigen::Index n = b.rows();
  if (n == 0 || b.cols() != n) throw std::invalid_argument("sparse PCA needs a nonempty square matrix");
  if (!b.allFinite()) throw std::invalid_argument("residuals matrix has non-finite entries");
  if (cfg.lambda < 0.0) throw std::invalid_argument("sparse PCA penalty must be nonnegative");
  if (cfg.step_size && !(*cfg.step_size > 0.0)) throw std::invalid_argument("sparse PCA step size must be positive");
  if (cfg.max_iters < 0) throw std::invalid_argument("sparse PCA iteration limit must be nonnegative");

  const DenseOperator bop(b);
  LanczosOptions lo;
  lo.seed = cfg.seed;
  const EigenPairs top = top_eigenpairs(bop, 1, lo);
  detail::LowRankPsd iterate{top.vectors, Eigen::VectorXd::Ones(1)};
  const double eta0 =
      cfg.step_size.value_or(1.0 / (std::abs(top.values[0]) + cfg.lambda * static_cast<double>(n) + 1e-12));

  SpcaResult res;
  Eigen::MatrixXd x = iterate.dense();
  double previous = spca_objective(b, x, cfg.lambda);
  res.objective_trace.push_back(previous);
  res.objective = previous;
  res.x_hat = iterate.principal();
  res.x_hat_matrix = x;

  Eigen::Index rank_hint = 4;
  Eigen::MatrixXd y(n, n);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const double eta = cfg.step_size ? *cfg.step_size : eta0 / std::sqrt(static_cast<double>(it));
    y = x + eta * b;
    if (cfg.lambda > 0.0) y -= (eta * cfg.lambda) * x.unaryExpr([](double v) { return double((v > 0.0) - (v < 0.0)); });
    y = 0.5 * (y + y.transpose()).eval();
    iterate = detail::project_spectahedron_partial(y, rank_hint, iterate.principal(), cfg.seed.derive(it));
    x = iterate.dense();
    const double f = spca_objective(b, x, cfg.lambda);
    res.objective_trace.push_back(f);
    res.iterations = it;
    if (f > res.objective) {
      res.objective = f;
      res.x_hat = iterate.principal();
      res.x_hat_matrix = x;
    }
    if (std::abs(f - previous) < cfg.obj_tol) break;
    previous = f;
  }
  res.x_hat.normalize();
  return res;
}

/// ||x_hat||_1; smaller values indicate a sparser, more anomalous component.
inline double stat_sparse_pca(const SpcaResult& res) { return res.x_hat.lpNorm<1>(); }

inline DetectionOutcome identify_sparse(const SpcaResult& res, double frac = 0.3) {
  return identify_threshold(res.x_hat, frac);
}

}  // namespace specdet
