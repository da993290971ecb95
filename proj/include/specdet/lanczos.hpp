#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "specdet/operators.hpp"
#include "specdet/rng.hpp"

namespace specdet {

template <class Op>
concept SymmetricOperator = requires(const Op& op, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  { op.dim() } -> std::convertible_to<Eigen::Index>;
  op.apply(x, y);
};

/// Top eigenpairs, eigenvalues in descending order.
struct EigenPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;    // N x m, unit columns
  Eigen::VectorXd residuals;  // ||B u_i - lambda_i u_i||, measured
  int restarts = 0;

  Eigen::Index m() const { return values.size(); }
  Eigen::Index dim() const { return vectors.rows(); }
};

struct LanczosOptions {
  double tol = 1e-8;
  int max_restarts = 200;
  Eigen::Index basis_size = 0;  // 0 picks max(2m + 1, m + 20), capped at N
  RngSeed seed{0x5eed, 0};
  Eigen::VectorXd start;  // initial direction; random when empty
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd best_residuals)
      : std::runtime_error(what), best_residuals_(std::move(best_residuals)) {}
  const Eigen::VectorXd& best_residuals() const { return best_residuals_; }

 private:
  Eigen::VectorXd best_residuals_;
};

namespace detail {

inline Eigen::VectorXd random_unit(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v / v.norm();
}

template <class Op>
Eigen::VectorXd measured_residuals(const Op& op, const Eigen::VectorXd& values, const Eigen::MatrixXd& vectors) {
  Eigen::VectorXd res(values.size());
  Eigen::VectorXd y(vectors.rows());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    op.apply(vectors.col(i), y);
    res[i] = (y - values[i] * vectors.col(i)).norm();
  }
  return res;
}

template <class Op>
EigenPairs dense_top_eigenpairs(const Op& op, Eigen::Index m) {
  const Eigen::Index n = op.dim();
  Eigen::MatrixXd dense(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    op.apply(e, y);
    dense.col(j) = y;
    e[j] = 0.0;
  }
  dense = 0.5 * (dense + dense.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  EigenPairs out;
  out.values.resize(m);
  out.vectors.resize(n, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    out.values[i] = es.eigenvalues()[n - 1 - i];
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  out.residuals = measured_residuals(op, out.values, out.vectors);
  return out;
}

}  // namespace detail

/// The m algebraically largest eigenpairs of a symmetric operator.
///
/// Thick-restart Lanczos (the symmetric form of implicit restarting with
/// exact shifts) with full two-pass reorthogonalization of the basis. After
/// each sweep of `basis_size` steps the Rayleigh-Ritz problem is solved, and
/// m + (basis_size - m) / 2 Ritz vectors are kept together with the residual
/// direction. A pair is converged once its Ritz residual is within
/// tol * max(1, |theta|). Invariant subspaces (exact breakdown) are continued
/// with a fresh random direction orthogonal to the basis, so degenerate and
/// low-rank operators are handled. Small problems (basis >= N) go through a
/// dense solve built from N operator applications.
template <SymmetricOperator Op>
EigenPairs top_eigenpairs(const Op& op, Eigen::Index m, const LanczosOptions& opts = {}) {
  const Eigen::Index n = op.dim();
  if (m < 1 || m > n)
    throw std::invalid_argument("requested " + std::to_string(m) + " eigenpairs of a dimension-" +
                                std::to_string(n) + " operator");
  Eigen::Index ncv = opts.basis_size > 0 ? opts.basis_size : std::max(2 * m + 1, m + 20);
  ncv = std::max(ncv, m + 2);
  if (ncv >= n) return detail::dense_top_eigenpairs(op, m);

  Rng rng(opts.seed);
  Eigen::MatrixXd basis(n, ncv + 1);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(ncv, ncv);
  if (opts.start.size() == n && opts.start.norm() > 0.0)
    basis.col(0) = opts.start / opts.start.norm();
  else
    basis.col(0) = detail::random_unit(n, rng);
  Eigen::VectorXd w(n);
  Eigen::VectorXd h, h2;
  Eigen::Index kept = 0;
  double anorm = 0.0;
  Eigen::VectorXd best(m);
  best.setConstant(std::numeric_limits<double>::infinity());

  for (int restart = 0;; ++restart) {
    double last_beta = 0.0;
    for (Eigen::Index j = kept; j < ncv; ++j) {
      op.apply(basis.col(j), w);
      const auto active = basis.leftCols(j + 1);
      h.noalias() = active.transpose() * w;
      w.noalias() -= active * h;
      h2.noalias() = active.transpose() * w;
      w.noalias() -= active * h2;
      h += h2;
      for (Eigen::Index i = 0; i <= j; ++i) t(i, j) = t(j, i) = h[i];
      anorm = std::max(anorm, h.cwiseAbs().maxCoeff());
      double beta = w.norm();
      anorm = std::max(anorm, beta);
      if (beta <= 1e-12 * anorm) {
        // Krylov space is invariant; continue in a fresh orthogonal direction.
        Eigen::VectorXd r = detail::random_unit(n, rng);
        for (int pass = 0; pass < 2; ++pass) r -= active * (active.transpose() * r);
        basis.col(j + 1) = r / r.norm();
        beta = 0.0;
      } else {
        basis.col(j + 1) = w / beta;
      }
      last_beta = beta;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    // Descending order.
    const Eigen::VectorXd theta = es.eigenvalues().reverse();
    const Eigen::MatrixXd s = es.eigenvectors().rowwise().reverse();

    bool all_converged = true;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double ritz_res = std::abs(last_beta * s(ncv - 1, i));
      best[i] = std::min(best[i], ritz_res);
      if (ritz_res > opts.tol * std::max(1.0, std::abs(theta[i]))) all_converged = false;
    }

    if (all_converged) {
      EigenPairs out;
      out.values = theta.head(m);
      out.vectors.noalias() = basis.leftCols(ncv) * s.leftCols(m);
      for (Eigen::Index i = 0; i < m; ++i) out.vectors.col(i).normalize();
      out.residuals = detail::measured_residuals(op, out.values, out.vectors);
      out.restarts = restart;
      return out;
    }
    if (restart >= opts.max_restarts)
      throw ConvergenceError("Lanczos did not converge after " + std::to_string(opts.max_restarts) + " restarts",
                             best);

    kept = std::min(ncv - 1, m + (ncv - m) / 2);
    const Eigen::MatrixXd ritz = basis.leftCols(ncv) * s.leftCols(kept);
    basis.col(kept) = basis.col(ncv);
    basis.leftCols(kept) = ritz;
    t.setZero();
    for (Eigen::Index i = 0; i < kept; ++i) {
      t(i, i) = theta[i];
      t(i, kept) = t(kept, i) = last_beta * s(ncv - 1, i);
    }
  }
}

/// max(|lambda_max|, |lambda_min|) from two extremal solves.
template <SymmetricOperator Op>
double spectral_norm(const Op& op, const LanczosOptions& opts = {}) {
  const double top = top_eigenpairs(op, 1, opts).values[0];
  const double bottom = -top_eigenpairs(NegatedOperator<Op>(op), 1, opts).values[0];
  return std::max(std::abs(top), std::abs(bottom));
}

}  // namespace specdet
