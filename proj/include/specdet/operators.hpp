#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

#include <Eigen/Dense>

#include "specdet/generators.hpp"
#include "specdet/graph.hpp"

namespace specdet {

/// Low-rank expected value E[A] = U * W^T, both N x r.
struct ExpectedFactors {
  Eigen::MatrixXd u;
  Eigen::MatrixXd w;

  Eigen::Index rank() const { return u.cols(); }

  static ExpectedFactors none(Eigen::Index n) { return {Eigen::MatrixXd(n, 0), Eigen::MatrixXd(n, 0)}; }
};

/// Residuals B = A - U W^T applied matrix-free: one sparse pass over the
/// adjacency rows plus two N x r products. Immutable once built.
class ResidualsOperator {
 public:
  ResidualsOperator(Graph graph, ExpectedFactors expected)
      : graph_(std::move(graph)), expected_(std::move(expected)) {
    const auto n = static_cast<Eigen::Index>(graph_.vertex_count());
    if (expected_.u.rows() != n || expected_.w.rows() != n || expected_.u.cols() != expected_.w.cols())
      throw std::invalid_argument("expected-value factors must both be " + std::to_string(n) +
                                  " x r, got " + std::to_string(expected_.u.rows()) + " x " +
                                  std::to_string(expected_.u.cols()) + " and " +
                                  std::to_string(expected_.w.rows()) + " x " + std::to_string(expected_.w.cols()));
  }

  Eigen::Index dim() const { return static_cast<Eigen::Index>(graph_.vertex_count()); }
  const Graph& graph() const { return graph_; }
  const ExpectedFactors& expected() const { return expected_; }

  void apply(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> y) const {
    for (Vertex i = 0; i < graph_.vertex_count(); ++i) {
      double acc = 0.0;
      for (Vertex j : graph_.neighbors(i)) acc += x[j];
      y[i] = acc;
    }
    if (expected_.rank() > 0) y.noalias() -= expected_.u * (expected_.w.transpose() * x);
  }

  Eigen::VectorXd operator*(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y(dim());
    apply(x, y);
    return y;
  }

  /// Dense N x N materialization; only for small-N oracles and sparse PCA.
  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd b = -(expected_.u * expected_.w.transpose());
    for (const Edge& e : graph_.edges()) {
      b(e.u, e.v) += 1.0;
      if (e.u != e.v) b(e.v, e.u) += 1.0;
    }
    return b;
  }

 private:
  Graph graph_;
  ExpectedFactors expected_;
};

/// Rank-1 estimate k k^T / Vol(G) from observed degrees.
inline ResidualsOperator modularity_operator(Graph g) {
  const DegreeVector deg = degrees(g);
  if (deg.volume == 0) throw std::invalid_argument("modularity of an empty graph (volume 0)");
  const auto n = static_cast<Eigen::Index>(g.vertex_count());
  ExpectedFactors f{Eigen::MatrixXd(n, 1), Eigen::MatrixXd(n, 1)};
  const double vol = static_cast<double>(deg.volume);
  for (Eigen::Index i = 0; i < n; ++i) {
    f.u(i, 0) = static_cast<double>(deg.k[i]);
    f.w(i, 0) = static_cast<double>(deg.k[i]) / vol;
  }
  return ResidualsOperator(std::move(g), std::move(f));
}

inline ResidualsOperator exact_operator(Graph g, ExpectedFactors expected) {
  return ResidualsOperator(std::move(g), std::move(expected));
}

/// E[A] = p 1 1^T.
inline ExpectedFactors er_expected_factors(std::size_t n, double p) {
  const auto nn = static_cast<Eigen::Index>(n);
  return {Eigen::MatrixXd::Constant(nn, 1, p), Eigen::MatrixXd::Ones(nn, 1)};
}

/// E[A] = d d^T / sum(d), the unclamped Chung-Lu probability matrix.
inline ExpectedFactors cl_expected_factors(std::span<const double> d) {
  const auto n = static_cast<Eigen::Index>(d.size());
  const double vol = std::accumulate(d.begin(), d.end(), 0.0);
  if (!(vol > 0.0)) throw std::invalid_argument("expected degrees must have a positive sum");
  ExpectedFactors f{Eigen::MatrixXd(n, 1), Eigen::MatrixXd(n, 1)};
  for (Eigen::Index i = 0; i < n; ++i) {
    f.u(i, 0) = d[i];
    f.w(i, 0) = d[i] / vol;
  }
  return f;
}

/// Dense undirected R-MAT probability matrix P.
inline Eigen::MatrixXd rmat_probability_matrix(const RmatModel& m) {
  const auto n = static_cast<Eigen::Index>(m.vertex_count());
  Eigen::MatrixXd p(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) p(i, j) = p(j, i) = rmat_pair_probability(m, i, j);
  return p;
}

/// Best rank-r symmetric approximation of P: the r eigenpairs of largest
/// magnitude, U = V diag(lambda), W = V.
inline ExpectedFactors truncated_eigen_factors(const Eigen::MatrixXd& p, Eigen::Index rank) {
  const Eigen::Index n = p.rows();
  if (rank > n) throw std::invalid_argument("rank " + std::to_string(rank) + " exceeds dimension " + std::to_string(n));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p);
  const Eigen::VectorXd& lambda = es.eigenvalues();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(lambda[a]) > std::abs(lambda[b]); });
  ExpectedFactors f{Eigen::MatrixXd(n, rank), Eigen::MatrixXd(n, rank)};
  for (Eigen::Index c = 0; c < rank; ++c) {
    f.w.col(c) = es.eigenvectors().col(order[c]);
    f.u.col(c) = lambda[order[c]] * f.w.col(c);
  }
  return f;
}

inline ExpectedFactors rmat_expected_factors(const RmatModel& m, Eigen::Index rank) {
  validate(m);
  return truncated_eigen_factors(rmat_probability_matrix(m), rank);
}

struct EstimatedExpected {};
struct ExactExpected {
  Eigen::Index rank = 100;  // R-MAT truncation; ER and CL are exactly rank 1
};
using ExpectedMode = std::variant<EstimatedExpected, ExactExpected>;

/// The model's own expected value as low-rank factors.
inline ExpectedFactors model_expected_factors(const NoiseModel& model, Eigen::Index rank) {
  return std::visit(
      [&](const auto& m) -> ExpectedFactors {
        using T = std::decay_t<decltype(m)>;
        validate(m);
        if constexpr (std::is_same_v<T, ErModel>) return er_expected_factors(m.n, m.p);
        else if constexpr (std::is_same_v<T, ClModel>) return cl_expected_factors(m.d);
        else return rmat_expected_factors(m, std::min<Eigen::Index>(rank, static_cast<Eigen::Index>(m.vertex_count())));
      },
      model);
}

/// E[A_S] of a signal model: p J for a cluster (diagonal included, so its
/// norm is p N_S), p times the two off-diagonal all-ones blocks for a
/// bipartite graph.
inline ExpectedFactors signal_expected_factors(const SignalModel& model) {
  return std::visit(
      [](const auto& s) -> ExpectedFactors {
        using T = std::decay_t<decltype(s)>;
        validate(s);
        if constexpr (std::is_same_v<T, ClusterSignal>) {
          return er_expected_factors(s.size, s.p);
        } else {
          const auto n1 = static_cast<Eigen::Index>(s.side1), n = static_cast<Eigen::Index>(s.side1 + s.side2);
          ExpectedFactors f{Eigen::MatrixXd::Zero(n, 2), Eigen::MatrixXd::Zero(n, 2)};
          f.u.col(0).head(n1).setConstant(s.p);
          f.w.col(0).tail(n - n1).setOnes();
          f.u.col(1).tail(n - n1).setConstant(s.p);
          f.w.col(1).head(n1).setOnes();
          return f;
        }
      },
      model);
}

/// Builds residuals operators for one noise model under one expected-value
/// mode. Exact factors are computed once and shared by every graph.
class ResidualsFactory {
 public:
  ResidualsFactory(const NoiseModel& model, ExpectedMode mode) : mode_(mode) {
    if (const auto* exact = std::get_if<ExactExpected>(&mode_)) factors_ = model_expected_factors(model, exact->rank);
  }

  ResidualsOperator operator()(Graph g) const {
    if (std::holds_alternative<EstimatedExpected>(mode_)) return modularity_operator(std::move(g));
    return exact_operator(std::move(g), factors_);
  }

  const ExpectedMode& mode() const { return mode_; }

 private:
  ExpectedMode mode_;
  ExpectedFactors factors_;
};

/// -Op, for extremal solves from the bottom of the spectrum.
template <class Op>
class NegatedOperator {
 public:
  explicit NegatedOperator(const Op& op) : op_(op) {}
  Eigen::Index dim() const { return op_.dim(); }
  void apply(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> y) const {
    op_.apply(x, y);
    y = -y;
  }

 private:
  const Op& op_;
};

/// Dense symmetric matrix as an operator.
class DenseOperator {
 public:
  explicit DenseOperator(const Eigen::MatrixXd& m) : m_(m) {}
  Eigen::Index dim() const { return m_.rows(); }
  void apply(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> y) const {
    y.noalias() = m_.selfadjointView<Eigen::Lower>() * x;
  }

 private:
  const Eigen::MatrixXd& m_;
};

}  // namespace specdet
