#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specdet/graph.hpp"
#include "specdet/lanczos.hpp"
#include "specdet/rng.hpp"

namespace specdet {

/// Result of a detector or identifier. `scores` ranks every vertex (larger
/// means more likely planted) and feeds precision/recall sweeps.
struct DetectionOutcome {
  double statistic = 0.0;
  VertexSubset flagged;
  std::vector<double> scores;
};

// ---------------------------------------------------------------------------
// Spectral norm

/// Largest algebraic eigenvalue of the residuals.
inline double stat_spectral_norm(const EigenPairs& eigs) {
  if (eigs.m() < 1) throw std::invalid_argument("spectral-norm statistic needs at least one eigenpair");
  return eigs.values[0];
}

// ---------------------------------------------------------------------------
// Quadrant chi-squared

using QuadrantCounts = std::array<std::array<double, 2>, 2>;

/// Pearson statistic of a 2x2 table against the independence expectation.
/// A table with an empty row or column scores 0.
inline double chi_squared_table(const QuadrantCounts& o) {
  const double r0 = o[0][0] + o[0][1], r1 = o[1][0] + o[1][1];
  const double c0 = o[0][0] + o[1][0], c1 = o[0][1] + o[1][1];
  const double total = r0 + r1;
  if (r0 == 0 || r1 == 0 || c0 == 0 || c1 == 0) return 0.0;
  const std::array<double, 2> rows = {r0, r1};
  const std::array<double, 2> cols = {c0, c1};
  double chi2 = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double expected = rows[i] * cols[j] / total;
      const double diff = o[i][j] - expected;
      chi2 += diff * diff / expected;
    }
  return chi2;
}

namespace detail {

inline void check_pair(const Eigen::Ref<const Eigen::VectorXd>& u1, const Eigen::Ref<const Eigen::VectorXd>& u2) {
  if (u1.size() != u2.size()) throw std::invalid_argument("embedding coordinates differ in length");
}

}  // namespace detail

/// Counts points by the signs of their coordinates (zero counts as
/// nonnegative).
inline QuadrantCounts quadrant_counts(const Eigen::Ref<const Eigen::VectorXd>& u1,
                                      const Eigen::Ref<const Eigen::VectorXd>& u2) {
  detail::check_pair(u1, u2);
  QuadrantCounts o{};
  for (Eigen::Index i = 0; i < u1.size(); ++i) o[u1[i] < 0.0][u2[i] < 0.0] += 1.0;
  return o;
}

inline double chi_squared_quadrant(const Eigen::Ref<const Eigen::VectorXd>& u1,
                                   const Eigen::Ref<const Eigen::VectorXd>& u2) {
  return chi_squared_table(quadrant_counts(u1, u2));
}

/// chi-squared of the cloud rotated by theta: each point x maps to R(theta)^T x.
inline double chi_squared_at_angle(const Eigen::Ref<const Eigen::VectorXd>& u1,
                                   const Eigen::Ref<const Eigen::VectorXd>& u2, double theta) {
  detail::check_pair(u1, u2);
  const double c = std::cos(theta), s = std::sin(theta);
  QuadrantCounts o{};
  for (Eigen::Index i = 0; i < u1.size(); ++i) {
    const double x = c * u1[i] + s * u2[i];
    const double y = -s * u1[i] + c * u2[i];
    o[x < 0.0][y < 0.0] += 1.0;
  }
  return chi_squared_table(o);
}

struct Chi2Options {
  int grid = 1024;
  bool refine = true;  // golden-section search around the best grid angle
  bool exact = false;  // evaluate every constant piece between breakpoints
};

/// Maximum of chi-squared over rotations. The statistic has period pi/2 (a
/// quarter turn only relabels quadrants), so angles in [0, pi/2) suffice.
inline double stat_chi2_max(const Eigen::Ref<const Eigen::VectorXd>& u1, const Eigen::Ref<const Eigen::VectorXd>& u2,
                            const Chi2Options& opts = {}) {
  detail::check_pair(u1, u2);
  constexpr double quarter = M_PI / 2.0;
  if (opts.exact) {
    // chi2(theta) changes only where theta = atan2(u2, u1) mod pi/2.
    std::vector<double> breaks;
    breaks.reserve(u1.size());
    for (Eigen::Index i = 0; i < u1.size(); ++i) {
      if (u1[i] == 0.0 && u2[i] == 0.0) continue;
      double phi = std::fmod(std::atan2(u2[i], u1[i]), quarter);
      if (phi < 0.0) phi += quarter;
      breaks.push_back(phi);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    if (breaks.empty()) return chi_squared_at_angle(u1, u2, 0.0);
    double best = 0.0;
    for (std::size_t i = 0; i < breaks.size(); ++i) {
      const double lo = breaks[i];
      const double hi = i + 1 < breaks.size() ? breaks[i + 1] : breaks[0] + quarter;
      best = std::max(best, chi_squared_at_angle(u1, u2, 0.5 * (lo + hi)));
    }
    return best;
  }

  if (opts.grid < 2) throw std::invalid_argument("chi-squared rotation grid needs at least 2 angles");
  const double step = quarter / opts.grid;
  double best = -1.0;
  double best_theta = 0.0;
  for (int g = 0; g < opts.grid; ++g) {
    const double theta = g * step;
    const double v = chi_squared_at_angle(u1, u2, theta);
    if (v > best) {
      best = v;
      best_theta = theta;
    }
  }
  if (opts.refine) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = best_theta - step, b = best_theta + step;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = chi_squared_at_angle(u1, u2, x1), f2 = chi_squared_at_angle(u1, u2, x2);
    best = std::max({best, f1, f2});
    for (int it = 0; it < 30; ++it) {
      if (f1 >= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - inv_phi * (b - a);
        f1 = chi_squared_at_angle(u1, u2, x1);
        best = std::max(best, f1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + inv_phi * (b - a);
        f2 = chi_squared_at_angle(u1, u2, x2);
        best = std::max(best, f2);
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Eigenvector L1 deviation

struct NullCalibration {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::size_t trials_used = 0;
  std::string model_fingerprint;
  std::uint64_t seed = 0;

  std::size_t m() const { return mu.size(); }
};

struct L1Deviation {
  double statistic = 0.0;
  Eigen::Index index = 0;  // eigenvector with the most negative z-score
};

/// -min_i (||u_i||_1 - mu_i) / sigma_i over the first min(m_eigs, m_cal)
/// eigenvectors.
inline L1Deviation stat_l1_deviation(const EigenPairs& eigs, const NullCalibration& cal) {
  const Eigen::Index m = std::min<Eigen::Index>(eigs.m(), static_cast<Eigen::Index>(cal.m()));
  if (m < 1) throw std::invalid_argument("L1 statistic needs at least one calibrated eigenvector");
  L1Deviation out{-std::numeric_limits<double>::infinity(), 0};
  for (Eigen::Index i = 0; i < m; ++i) {
    const double z = (eigs.vectors.col(i).lpNorm<1>() - cal.mu[i]) / cal.sigma[i];
    if (-z > out.statistic) out = {-z, i};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Identification

/// Orients the vector by its largest-magnitude entry and flags every vertex
/// at or above `frac` of the oriented maximum.
inline DetectionOutcome identify_threshold(const Eigen::Ref<const Eigen::VectorXd>& vec, double frac = 0.3) {
  if (!(frac > 0.0 && frac <= 1.0)) throw std::invalid_argument("threshold fraction must lie in (0, 1]");
  DetectionOutcome out;
  const Eigen::Index n = vec.size();
  out.scores.assign(static_cast<std::size_t>(n), 0.0);
  if (n == 0) return out;
  Eigen::Index arg = 0;
  vec.cwiseAbs().maxCoeff(&arg);
  if (vec[arg] == 0.0) return out;
  const double sign = vec[arg] > 0.0 ? 1.0 : -1.0;
  const double top = sign * vec[arg];
  std::vector<Vertex> flagged;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.scores[i] = sign * vec[i];
    if (out.scores[i] >= frac * top) flagged.push_back(static_cast<Vertex>(i));
  }
  out.statistic = top;
  out.flagged = VertexSubset(std::move(flagged));
  return out;
}

struct KMeansOptions {
  int k = 3;
  std::size_t min_size = 5;
  int restarts = 20;
  int max_iters = 100;
  RngSeed seed{0x6b6d, 0};
};

namespace detail {

struct KMeansFit {
  std::vector<int> labels;
  std::vector<std::array<double, 2>> centers;
  double inertia = std::numeric_limits<double>::infinity();
};

inline double dist2(double x, double y, const std::array<double, 2>& c) {
  const double dx = x - c[0], dy = y - c[1];
  return dx * dx + dy * dy;
}

inline KMeansFit kmeans_once(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                             int k, int max_iters, Rng& rng) {
  const Eigen::Index n = x.size();
  KMeansFit fit;
  // k-means++ seeding.
  const auto first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  fit.centers.push_back({x[first], y[first]});
  std::vector<double> d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = dist2(x[i], y[i], fit.centers[0]);
  while (static_cast<int>(fit.centers.size()) < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (pick = 0; pick < n - 1; ++pick) {
        r -= d2[pick];
        if (r < 0.0) break;
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    fit.centers.push_back({x[pick], y[pick]});
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], dist2(x[i], y[i], fit.centers.back()));
  }

  fit.labels.assign(n, -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = dist2(x[i], y[i], fit.centers[0]);
      for (int c = 1; c < k; ++c) {
        const double d = dist2(x[i], y[i], fit.centers[c]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (fit.labels[i] != best) {
        fit.labels[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<std::array<double, 3>> acc(k, {0.0, 0.0, 0.0});
    for (Eigen::Index i = 0; i < n; ++i) {
      acc[fit.labels[i]][0] += x[i];
      acc[fit.labels[i]][1] += y[i];
      acc[fit.labels[i]][2] += 1.0;
    }
    for (int c = 0; c < k; ++c)
      if (acc[c][2] > 0.0) fit.centers[c] = {acc[c][0] / acc[c][2], acc[c][1] / acc[c][2]};
  }
  fit.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) fit.inertia += dist2(x[i], y[i], fit.centers[fit.labels[i]]);
  return fit;
}

}  // namespace detail

/// k-means in the 2-D spectral embedding; the smallest cluster holding at
/// least `min_size` points is declared the signal (ties go to the centroid
/// farthest from the origin). Scores put flagged vertices first, then rank
/// the rest by their own distance from the origin.
inline DetectionOutcome identify_kmeans(const Eigen::Ref<const Eigen::VectorXd>& u1,
                                        const Eigen::Ref<const Eigen::VectorXd>& u2, const KMeansOptions& opts = {}) {
  detail::check_pair(u1, u2);
  const Eigen::Index n = u1.size();
  if (opts.k < 2) throw std::invalid_argument("k-means needs k >= 2");
  if (opts.min_size < 1) throw std::invalid_argument("k-means minimum cluster size must be >= 1");
  if (n < opts.k) throw std::invalid_argument("k-means needs at least k points");

  Rng rng(opts.seed);
  detail::KMeansFit best;
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    auto fit = detail::kmeans_once(u1, u2, opts.k, opts.max_iters, rng);
    if (fit.inertia < best.inertia) best = std::move(fit);
  }

  std::vector<std::size_t> sizes(opts.k, 0);
  for (int label : best.labels) ++sizes[label];
  int chosen = -1;
  for (int c = 0; c < opts.k; ++c) {
    if (sizes[c] < opts.min_size) continue;
    if (chosen < 0 || sizes[c] < sizes[chosen]) {
      chosen = c;
    } else if (sizes[c] == sizes[chosen]) {
      const double dc = std::hypot(best.centers[c][0], best.centers[c][1]);
      const double dk = std::hypot(best.centers[chosen][0], best.centers[chosen][1]);
      if (dc > dk) chosen = c;
    }
  }

  DetectionOutcome out;
  out.scores.resize(n);
  double max_radius = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.scores[i] = std::hypot(u1[i], u2[i]);
    max_radius = std::max(max_radius, out.scores[i]);
  }
  if (chosen < 0) return out;
  std::vector<Vertex> flagged;
  for (Eigen::Index i = 0; i < n; ++i)
    if (best.labels[i] == chosen) {
      flagged.push_back(static_cast<Vertex>(i));
      out.scores[i] += 2.0 * max_radius + 1.0;
    }
  out.statistic = std::hypot(best.centers[chosen][0], best.centers[chosen][1]);
  out.flagged = VertexSubset(std::move(flagged));
  return out;
}

}  // namespace specdet
