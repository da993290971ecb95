#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "specdet/graph.hpp"

namespace specdet {

struct OperatingPoint {
  double p_fa = 0.0;
  double p_d = 0.0;
};

struct RocSummary {
  std::vector<OperatingPoint> points;  // from (0, 0) to (1, 1), threshold descending
  double auc = 0.0;
  double eer = 0.0;
};

/// ROC of "declare H1 when statistic >= threshold" over every pooled value.
/// Tied values move both rates in one step, so the trapezoid area credits
/// ties by half.
inline RocSummary roc(std::span<const double> h0, std::span<const double> h1) {
  if (h0.empty() || h1.empty()) throw std::invalid_argument("ROC needs statistics under both hypotheses");
  std::vector<double> s0(h0.begin(), h0.end()), s1(h1.begin(), h1.end());
  for (double v : s0)
    if (std::isnan(v)) throw std::invalid_argument("ROC statistic is NaN");
  for (double v : s1)
    if (std::isnan(v)) throw std::invalid_argument("ROC statistic is NaN");
  std::sort(s0.begin(), s0.end(), std::greater<>());
  std::sort(s1.begin(), s1.end(), std::greater<>());
  const double n0 = static_cast<double>(s0.size()), n1 = static_cast<double>(s1.size());

  RocSummary out;
  out.points.push_back({0.0, 0.0});
  std::size_t i0 = 0, i1 = 0;
  while (i0 < s0.size() || i1 < s1.size()) {
    const double t = std::max(i0 < s0.size() ? s0[i0] : -INFINITY, i1 < s1.size() ? s1[i1] : -INFINITY);
    while (i0 < s0.size() && s0[i0] == t) ++i0;
    while (i1 < s1.size() && s1[i1] == t) ++i1;
    out.points.push_back({static_cast<double>(i0) / n0, static_cast<double>(i1) / n1});
  }

  for (std::size_t k = 1; k < out.points.size(); ++k) {
    const auto& a = out.points[k - 1];
    const auto& b = out.points[k];
    out.auc += (b.p_fa - a.p_fa) * (a.p_d + b.p_d) / 2.0;
  }

  // P_fa + P_d - 1 rises from -1 to 1 along the curve; the EER is P_fa where it
  // crosses zero.
  out.eer = 0.5;
  for (std::size_t k = 1; k < out.points.size(); ++k) {
    const auto& a = out.points[k - 1];
    const auto& b = out.points[k];
    const double ga = a.p_fa + a.p_d - 1.0, gb = b.p_fa + b.p_d - 1.0;
    if (ga <= 0.0 && gb >= 0.0) {
      const double t = gb == ga ? 0.0 : -ga / (gb - ga);
      out.eer = a.p_fa + t * (b.p_fa - a.p_fa);
      break;
    }
  }
  return out;
}

/// Precision of the shortest score-ranked prefix (ties by vertex index)
/// whose recall of `truth` reaches `level`.
inline double precision_at_recall(std::span<const double> scores, const VertexSubset& truth, double level) {
  if (truth.empty()) throw std::invalid_argument("precision at recall needs a nonempty truth set");
  if (!(level > 0.0 && level <= 1.0)) throw std::invalid_argument("recall level must lie in (0, 1]");
  for (Vertex v : truth)
    if (v >= scores.size()) throw std::out_of_range("truth vertex " + std::to_string(v) + " has no score");
  std::vector<Vertex> order(scores.size());
  std::iota(order.begin(), order.end(), Vertex{0});
  std::stable_sort(order.begin(), order.end(), [&](Vertex a, Vertex b) { return scores[a] > scores[b]; });
  const double need = level * static_cast<double>(truth.size());
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (truth.contains(order[k])) ++hits;
    if (static_cast<double>(hits) >= need - 1e-12) return static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return static_cast<double>(hits) / static_cast<double>(order.size());
}

}  // namespace specdet
