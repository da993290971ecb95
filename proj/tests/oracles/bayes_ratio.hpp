#pragma once

#include <cmath>
#include <vector>

namespace oracle {

/// Likelihood ratio by brute force: average over all N_S-subsets X of
/// P(G | H1, X), divided by P(G | H0), each a product over every vertex pair.
inline double bayes_ratio(std::size_t n, const std::vector<std::vector<bool>>& adj, std::size_t ns, double p,
                          double ps) {
  auto likelihood = [&](const std::vector<bool>& in_subset) {
    double l = 1.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        // Under H1 a pair inside X is an edge if the background or the
        // cluster produced it.
        const double q = in_subset[i] && in_subset[j] ? 1.0 - (1.0 - p) * (1.0 - ps) : p;
        l *= adj[i][j] ? q : 1.0 - q;
      }
    return l;
  };
  const double h0 = likelihood(std::vector<bool>(n, false));
  double sum = 0.0, count = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != ns) continue;
    std::vector<bool> in(n);
    for (std::size_t i = 0; i < n; ++i) in[i] = (mask >> i) & 1u;
    sum += likelihood(in);
    count += 1.0;
  }
  return sum / count / h0;
}

}  // namespace oracle
