#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace specdet {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Identifies one reproducible random stream: a master seed plus a stream
/// index (typically the Monte Carlo trial number). Child streams are derived
/// by hashing, so (seed, stream) pairs never share state.
struct RngSeed {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;

  /// Stream for a sub-task of this one (background, signal, placement, ...).
  RngSeed derive(std::uint64_t salt) const {
    return {key(), detail::splitmix64(salt ^ 0x5851f42d4c957f2dULL)};
  }

  std::uint64_t key() const {
    return detail::splitmix64(master ^ detail::splitmix64(stream + 0x632be59bd9b4e019ULL));
  }

  friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

/// Salts for the sub-streams of one Monte Carlo trial.
namespace salt {
inline constexpr std::uint64_t background = 1;
inline constexpr std::uint64_t signal = 2;
inline constexpr std::uint64_t embedding = 3;
inline constexpr std::uint64_t placement = 4;
inline constexpr std::uint64_t eigensolve = 5;
inline constexpr std::uint64_t clustering = 6;
}  // namespace salt

/// Engine wrapper. Only the raw 64-bit output of mt19937_64 is used (its
/// sequence is fixed by the standard); conversions to doubles and integers
/// are done here so results do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(RngSeed seed) : engine_(seed.key()) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer on [0, n). Lemire-style rejection keeps it unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Number of failures before the first success of a Bernoulli(p) sequence.
  std::uint64_t geometric_skip(double p) {
    if (p >= 1.0) return 0;
    const double u = uniform_open0();
    const double s = std::floor(std::log(u) / std::log1p(-p));
    if (!(s < 1.8e19)) return ~std::uint64_t{0};
    return static_cast<std::uint64_t>(s);
  }

  /// Standard normal via Box-Muller.
  double normal() {
    const double u1 = uniform_open0();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace specdet
