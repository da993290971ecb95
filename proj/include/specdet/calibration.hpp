#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "specdet/detection.hpp"
#include "specdet/generators.hpp"
#include "specdet/lanczos.hpp"
#include "specdet/operators.hpp"
#include "specdet/parallel.hpp"

namespace specdet {

inline constexpr double sigma_floor = 1e-12;

namespace detail {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

/// Canonical one-line description of a noise model and expected-value mode.
inline std::string describe(const NoiseModel& model, const ExpectedMode& mode) {
  std::ostringstream os;
  os << std::setprecision(17);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ErModel>) {
          os << "er(n=" << m.n << ",p=" << m.p << ")";
        } else if constexpr (std::is_same_v<T, ClModel>) {
          std::uint64_t h = 0xcbf29ce484222325ULL;
          for (double d : m.d) h = detail::fnv1a(std::string_view(reinterpret_cast<const char*>(&d), sizeof d), h);
          os << "cl(n=" << m.d.size() << ",d=" << detail::hex64(h) << ")";
        } else {
          os << "rmat(base=" << m.base[0] << "," << m.base[1] << "," << m.base[2] << "," << m.base[3]
             << ",levels=" << m.levels << ",iterations=" << m.iterations << ",diagonal=" << m.keep_diagonal << ")";
        }
      },
      model);
  if (const auto* exact = std::get_if<ExactExpected>(&mode))
    os << ";exact(rank=" << exact->rank << ")";
  else
    os << ";estimated";
  return os.str();
}

inline std::string model_fingerprint(const NoiseModel& model, const ExpectedMode& mode) {
  return detail::hex64(detail::fnv1a(describe(model, mode)));
}

/// Per-index mean and (sample) standard deviation of L1 norms; rows are
/// trials. Standard deviations below the floor are raised to it, with a
/// warning on `log` when given.
inline NullCalibration calibration_from_norms(const std::vector<Eigen::VectorXd>& norms, std::ostream* log = nullptr) {
  if (norms.size() < 2) throw std::invalid_argument("calibration needs at least 2 trials");
  const Eigen::Index m = norms.front().size();
  NullCalibration cal;
  cal.mu.assign(m, 0.0);
  cal.sigma.assign(m, 0.0);
  cal.trials_used = norms.size();
  for (const auto& row : norms) {
    if (row.size() != m) throw std::invalid_argument("calibration trials disagree on eigenvector count");
    for (Eigen::Index i = 0; i < m; ++i) cal.mu[i] += row[i];
  }
  const double k = static_cast<double>(norms.size());
  for (auto& v : cal.mu) v /= k;
  for (const auto& row : norms)
    for (Eigen::Index i = 0; i < m; ++i) cal.sigma[i] += (row[i] - cal.mu[i]) * (row[i] - cal.mu[i]);
  std::size_t floored = 0;
  for (auto& v : cal.sigma) {
    v = std::sqrt(v / (k - 1.0));
    if (!(v >= sigma_floor)) {
      v = sigma_floor;
      ++floored;
    }
  }
  if (floored > 0 && log)
    *log << "warning: " << floored << " of " << m << " calibration deviations floored at " << sigma_floor << "\n";
  return cal;
}

struct CalibrationOptions {
  Eigen::Index m = 100;
  std::size_t trials = 200;
  std::uint64_t seed = 0xca11b;
  unsigned workers = 1;
  LanczosOptions lanczos{};
  std::ostream* log = nullptr;
};

/// Samples signal-free backgrounds and records the L1 norms of their top m
/// residuals eigenvectors.
inline NullCalibration calibrate_null(const NoiseModel& model, const ExpectedMode& mode,
                                      const CalibrationOptions& opts = {}) {
  if (opts.trials < 2) throw std::invalid_argument("calibration needs at least 2 trials");
  const ResidualsFactory factory(model, mode);
  std::vector<Eigen::VectorXd> norms(opts.trials);
  parallel_for(opts.trials, opts.workers, [&](std::size_t t) {
    const RngSeed trial{opts.seed, t};
    try {
      const auto op = factory(sample_background(model, trial.derive(salt::background)));
      LanczosOptions lo = opts.lanczos;
      lo.seed = trial.derive(salt::eigensolve);
      const auto eigs = top_eigenpairs(op, opts.m, lo);
      norms[t] = eigs.vectors.colwise().lpNorm<1>().transpose();
    } catch (const std::exception& e) {
      throw std::runtime_error("calibration trial " + std::to_string(t) + ": " + e.what());
    }
  });
  NullCalibration cal = calibration_from_norms(norms, opts.log);
  cal.model_fingerprint = model_fingerprint(model, mode);
  cal.seed = opts.seed;
  return cal;
}

inline constexpr int calibration_format_version = 1;

inline nlohmann::json to_json(const NullCalibration& cal) {
  return {{"format", "specdet-null-calibration"},
          {"version", calibration_format_version},
          {"m", cal.m()},
          {"mu", cal.mu},
          {"sigma", cal.sigma},
          {"trials_used", cal.trials_used},
          {"model_fingerprint", cal.model_fingerprint},
          {"seed", cal.seed}};
}

inline NullCalibration calibration_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "specdet-null-calibration")
    throw std::runtime_error("not a null-calibration document");
  if (j.at("version").get<int>() != calibration_format_version)
    throw std::runtime_error("unsupported calibration version " + j.at("version").dump());
  NullCalibration cal;
  cal.mu = j.at("mu").get<std::vector<double>>();
  cal.sigma = j.at("sigma").get<std::vector<double>>();
  cal.trials_used = j.at("trials_used").get<std::size_t>();
  cal.model_fingerprint = j.value("model_fingerprint", "");
  cal.seed = j.value("seed", std::uint64_t{0});
  if (cal.mu.size() != cal.sigma.size() || cal.mu.size() != j.at("m").get<std::size_t>())
    throw std::runtime_error("calibration arrays disagree with m");
  for (double s : cal.sigma)
    if (!(s >= sigma_floor)) throw std::runtime_error("calibration sigma below floor");
  return cal;
}

inline void save_calibration(const NullCalibration& cal, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << to_json(cal).dump(2) << "\n";
}

inline NullCalibration load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open calibration '" + path + "'");
  return calibration_from_json(nlohmann::json::parse(in));
}

}  // namespace specdet
