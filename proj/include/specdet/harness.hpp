#pragma once

#include <chrono>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "specdet/calibration.hpp"
#include "specdet/config.hpp"
#include "specdet/detection.hpp"
#include "specdet/generators.hpp"
#include "specdet/lanczos.hpp"
#include "specdet/metrics.hpp"
#include "specdet/operators.hpp"
#include "specdet/parallel.hpp"
#include "specdet/spca.hpp"

namespace specdet {

enum class Hypothesis { h0, h1 };

inline const char* to_string(Hypothesis h) { return h == Hypothesis::h0 ? "H0" : "H1"; }

/// One detector's result on one trial. Statistics are oriented so larger
/// means more anomalous.
struct TrialRecord {
  std::size_t trial = 0;
  Hypothesis hypothesis = Hypothesis::h0;
  std::string detector;
  double statistic = 0.0;
  double runtime_ms = 0.0;
  VertexSubset planted;
  VertexSubset flagged;
  std::vector<double> scores;
  std::vector<double> precision;  // per configured recall level, H1 only
};

inline std::string detector_name(DetectorKind k) {
  switch (k) {
    case DetectorKind::specnorm: return "specnorm";
    case DetectorKind::chi2: return "chi2";
    case DetectorKind::l1: return "l1";
    case DetectorKind::spca: return "spca";
  }
  return "?";
}

inline std::string spca_detector_name(double lambda_factor) {
  std::ostringstream os;
  os << "spca@" << lambda_factor;
  return os.str();
}

/// Seed of trial t under a hypothesis. H0 streams depend only on the master
/// seed, so signal-free records are shared by any configs that agree on the
/// noise model.
inline RngSeed trial_seed(std::uint64_t master, Hypothesis h, std::size_t t) {
  return RngSeed{master, t}.derive(h == Hypothesis::h0 ? 0x4830 : 0x4831);
}

struct TrialGraph {
  Graph graph;
  VertexSubset planted;  // empty under H0
};

/// Background, plus under H1 the signal united on vertices chosen by the
/// embedding policy.
inline TrialGraph sample_trial_graph(const ExperimentConfig& cfg, std::span<const double> expected_degrees,
                                     Hypothesis h, RngSeed seed) {
  TrialGraph out{sample_background(cfg.noise, seed.derive(salt::background)), {}};
  if (h == Hypothesis::h1) {
    if (!cfg.signal) throw std::invalid_argument("H1 trials need a signal model");
    const Graph sig = sample_signal(*cfg.signal, seed.derive(salt::signal));
    out.planted = choose_embedding_vertices(expected_degrees, sig.vertex_count(), cfg.embedding,
                                            seed.derive(salt::embedding));
    const auto placement = shuffled_placement(out.planted, seed.derive(salt::placement));
    out.graph = graph_union(out.graph, sig, placement);
  }
  return out;
}

/// Everything a run needs besides the per-trial randomness.
class TrialRunner {
 public:
  TrialRunner(const ExperimentConfig& cfg, const NullCalibration* calibration)
      : cfg_(cfg), factory_(cfg.noise, cfg.expected), calibration_(calibration),
        expected_degrees_(expected_degrees(cfg.noise)) {
    for (DetectorKind k : cfg.detectors.kinds) {
      if (k == DetectorKind::l1 && !calibration_) throw std::invalid_argument("L1 detector needs a null calibration");
      const Eigen::Index need = k == DetectorKind::chi2 ? 2
                                : k == DetectorKind::l1 ? static_cast<Eigen::Index>(calibration_->m())
                                                        : 1;
      eigenpairs_ = std::max(eigenpairs_, need);
    }
    const auto n = static_cast<Eigen::Index>(vertex_count(cfg.noise));
    if (eigenpairs_ > n) throw std::invalid_argument("more eigenpairs requested than vertices");
  }

  RngSeed trial_seed(Hypothesis h, std::size_t t) const { return specdet::trial_seed(cfg_.seed, h, t); }

  std::vector<TrialRecord> run(Hypothesis h, std::size_t t) const {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const RngSeed seed = trial_seed(h, t);
    TrialGraph tg = sample_trial_graph(cfg_, expected_degrees_, h, seed);
    const VertexSubset& planted = tg.planted;
    const ResidualsOperator op = factory_(std::move(tg.graph));
    LanczosOptions lo = cfg_.lanczos;
    lo.seed = seed.derive(salt::eigensolve);
    const EigenPairs eigs = top_eigenpairs(op, eigenpairs_, lo);
    const double shared_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();

    std::vector<TrialRecord> out;
    auto emit = [&](std::string name, double statistic, DetectionOutcome outcome, clock::time_point t0) {
      TrialRecord r;
      r.trial = t;
      r.hypothesis = h;
      r.detector = std::move(name);
      r.statistic = statistic;
      r.runtime_ms = shared_ms + std::chrono::duration<double, std::milli>(clock::now() - t0).count();
      r.planted = planted;
      r.flagged = std::move(outcome.flagged);
      if (h == Hypothesis::h1)
        for (double level : cfg_.recall_levels) r.precision.push_back(precision_at_recall(outcome.scores, planted, level));
      r.scores = std::move(outcome.scores);
      out.push_back(std::move(r));
    };

    const auto& d = cfg_.detectors;
    for (DetectorKind k : d.kinds) {
      const auto t0 = clock::now();
      switch (k) {
        case DetectorKind::specnorm:
          emit("specnorm", stat_spectral_norm(eigs), identify_threshold(eigs.vectors.col(0), d.threshold), t0);
          break;
        case DetectorKind::chi2: {
          KMeansOptions km = d.kmeans;
          km.seed = seed.derive(salt::clustering);
          emit("chi2", stat_chi2_max(eigs.vectors.col(0), eigs.vectors.col(1), d.chi2),
               identify_kmeans(eigs.vectors.col(0), eigs.vectors.col(1), km), t0);
          break;
        }
        case DetectorKind::l1: {
          const L1Deviation dev = stat_l1_deviation(eigs, *calibration_);
          emit("l1", dev.statistic, identify_threshold(eigs.vectors.col(dev.index), d.threshold), t0);
          break;
        }
        case DetectorKind::spca: {
          const Eigen::MatrixXd b = op.dense();
          const double scale = eigs.values[0] / static_cast<double>(op.dim());
          for (double factor : d.spca_lambdas) {
            const auto ts = clock::now();
            SpcaConfig sc;
            sc.lambda = factor * std::max(scale, 0.0);
            sc.max_iters = d.spca_max_iters;
            sc.obj_tol = d.spca_obj_tol;
            sc.seed = seed.derive(salt::eigensolve + 100);
            const SpcaResult res = solve_spca(b, sc);
            emit(spca_detector_name(factor), -stat_sparse_pca(res), identify_sparse(res, d.threshold), ts);
          }
          break;
        }
      }
    }
    if (!cfg_.timing)
      for (auto& r : out) r.runtime_ms = 0.0;
    return out;
  }

 private:
  const ExperimentConfig& cfg_;
  ResidualsFactory factory_;
  const NullCalibration* calibration_;
  std::vector<double> expected_degrees_;
  Eigen::Index eigenpairs_ = 1;
};

/// The L1 detector's calibration: loaded from the configured file, else
/// computed from signal-free draws with a seed distinct from the trials.
inline std::optional<NullCalibration> resolve_calibration(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  const auto& kinds = cfg.detectors.kinds;
  if (std::find(kinds.begin(), kinds.end(), DetectorKind::l1) == kinds.end()) return std::nullopt;
  if (cfg.detectors.calibration_path) {
    NullCalibration cal = load_calibration(*cfg.detectors.calibration_path);
    const std::string want = model_fingerprint(cfg.noise, cfg.expected);
    if (log && cal.model_fingerprint != want)
      *log << "warning: calibration fingerprint " << cal.model_fingerprint << " does not match model " << want << "\n";
    return cal;
  }
  CalibrationOptions co;
  co.m = std::min<Eigen::Index>(cfg.detectors.eigenpairs, static_cast<Eigen::Index>(vertex_count(cfg.noise)));
  co.trials = cfg.detectors.calibration_trials;
  co.seed = detail::splitmix64(cfg.seed ^ 0xca11b7a7e0000000ULL);
  co.workers = cfg.workers ? cfg.workers : default_workers();
  co.lanczos = cfg.lanczos;
  co.log = log;
  return calibrate_null(cfg.noise, cfg.expected, co);
}

/// Runs `trials` trials of one hypothesis; records come back ordered by
/// trial index and then detector.
inline std::vector<TrialRecord> run_trials(const ExperimentConfig& cfg, Hypothesis h, const NullCalibration* cal) {
  const TrialRunner runner(cfg, cal);
  std::vector<std::vector<TrialRecord>> per_trial(cfg.trials);
  parallel_for(cfg.trials, cfg.workers ? cfg.workers : default_workers(), [&](std::size_t t) {
    try {
      per_trial[t] = runner.run(h, t);
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string(to_string(h)) + " trial " + std::to_string(t) + ": " + e.what());
    }
  });
  std::vector<TrialRecord> out;
  for (auto& v : per_trial)
    for (auto& r : v) out.push_back(std::move(r));
  return out;
}

/// H0 trials, then H1 trials when a signal model is configured.
inline std::vector<TrialRecord> run_monte_carlo(const ExperimentConfig& cfg, const NullCalibration* cal = nullptr,
                                                std::ostream* log = nullptr) {
  std::optional<NullCalibration> owned;
  if (!cal) {
    owned = resolve_calibration(cfg, log);
    if (owned) cal = &*owned;
  }
  auto records = run_trials(cfg, Hypothesis::h0, cal);
  if (cfg.signal) {
    auto h1 = run_trials(cfg, Hypothesis::h1, cal);
    records.insert(records.end(), std::make_move_iterator(h1.begin()), std::make_move_iterator(h1.end()));
  }
  return records;
}

struct DetectorSummary {
  std::string detector;
  RocSummary roc;
  std::vector<double> mean_precision;  // per recall level, over H1 trials
  std::size_t h0_trials = 0;
  std::size_t h1_trials = 0;
};

inline std::vector<DetectorSummary> summarize(const std::vector<TrialRecord>& records,
                                              const std::vector<double>& recall_levels) {
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> stats;
  std::map<std::string, std::vector<double>> precision_sums;
  for (const auto& r : records) {
    if (!stats.count(r.detector)) order.push_back(r.detector);
    auto& [h0, h1] = stats[r.detector];
    (r.hypothesis == Hypothesis::h0 ? h0 : h1).push_back(r.statistic);
    if (r.hypothesis == Hypothesis::h1) {
      auto& sums = precision_sums[r.detector];
      sums.resize(recall_levels.size(), 0.0);
      for (std::size_t i = 0; i < r.precision.size() && i < sums.size(); ++i) sums[i] += r.precision[i];
    }
  }
  std::vector<DetectorSummary> out;
  for (const auto& name : order) {
    const auto& [h0, h1] = stats[name];
    DetectorSummary s;
    s.detector = name;
    s.h0_trials = h0.size();
    s.h1_trials = h1.size();
    if (!h0.empty() && !h1.empty()) s.roc = roc(h0, h1);
    for (double v : precision_sums[name]) s.mean_precision.push_back(h1.empty() ? 0.0 : v / h1.size());
    out.push_back(std::move(s));
  }
  return out;
}

namespace detail {

inline std::string join_vertices(const VertexSubset& s) {
  std::string out;
  for (Vertex v : s) {
    if (!out.empty()) out += ';';
    out += std::to_string(v);
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline constexpr int trials_csv_version = 1;

/// One row per (trial, detector). runtime_ms is left empty unless timing
/// was recorded, which keeps repeated runs byte-identical.
inline void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records, bool timing) {
  out << "# specdet trials v" << trials_csv_version << "\n";
  out << "trial,hypothesis,detector,statistic,runtime_ms,planted,flagged\n";
  for (const auto& r : records) {
    out << r.trial << ',' << to_string(r.hypothesis) << ',' << r.detector << ',' << detail::format_double(r.statistic)
        << ',';
    if (timing) out << detail::format_double(r.runtime_ms);
    out << ",\"" << detail::join_vertices(r.planted) << "\",\"" << detail::join_vertices(r.flagged) << "\"\n";
  }
}

inline nlohmann::json summary_json(const ExperimentConfig& cfg, const std::vector<DetectorSummary>& summaries) {
  nlohmann::json dets = nlohmann::json::array();
  for (const auto& s : summaries) {
    nlohmann::json d{{"detector", s.detector}, {"h0_trials", s.h0_trials}, {"h1_trials", s.h1_trials}};
    if (s.h0_trials > 0 && s.h1_trials > 0) {
      d["auc"] = s.roc.auc;
      d["eer"] = s.roc.eer;
      nlohmann::json pts = nlohmann::json::array();
      for (const auto& p : s.roc.points) pts.push_back({p.p_fa, p.p_d});
      d["roc"] = std::move(pts);
    }
    nlohmann::json prec = nlohmann::json::array();
    for (std::size_t i = 0; i < s.mean_precision.size(); ++i)
      prec.push_back({{"recall", cfg.recall_levels[i]}, {"precision", s.mean_precision[i]}});
    d["precision_at_recall"] = std::move(prec);
    dets.push_back(std::move(d));
  }
  return {{"format", "specdet-mc-summary"},
          {"version", 1},
          {"model", describe(cfg.noise, cfg.expected)},
          {"trials", cfg.trials},
          {"seed", cfg.seed},
          {"detectors", std::move(dets)}};
}

}  // namespace specdet
