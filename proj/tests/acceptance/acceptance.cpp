// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion ids on
// the command line to run a subset; exits 1 if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "oracles/bayes_ratio.hpp"
#include "specdet/specdet.hpp"

using namespace specdet;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string name;
  double budget_s;
  std::function<Verdict()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> stats_of(const std::vector<TrialRecord>& recs, const std::string& detector) {
  std::vector<double> out;
  for (const auto& r : recs)
    if (r.detector == detector) out.push_back(r.statistic);
  return out;
}

double eer(const std::vector<TrialRecord>& h0, const std::vector<TrialRecord>& h1, const std::string& detector) {
  return roc(stats_of(h0, detector), stats_of(h1, detector)).eer;
}

Verdict er_detection() {
  ExperimentConfig cfg;
  cfg.noise = ErModel{1024, 12.0 / 1024};
  cfg.signal = ClusterSignal{15, 0.9};
  cfg.trials = 200;
  cfg.seed = 101;
  cfg.workers = default_workers();
  const auto recs = run_monte_carlo(cfg);
  const double auc = summarize(recs, cfg.recall_levels).front().roc.auc;
  return {auc >= 0.99, fmt("auc=%.4f (need >= 0.99) over 200+200 trials", auc)};
}

Verdict mass_bound() {
  const auto r = run_mass_bound(MassBoundExperiment{});
  const std::size_t satisfied = r.at("hypothesis_satisfied"), violations = r.at("violations");
  return {satisfied > 0 && violations == 0,
          fmt("hypothesis held in %zu/100, excluded %zu, violations %zu, min margin %.4f", satisfied,
              r.at("excluded").get<std::size_t>(), violations, r.at("min_margin").get<double>())};
}

Verdict likelihood_vs_enumeration() {
  std::size_t comparisons = 0, bad = 0;
  double worst = 0.0;
  for (std::size_t t = 0; t < 500; ++t) {
    Rng rng(RngSeed{303, t});
    const std::size_t n = 3 + rng.below(6);
    const double density = 0.05 + 0.9 * rng.uniform();
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    std::vector<Edge> edges;
    for (Vertex i = 0; i < n; ++i)
      for (Vertex j = i + 1; j < n; ++j)
        if (rng.bernoulli(density)) {
          edges.emplace_back(i, j);
          adj[i][j] = adj[j][i] = true;
        }
    const Graph g(n, std::move(edges));
    for (std::size_t ns : {2, 3})
      for (double p : {0.2, 0.5})
        for (double ps : {0.0, 0.5, 0.9}) {
          const double want = oracle::bayes_ratio(n, adj, ns, p, ps);
          const double rel = std::abs(likelihood_ratio_er(g, ns, p, ps) - want) / std::abs(want);
          worst = std::max(worst, rel);
          ++comparisons;
          if (!(rel <= 1e-9)) ++bad;
        }
  }
  return {bad == 0, fmt("%zu comparisons on 500 graphs, max relative error %.2e (need <= 1e-9), %zu over", comparisons,
                        worst, bad)};
}

Verdict modularity_null_space() {
  double worst = 0.0;
  std::size_t bad = 0;
  for (std::size_t t = 0; t < 100; ++t) {
    const RngSeed seed{404, t};
    Rng rng(seed);
    Graph g;
    switch (t % 3) {
      case 0: g = sample_er(50 + rng.below(950), 0.002 + 0.05 * rng.uniform(), seed.derive(salt::background)); break;
      case 1: {
        ClModel m;
        m.d.resize(50 + rng.below(950));
        for (double& d : m.d) d = 1.0 + 40.0 * std::pow(rng.uniform(), 3.0);
        g = sample_cl(m, seed.derive(salt::background));
        break;
      }
      default: {
        RmatModel m;
        m.levels = 6 + static_cast<unsigned>(rng.below(5));
        m.iterations = 12 * m.vertex_count();
        g = sample_rmat(m, seed.derive(salt::background));
      }
    }
    const ResidualsOperator op = modularity_operator(g);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(op.dim());
    const DegreeVector deg = degrees(g);
    Eigen::VectorXd k(op.dim());
    for (Eigen::Index i = 0; i < k.size(); ++i) k[i] = static_cast<double>(deg.k[static_cast<std::size_t>(i)]);
    const double ratio = (op * ones).norm() / k.norm();
    worst = std::max(worst, ratio);
    if (!(ratio <= 1e-9)) ++bad;
  }
  return {bad == 0, fmt("100 graphs (ER, CL, R-MAT), max ||B 1|| / ||k|| = %.2e (need <= 1e-9)", worst)};
}

Verdict chi2_period() {
  constexpr double quarter = 1.5707963267948966;
  double worst = 0.0;
  std::size_t degenerate_bad = 0;
  for (std::size_t t = 0; t < 100; ++t) {
    Rng rng(RngSeed{505, t});
    const auto n = static_cast<Eigen::Index>(8 + rng.below(500));
    const double sx = 0.2 + rng.uniform(), sy = 0.2 + rng.uniform(), shear = rng.uniform() - 0.5;
    Eigen::VectorXd x(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x[i] = sx * rng.normal() + 0.3 * rng.uniform();
      y[i] = sy * rng.normal() + shear * x[i];
    }
    for (int j = 0; j < 64; ++j) {
      const double theta = 4.0 * quarter * j / 64.0;
      worst = std::max(worst, std::abs(chi_squared_at_angle(x, y, theta) - chi_squared_at_angle(x, y, theta + quarter)));
    }
    const double sgn_x = rng.bernoulli(0.5) ? 1.0 : -1.0, sgn_y = rng.bernoulli(0.5) ? 1.0 : -1.0;
    const Eigen::VectorXd qx = sgn_x * (x.array().abs() + 1e-3).matrix(), qy = sgn_y * (y.array().abs() + 1e-3).matrix();
    if (chi_squared_quadrant(qx, qy) != 0.0) ++degenerate_bad;
  }
  return {worst <= 1e-9 && degenerate_bad == 0,
          fmt("100 clouds x 64 angles, max |chi2(t) - chi2(t + pi/2)| = %.2e (need <= 1e-9); one-quadrant nonzero: %zu",
              worst, degenerate_bad)};
}

// Criteria 6 and 7 share one sweep: common H0 records, three H1 variants.
struct OrderingSweep {
  std::vector<TrialRecord> h0, h1_uniform, h1_low_degree, h1_bipartite;
  double seconds = 0.0;
};

const OrderingSweep& ordering_sweep() {
  static std::optional<OrderingSweep> sweep;
  if (sweep) return *sweep;
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg = parse_experiment_config(R"(
[noise]
model = cl
n = 1024
[signal]
model = cluster
size = 15
average_degree = 9
[detector]
stats = specnorm, chi2, l1
eigenpairs = 100
calibration_trials = 1000
[run]
trials = 500
seed = 6
)");
  cfg.workers = default_workers();
  const auto cal = resolve_calibration(cfg, &std::cerr);
  OrderingSweep s;
  s.h0 = run_trials(cfg, Hypothesis::h0, &*cal);
  s.h1_uniform = run_trials(cfg, Hypothesis::h1, &*cal);

  ExperimentConfig low = cfg;
  low.embedding = LowDegreeEmbedding{5.0};
  low.detectors.kinds = {DetectorKind::l1};
  s.h1_low_degree = run_trials(low, Hypothesis::h1, &*cal);

  ExperimentConfig bip = cfg;
  bip.signal = BipartiteSignal{12, 25, 9.0 * 37.0 / (2.0 * 12.0 * 25.0)};
  bip.detectors.kinds = {DetectorKind::specnorm};
  s.h1_bipartite = run_trials(bip, Hypothesis::h1, nullptr);

  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  sweep = std::move(s);
  return *sweep;
}

Verdict statistic_ordering() {
  const OrderingSweep& s = ordering_sweep();
  auto summary = [&](const std::vector<TrialRecord>& h1, const std::string& detector) {
    return roc(stats_of(s.h0, detector), stats_of(h1, detector));
  };
  const RocSummary specnorm = summary(s.h1_uniform, "specnorm"), chi2 = summary(s.h1_uniform, "chi2"),
                   l1 = summary(s.h1_uniform, "l1"), l1_low = summary(s.h1_low_degree, "l1");
  const bool pass = l1.eer <= chi2.eer + 0.02 && chi2.eer <= specnorm.eer + 0.02 && l1_low.eer <= l1.eer &&
                    s.seconds <= 1800.0;
  return {pass, fmt("EER specnorm=%.4f chi2=%.4f l1=%.4f l1(low-degree)=%.4f; need l1 <= chi2+0.02, chi2 <= "
                    "specnorm+0.02, l1(low-degree) <= l1 (AUC %.4f %.4f %.4f %.4f); sweep %.0f s (budget 1800 s, "
                    "shared with 7)",
                    specnorm.eer, chi2.eer, l1.eer, l1_low.eer, specnorm.auc, chi2.auc, l1.auc, l1_low.auc,
                    s.seconds)};
}

Verdict bipartite_ordering() {
  const OrderingSweep& s = ordering_sweep();
  const double cluster = eer(s.h0, s.h1_uniform, "specnorm");
  const double bipartite = eer(s.h0, s.h1_bipartite, "specnorm");
  return {bipartite <= cluster + 0.02,
          fmt("EER specnorm bipartite(12,25)=%.4f cluster(15)=%.4f at average degree 9 (need bipartite <= cluster+0.02)",
              bipartite, cluster)};
}

Verdict sparse_pca() {
  ExperimentConfig cfg;
  cfg.noise = ErModel{512, 12.0 / 512};
  cfg.signal = ClusterSignal{8, 0.85};
  cfg.detectors.kinds = {DetectorKind::specnorm, DetectorKind::spca};
  cfg.detectors.spca_max_iters = 60;
  cfg.trials = 100;
  cfg.seed = 8;
  cfg.workers = default_workers();
  double specnorm = 0.0, best = -1.0;
  std::string best_name;
  for (const auto& d : summarize(run_monte_carlo(cfg), cfg.recall_levels)) {
    if (d.detector == "specnorm") specnorm = d.roc.auc;
    else if (d.roc.auc > best) {
      best = d.roc.auc;
      best_name = d.detector;
    }
  }
  return {best >= specnorm && best >= 0.9,
          fmt("best %s auc=%.4f, specnorm auc=%.4f (need spca >= specnorm and >= 0.9)", best_name.c_str(), best, specnorm)};
}

Verdict delta_k() {
  const auto r = run_delta_k(DeltaKExperiment{});
  const std::size_t v = r.at("violations");
  return {v == 0, fmt("100 pairs, violations %zu, max exact/bound %.4f", v, r.at("max_exact_over_bound").get<double>())};
}

Verdict concentration() {
  ConcentrationExperiment ex;
  ex.levels = 8;
  ex.trials = 50;
  const auto r = run_concentration(ex);
  const std::size_t applicable = r.at("applicable"), v = r.at("violations");
  return {applicable > 0 && v == 0, fmt("N=256, 50 embeddings: %zu checked, %zu flagged, violations %zu, min margin %.4f",
                                        applicable, r.at("inapplicable").get<std::size_t>(), v,
                                        r.at("min_margin").get<double>())};
}

Verdict signal_power() {
  double worst = 0.0;
  for (std::size_t t = 0; t < 20; ++t) {
    Rng rng(RngSeed{1111, t});
    const double p = 0.05 + 0.95 * rng.uniform();
    SignalModel model;
    double want;
    if (t % 2 == 0) {
      const std::size_t size = 2 + rng.below(60);
      model = ClusterSignal{size, p};
      want = p * static_cast<double>(size);
    } else {
      const std::size_t n1 = 1 + rng.below(40), n2 = 1 + rng.below(40);
      model = BipartiteSignal{n1, n2, p};
      want = p * std::sqrt(static_cast<double>(n1 * n2));
    }
    const ExpectedFactors f = signal_expected_factors(model);
    const Eigen::MatrixXd dense = f.u * f.w.transpose();
    const double got = Eigen::JacobiSVD<Eigen::MatrixXd>(dense).singularValues()[0];
    worst = std::max(worst, std::abs(got - want));
  }
  return {worst <= 1e-10, fmt("20 draws, max |norm - closed form| = %.2e (need <= 1e-10)", worst)};
}

Verdict snap_smoke() {
  const fs::path dir = fs::temp_directory_path() / ("specdet_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const fs::path file = dir / "synthetic-snap.txt";
  RmatModel m;
  m.levels = 13;
  m.iterations = 12 * m.vertex_count();
  const Graph g = sample_rmat(m, RngSeed{1212, 0});
  {
    std::ofstream out(file);
    out << "# Undirected graph: synthetic-snap.txt\n# Nodes: " << g.vertex_count() << " Edges: " << g.edge_count()
        << "\n# FromNodeId\tToNodeId\n";
    for (const Edge& e : g.edges()) out << 3 * e.u + 1000 << '\t' << 3 * e.v + 1000 << '\n';
  }
  const std::vector<std::string> args{"specdet", "detect", "--stat", "l1", "-m", "150", "--calibration-trials", "10",
                                      file.string()};
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  fs::remove_all(dir);
  if (code != 0) return {false, "detect exited " + std::to_string(code) + ": " + err.str()};
  const auto doc = nlohmann::json::parse(out.str());
  const std::size_t n = doc.at("vertices"), edges = doc.at("edges"), pairs = doc.at("eigenpairs");
  const double stat = doc.at("statistic");
  const bool pass = edges <= 100000 && pairs == std::min<std::size_t>(150, n) && std::isfinite(stat);
  return {pass, fmt("%zu vertices, %zu edges parsed, %zu eigenpairs, l1 statistic %.3f at eigenvector %d", n, edges,
                    pairs, stat, doc.at("eigenvector").get<int>())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"1", "er-detection", 300, er_detection},
      {"2", "mass-bound", 600, mass_bound},
      {"3", "likelihood-enumeration", 120, likelihood_vs_enumeration},
      {"4", "modularity-null-space", 60, modularity_null_space},
      {"5", "chi2-period", 60, chi2_period},
      {"6", "statistic-ordering", 1800, statistic_ordering},
      {"7", "bipartite-ordering", 1800, bipartite_ordering},
      {"8", "sparse-pca", 3600, sparse_pca},
      {"9", "delta-k", 60, delta_k},
      {"10", "concentration", 300, concentration},
      {"11", "signal-power", 60, signal_power},
      {"snap", "snap-smoke", 600, snap_smoke},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  for (const auto& w : wanted)
    if (std::none_of(all.begin(), all.end(), [&](const Criterion& c) { return c.id == w; })) {
      std::cerr << "unknown criterion '" << w << "'\n";
      return 2;
    }

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (s > c.budget_s) {
      v.pass = false;
      v.detail += "; over time budget";
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << c.id << ' ' << c.name << ": " << v.detail
              << fmt(" [%.1f s / %.0f s]", s, c.budget_s) << std::endl;
  }
  return failed ? 1 : 0;
}
