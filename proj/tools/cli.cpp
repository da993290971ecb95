#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "specdet/specdet.hpp"

namespace specdet {
namespace {

using nlohmann::json;

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", path, "experiment config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "override a config value, section.key=value")->allow_extra_args(false);
    cmd->add_option("--seed", seed, "master seed");
  }

  ExperimentConfig load() const {
    ExperimentConfig cfg = path.empty() ? parse_experiment_config("", overrides) : load_experiment_config(path, overrides);
    if (seed) cfg.seed = *seed;
    return cfg;
  }
};

/// Writes to the named file, or to `fallback` when the name is empty or "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error("cannot write '" + path + "'");
      os_ = file_.get();
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json original_ids(const VertexSubset& s, const std::vector<std::int64_t>& ids) {
  json out = json::array();
  for (Vertex v : s) out.push_back(ids[v]);
  return out;
}

EigenPairs eigs_of(const ResidualsOperator& op, Eigen::Index m, std::uint64_t seed) {
  LanczosOptions lo;
  lo.seed = RngSeed{seed, 0}.derive(salt::eigensolve);
  return top_eigenpairs(op, std::min<Eigen::Index>(m, op.dim()), lo);
}

// ---------------------------------------------------------------------------

struct GenerateCmd {
  ConfigArgs config;
  std::size_t trial = 0;
  bool h1 = false;
  std::string output, planted;

  void attach(CLI::App* cmd) {
    config.attach(cmd);
    cmd->add_option("--trial", trial, "trial index");
    cmd->add_flag("--h1", h1, "embed the configured signal");
    cmd->add_option("-o,--output", output, "edge-list file (default stdout)");
    cmd->add_option("--planted", planted, "write the planted vertices as JSON");
  }

  void run(std::ostream& out) const {
    const ExperimentConfig cfg = config.load();
    const Hypothesis h = h1 ? Hypothesis::h1 : Hypothesis::h0;
    const TrialGraph tg = sample_trial_graph(cfg, expected_degrees(cfg.noise), h, trial_seed(cfg.seed, h, trial));
    {
      Sink sink(output, out);
      write_edge_list(*sink, tg.graph);
    }
    if (!h1) return;
    const json doc = {{"trial", trial}, {"seed", cfg.seed}, {"planted", std::vector<Vertex>(tg.planted.begin(), tg.planted.end())}};
    if (!planted.empty()) {
      Sink sink(planted, out);
      *sink << doc.dump() << "\n";
    } else if (!output.empty() && output != "-") {
      out << doc.dump() << "\n";
    }
  }
};

struct EigsCmd {
  std::string graph, output;
  Eigen::Index m = 10;
  std::uint64_t seed = 1;
  bool values_only = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("graph", graph, "edge-list file")->required()->check(CLI::ExistingFile);
    cmd->add_option("-m,--eigenpairs", m, "number of eigenpairs (capped at N)")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "eigensolver seed");
    cmd->add_flag("--values-only", values_only, "omit eigenvector components");
    cmd->add_option("-o,--output", output, "CSV file (default stdout)");
  }

  void run(std::ostream& out) const {
    const EdgeListGraph eg = read_edge_list_file(graph);
    const EigenPairs eigs = eigs_of(modularity_operator(eg.graph), m, seed);
    Sink sink(output, out);
    std::ostream& os = *sink;
    os << "# specdet eigenpairs v1\n";
    os << "index,eigenvalue,residual";
    if (!values_only)
      for (std::int64_t id : eg.original_ids) os << ",v" << id;
    os << "\n";
    for (Eigen::Index i = 0; i < eigs.m(); ++i) {
      os << i << "," << fmt(eigs.values[i]) << "," << fmt(eigs.residuals[i]);
      if (!values_only)
        for (Eigen::Index r = 0; r < eigs.dim(); ++r) os << "," << fmt(eigs.vectors(r, i));
      os << "\n";
    }
  }
};

struct CalibrateCmd {
  ConfigArgs config;
  std::size_t trials = 200;
  Eigen::Index m = 100;
  std::string output;

  void attach(CLI::App* cmd) {
    config.attach(cmd);
    cmd->add_option("--trials", trials, "signal-free draws")->check(CLI::Range(2, 1 << 30));
    cmd->add_option("-m,--eigenpairs", m, "eigenvectors to calibrate")->check(CLI::PositiveNumber);
    cmd->add_option("-o,--output", output, "calibration JSON (default stdout)");
  }

  void run(std::ostream& out, std::ostream& err) const {
    const ExperimentConfig cfg = config.load();
    CalibrationOptions co;
    co.m = std::min<Eigen::Index>(m, static_cast<Eigen::Index>(vertex_count(cfg.noise)));
    co.trials = trials;
    co.seed = cfg.seed;
    co.workers = cfg.workers ? cfg.workers : default_workers();
    co.lanczos = cfg.lanczos;
    co.log = &err;
    const NullCalibration cal = calibrate_null(cfg.noise, cfg.expected, co);
    Sink sink(output, out);
    *sink << to_json(cal).dump(2) << "\n";
  }
};

struct DetectCmd {
  std::string graph, stat = "l1", calibration;
  std::size_t calibration_trials = 20;
  Eigen::Index m = 100;
  double threshold = 0.3;
  double lambda = 1.0;
  std::uint64_t seed = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("graph", graph, "edge-list file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--stat", stat, "statistic")->check(CLI::IsMember({"specnorm", "chi2", "l1", "spca"}));
    cmd->add_option("--calibration", calibration, "null calibration JSON for l1")->check(CLI::ExistingFile);
    cmd->add_option("--calibration-trials", calibration_trials, "draws when l1 calibrates itself")
        ->check(CLI::Range(2, 1 << 30));
    cmd->add_option("-m,--eigenpairs", m, "eigenvectors scanned by l1 (capped at N)")->check(CLI::PositiveNumber);
    cmd->add_option("--threshold", threshold, "identification threshold fraction")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--lambda", lambda, "sparse PCA penalty as a multiple of lambda_max / N")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", seed, "seed for eigensolves, clustering and self-calibration");
  }

  void run(std::ostream& out, std::ostream& err) const {
    const EdgeListGraph eg = read_edge_list_file(graph);
    const std::size_t n = eg.graph.vertex_count();
    const ResidualsOperator op = modularity_operator(eg.graph);
    json doc = {{"stat", stat}, {"vertices", n}, {"edges", eg.graph.edge_count()}};
    DetectionOutcome outcome;

    if (stat == "specnorm") {
      const EigenPairs eigs = eigs_of(op, 1, seed);
      outcome = identify_threshold(eigs.vectors.col(0), threshold);
      outcome.statistic = stat_spectral_norm(eigs);
    } else if (stat == "chi2") {
      const EigenPairs eigs = eigs_of(op, 2, seed);
      KMeansOptions km;
      km.seed = RngSeed{seed, 0}.derive(salt::clustering);
      outcome = identify_kmeans(eigs.vectors.col(0), eigs.vectors.col(1), km);
      outcome.statistic = stat_chi2_max(eigs.vectors.col(0), eigs.vectors.col(1));
    } else if (stat == "l1") {
      NullCalibration cal;
      if (!calibration.empty()) {
        cal = load_calibration(calibration);
        doc["calibration"] = calibration;
      } else {
        // Chung-Lu null with the observed degrees.
        const DegreeVector deg = degrees(eg.graph);
        ClModel model{std::vector<double>(deg.k.begin(), deg.k.end())};
        CalibrationOptions co;
        co.m = std::min<Eigen::Index>(m, static_cast<Eigen::Index>(n));
        co.trials = calibration_trials;
        co.seed = seed;
        co.workers = default_workers();
        co.log = &err;
        cal = calibrate_null(model, EstimatedExpected{}, co);
        doc["calibration"] = "observed-degree chung-lu, " + std::to_string(calibration_trials) + " draws";
      }
      const Eigen::Index use = std::min<Eigen::Index>({m, static_cast<Eigen::Index>(cal.m()), static_cast<Eigen::Index>(n)});
      const EigenPairs eigs = eigs_of(op, use, seed);
      const L1Deviation dev = stat_l1_deviation(eigs, cal);
      outcome = identify_threshold(eigs.vectors.col(dev.index), threshold);
      outcome.statistic = dev.statistic;
      doc["eigenvector"] = dev.index;
      doc["eigenpairs"] = eigs.m();
    } else {
      if (n > dense_limit) throw std::runtime_error("sparse PCA needs N <= " + std::to_string(dense_limit));
      const EigenPairs eigs = eigs_of(op, 1, seed);
      SpcaConfig sc;
      sc.lambda = lambda * std::max(eigs.values[0], 0.0) / static_cast<double>(n);
      sc.seed = RngSeed{seed, 0}.derive(salt::eigensolve + 100);
      const SpcaResult res = solve_spca(op.dense(), sc);
      outcome = identify_sparse(res, threshold);
      outcome.statistic = -stat_sparse_pca(res);
      doc["lambda"] = sc.lambda;
      doc["iterations"] = res.iterations;
    }
    doc["statistic"] = outcome.statistic;
    doc["flagged"] = original_ids(outcome.flagged, eg.original_ids);
    out << doc.dump(2) << "\n";
  }
};

struct McCmd {
  ConfigArgs config;
  std::optional<std::size_t> trials;
  std::optional<unsigned> workers;
  std::string output, summary;

  void attach(CLI::App* cmd) {
    config.attach(cmd);
    cmd->get_option("--config")->required();
    cmd->add_option("--trials", trials, "trials per hypothesis")->check(CLI::PositiveNumber);
    cmd->add_option("--workers", workers, "worker threads");
    cmd->add_option("-o,--out", output, "trials CSV (default stdout)");
    cmd->add_option("--summary", summary, "summary JSON file");
  }

  void run(std::ostream& out, std::ostream& err) const {
    ExperimentConfig cfg = config.load();
    if (trials) cfg.trials = *trials;
    if (workers) cfg.workers = *workers;
    const auto records = run_monte_carlo(cfg, nullptr, &err);
    {
      Sink sink(output, out);
      write_trials_csv(*sink, records, cfg.timing);
    }
    if (!summary.empty()) {
      Sink sink(summary, out);
      *sink << summary_json(cfg, summarize(records, cfg.recall_levels)).dump(2) << "\n";
    }
  }
};

struct VerifyCmd {
  std::string check = "all";
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--check", check, "suite to run")
        ->check(CLI::IsMember({"likelihood", "mass-bound", "concentration", "deltak", "all"}));
    cmd->add_option("--trials", trials, "trials (graphs, draws) per suite")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "seed");
  }

  void run(std::ostream& out) const {
    json reports = json::array();
    const bool all = check == "all";
    if (all || check == "likelihood") {
      LikelihoodExperiment ex;
      if (trials) ex.graphs = *trials;
      if (seed) ex.seed = *seed;
      reports.push_back(run_likelihood(ex));
    }
    if (all || check == "mass-bound") {
      MassBoundExperiment ex;
      if (trials) ex.trials = *trials;
      if (seed) ex.seed = *seed;
      reports.push_back(run_mass_bound(ex));
    }
    if (all || check == "concentration") {
      ConcentrationExperiment ex;
      if (trials) ex.trials = *trials;
      if (seed) ex.seed = *seed;
      reports.push_back(run_concentration(ex));
    }
    if (all || check == "deltak") {
      DeltaKExperiment ex;
      if (trials) ex.draws = *trials;
      if (seed) ex.seed = *seed;
      reports.push_back(run_delta_k(ex));
    }
    std::size_t violations = 0;
    for (const auto& r : reports) violations += r.at("violations").get<std::size_t>();
    const json doc = {{"format", "specdet-verify"}, {"version", 1}, {"violations", violations}, {"checks", reports}};
    out << doc.dump(2) << "\n";
  }
};

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral detection of anomalous subgraphs", "specdet"};
  app.require_subcommand(1);
  GenerateCmd generate;
  EigsCmd eigs;
  CalibrateCmd calibrate;
  DetectCmd detect;
  McCmd mc;
  VerifyCmd verify;
  generate.attach(app.add_subcommand("generate", "sample a background (and signal) graph as an edge list"));
  eigs.attach(app.add_subcommand("eigs", "top eigenpairs of a graph's modularity residuals"));
  calibrate.attach(app.add_subcommand("calibrate", "null calibration for the L1 statistic"));
  detect.attach(app.add_subcommand("detect", "statistic and flagged vertices of one graph"));
  mc.attach(app.add_subcommand("mc", "Monte Carlo trials to CSV and summary JSON"));
  verify.attach(app.add_subcommand("verify", "randomized checks of the analytic bounds"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (app.got_subcommand("generate")) generate.run(out);
    else if (app.got_subcommand("eigs")) eigs.run(out);
    else if (app.got_subcommand("calibrate")) calibrate.run(out, err);
    else if (app.got_subcommand("detect")) detect.run(out, err);
    else if (app.got_subcommand("mc")) mc.run(out, err);
    else verify.run(out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_runtime;
  }
  return exit_ok;
}

}  // namespace specdet
