#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "specdet/detection.hpp"
#include "specdet/generators.hpp"
#include "specdet/lanczos.hpp"
#include "specdet/operators.hpp"
#include "specdet/spca.hpp"

namespace specdet {

enum class DetectorKind { specnorm, chi2, l1, spca };

struct DetectorSettings {
  std::vector<DetectorKind> kinds{DetectorKind::specnorm};
  Eigen::Index eigenpairs = 100;  // eigenvectors scanned by the L1 statistic
  Chi2Options chi2{};
  double threshold = 0.3;
  KMeansOptions kmeans{};
  std::optional<std::string> calibration_path;
  std::size_t calibration_trials = 200;
  std::vector<double> spca_lambdas{0.5, 1.0, 2.0, 4.0};  // multiples of lambda_max(B) / N
  int spca_max_iters = 500;
  double spca_obj_tol = 1e-6;
};

struct ExperimentConfig {
  NoiseModel noise = ErModel{1024, 12.0 / 1024};
  ExpectedMode expected = EstimatedExpected{};
  std::optional<SignalModel> signal;
  EmbeddingPolicy embedding = UniformEmbedding{};
  DetectorSettings detectors{};
  std::size_t trials = 200;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::vector<double> recall_levels{0.35};
  bool timing = false;
  LanczosOptions lanczos{};
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Drops '#' comments outside quotes, so TOML-style files read as INI.
inline std::string strip_hash_comments(const std::string& text) {
  std::ostringstream out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    bool quoted = false;
    std::size_t cut = line.size();
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        cut = i;
        break;
      }
    }
    out << line.substr(0, cut) << '\n';
  }
  return out.str();
}

inline std::string unquote(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  s = s.substr(i);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

class Section {
 public:
  Section(const boost::property_tree::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  bool has(const std::string& key) const { return tree_ && tree_->get_child_optional(key); }

  std::string str(const std::string& key, const std::string& fallback) const {
    return has(key) ? unquote(tree_->get<std::string>(key)) : fallback;
  }

  double num(const std::string& key, double fallback) const { return has(key) ? parse_double(key) : fallback; }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string v = str(key, "");
    try {
      std::size_t used = 0;
      if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
      const auto out = std::stoull(v, &used, 0);
      if (used != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ConfigError("[" + name_ + "] " + key + ": expected a nonnegative integer, got '" + v + "'");
    }
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = str(key, "");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("[" + name_ + "] " + key + ": expected true or false, got '" + v + "'");
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    std::string v = str(key, "");
    if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) {
      item = unquote(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : list(key)) out.push_back(to_double(key, item));
    return out;
  }

  const std::string& name() const { return name_; }

 private:
  double parse_double(const std::string& key) const { return to_double(key, str(key, "")); }

  double to_double(const std::string& key, const std::string& v) const {
    try {
      std::size_t used = 0;
      const double out = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ConfigError("[" + name_ + "] " + key + ": expected a number, got '" + v + "'");
    }
  }

  const boost::property_tree::ptree* tree_;
  std::string name_;
};

inline RmatModel rmat_from(const Section& s, std::size_t n) {
  RmatModel m;
  if (s.has("levels")) {
    m.levels = static_cast<unsigned>(s.count("levels", 10));
  } else {
    unsigned levels = 0;
    while ((std::size_t{1} << levels) < n) ++levels;
    if ((std::size_t{1} << levels) != n) throw ConfigError("[noise] n must be a power of two for R-MAT");
    m.levels = levels;
  }
  m.base = {s.num("a", m.base[0]), s.num("b", m.base[1]), s.num("c", m.base[2]), s.num("d", m.base[3])};
  m.iterations = s.count("iterations", 12 * (std::uint64_t{1} << m.levels));
  m.keep_diagonal = s.flag("keep_diagonal", true);
  return m;
}

inline double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace detail

/// Reads an experiment from INI-style text: [noise], [signal], [embedding],
/// [detector] and [run] sections of `key = value` lines. Unset keys keep
/// their defaults; see README for the schema. Each override has the form
/// `section.key=value` and replaces the file's value.
inline ExperimentConfig parse_experiment_config(const std::string& text, const std::vector<std::string>& overrides = {}) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(detail::strip_hash_comments(text));
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq)
      throw ConfigError("override '" + o + "': expected section.key=value");
    tree.put(boost::property_tree::ptree::path_type(o.substr(0, eq), '.'), o.substr(eq + 1));
  }
  for (const auto& [name, _] : tree)
    if (name != "noise" && name != "signal" && name != "embedding" && name != "detector" && name != "run")
      throw ConfigError("unknown config section [" + name + "]");
  auto section = [&](const std::string& name) {
    const auto child = tree.get_child_optional(name);
    return detail::Section(child ? &*child : nullptr, name);
  };

  ExperimentConfig cfg;
  const auto noise = section("noise");
  const std::size_t n = noise.count("n", 1024);
  const std::string model = noise.str("model", "er");
  if (model == "er") {
    double p;
    if (noise.has("p")) {
      p = noise.num("p", 0.0);
    } else if (noise.has("average_degree")) {
      p = noise.num("average_degree", 12.0) / static_cast<double>(n);
    } else {
      // Match the expected volume of the R-MAT model of the same size.
      p = detail::mean(expected_degrees(detail::rmat_from(noise, n))) / static_cast<double>(n);
    }
    cfg.noise = ErModel{n, p};
  } else if (model == "cl") {
    const std::string source = noise.str("degrees", "rmat");
    ClModel cl;
    if (source == "rmat") {
      cl.d = expected_degrees(detail::rmat_from(noise, n));
    } else {
      std::ifstream in(source);
      if (!in) throw ConfigError("[noise] degrees: cannot open '" + source + "'");
      double d;
      while (in >> d) cl.d.push_back(d);
    }
    cfg.noise = std::move(cl);
  } else if (model == "rmat") {
    cfg.noise = detail::rmat_from(noise, n);
  } else {
    throw ConfigError("[noise] model: expected er, cl or rmat, got '" + model + "'");
  }
  const std::string expected = noise.str("expected", "estimated");
  if (expected == "estimated")
    cfg.expected = EstimatedExpected{};
  else if (expected == "exact")
    cfg.expected = ExactExpected{static_cast<Eigen::Index>(noise.count("rank", 100))};
  else
    throw ConfigError("[noise] expected: expected estimated or exact, got '" + expected + "'");

  const auto signal = section("signal");
  const std::string kind = signal.str("model", "none");
  if (kind == "cluster") {
    ClusterSignal s{signal.count("size", 15), 0.0};
    s.p = signal.has("average_degree") ? signal.num("average_degree", 0.0) / static_cast<double>(s.size - 1)
                                       : signal.num("p", 0.9);
    cfg.signal = s;
  } else if (kind == "bipartite") {
    BipartiteSignal s{signal.count("side1", 12), signal.count("side2", 25), 0.0};
    const double n1 = static_cast<double>(s.side1), n2 = static_cast<double>(s.side2);
    s.p = signal.has("average_degree") ? signal.num("average_degree", 0.0) * (n1 + n2) / (2.0 * n1 * n2)
                                       : signal.num("p", 0.9);
    cfg.signal = s;
  } else if (kind != "none") {
    throw ConfigError("[signal] model: expected none, cluster or bipartite, got '" + kind + "'");
  }

  const auto embedding = section("embedding");
  const std::string policy = embedding.str("policy", "uniform");
  if (policy == "uniform")
    cfg.embedding = UniformEmbedding{};
  else if (policy == "low_degree")
    cfg.embedding = LowDegreeEmbedding{embedding.num("threshold", 5.0)};
  else
    throw ConfigError("[embedding] policy: expected uniform or low_degree, got '" + policy + "'");

  const auto det = section("detector");
  auto& d = cfg.detectors;
  if (det.has("stats")) {
    d.kinds.clear();
    for (const auto& s : det.list("stats")) {
      if (s == "specnorm") d.kinds.push_back(DetectorKind::specnorm);
      else if (s == "chi2") d.kinds.push_back(DetectorKind::chi2);
      else if (s == "l1") d.kinds.push_back(DetectorKind::l1);
      else if (s == "spca") d.kinds.push_back(DetectorKind::spca);
      else throw ConfigError("[detector] stats: unknown statistic '" + s + "'");
    }
    if (d.kinds.empty()) throw ConfigError("[detector] stats: no statistic selected");
  }
  d.eigenpairs = static_cast<Eigen::Index>(det.count("eigenpairs", d.eigenpairs));
  d.chi2.grid = static_cast<int>(det.count("chi2_grid", d.chi2.grid));
  d.chi2.exact = det.flag("chi2_exact", d.chi2.exact);
  d.threshold = det.num("threshold", d.threshold);
  d.kmeans.k = static_cast<int>(det.count("kmeans_k", d.kmeans.k));
  d.kmeans.min_size = det.count("kmeans_min_size", d.kmeans.min_size);
  d.kmeans.restarts = static_cast<int>(det.count("kmeans_restarts", d.kmeans.restarts));
  if (det.has("calibration")) d.calibration_path = det.str("calibration", "");
  d.calibration_trials = det.count("calibration_trials", d.calibration_trials);
  if (det.has("spca_lambdas")) d.spca_lambdas = det.numbers("spca_lambdas");
  d.spca_max_iters = static_cast<int>(det.count("spca_max_iters", d.spca_max_iters));
  d.spca_obj_tol = det.num("spca_obj_tol", d.spca_obj_tol);

  const auto run = section("run");
  cfg.trials = run.count("trials", cfg.trials);
  cfg.seed = run.count("seed", cfg.seed);
  cfg.workers = static_cast<unsigned>(run.count("workers", 0));
  if (run.has("recall")) cfg.recall_levels = run.numbers("recall");
  cfg.timing = run.flag("timing", cfg.timing);
  cfg.lanczos.tol = run.num("eig_tol", cfg.lanczos.tol);

  std::visit([](const auto& m) { validate(m); }, cfg.noise);
  if (cfg.signal) std::visit([](const auto& s) { validate(s); }, *cfg.signal);
  if (cfg.trials < 1) throw ConfigError("[run] trials must be at least 1");
  if (!(d.threshold > 0.0 && d.threshold <= 1.0)) throw ConfigError("[detector] threshold must lie in (0, 1]");
  for (double r : cfg.recall_levels)
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("[run] recall levels must lie in (0, 1]");
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config(text.str(), overrides);
}

}  // namespace specdet
