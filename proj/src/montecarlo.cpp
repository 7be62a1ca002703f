#include "semel/montecarlo.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "semel/chi2.hpp"
#include "semel/el.hpp"
#include "semel/errors.hpp"
#include "semel/gaussian_ml.hpp"
#include "semel/io.hpp"

namespace semel {

WeightMatrix resolve_weights(const WeightsSpec& spec) {
  WeightMatrix w;
  if (!spec.file.empty()) {
    w = load_weights(spec.file, spec.file_format);
  } else if (spec.grid_rows > 0 && spec.grid_cols > 0) {
    w = build_grid_queen(spec.grid_rows, spec.grid_cols);
  } else {
    throw std::invalid_argument("weights spec needs either grid dimensions or a file");
  }
  if (spec.standardize) w = row_standardize(w);
  if (spec.pool > 1) w = kronecker_pool(spec.pool, w);
  return w;
}

std::string weights_label(const WeightsSpec& spec) {
  if (!spec.label.empty()) return spec.label;
  std::string base;
  if (!spec.file.empty()) {
    const auto slash = spec.file.find_last_of('/');
    base = slash == std::string::npos ? spec.file : spec.file.substr(slash + 1);
  } else {
    base = "grid" + std::to_string(static_cast<long>(spec.grid_rows) * spec.grid_cols);
  }
  if (spec.pool > 1) base = "I" + std::to_string(spec.pool) + "x" + base;
  return base;
}

namespace {

SemDesign design_for(const ExperimentSpec& spec) {
  WeightMatrix w = resolve_weights(spec.weights);
  Eigen::MatrixXd x;
  if (spec.x_file.empty()) {
    x = ramp_design_column(w.n);
  } else {
    x = read_csv_matrix(spec.x_file);
  }
  return make_design(std::move(x), std::move(w));
}

struct RepOutcome {
  bool el_covered = false;
  bool lr_covered = false;
  bool el_infeasible = false;
  bool mle_failed = false;
  double el_statistic = 0.0;
};

/// Per-experiment state shared by all replications. Everything here is
/// immutable once constructed, so worker threads share it freely.
class Engine {
public:
  Engine(const ExperimentSpec& spec, SemDesign design)
      : spec_(spec), design_(std::move(design)) {
    check_theta(spec_.theta0, design_.k);
    a0_ = build_a(design_.w, spec_.theta0.rho);
    lu_sim_.compute(a0_);
    xbeta0_ = design_.x * spec_.theta0.beta;
    scale_ = std::sqrt(spec_.theta0.sigma2 / raw_variance(spec_.dist));
    threshold_ = chi2_quantile(static_cast<int>(design_.k) + 2, spec_.alpha);
    if (spec_.run_el) {
      gtilde_ = g_matrices(design_.w, spec_.theta0.rho).gtilde;
    }
    if (spec_.run_lr) {
      mle_ctx_ = make_mle_context(design_);
      // L(theta0) pieces that do not depend on the sample.
      l0_const_ = -0.5 * static_cast<double>(design_.n) *
                      (1.8378770664093454835606594728112 + std::log(spec_.theta0.sigma2)) +
                  log_likelihood_log_det();
    }
  }

  const SemDesign& design() const { return design_; }
  int df() const { return static_cast<int>(design_.k) + 2; }
  double threshold() const { return threshold_; }

  RepOutcome run_rep(int rep_index) const {
    RepOutcome out;
    Rng rng(spec_.base_seed + static_cast<std::uint64_t>(rep_index));
    Eigen::VectorXd eps = error_draw(spec_.dist, design_.n, rng);
    eps *= scale_;
    const Eigen::VectorXd y = xbeta0_ + lu_sim_.solve(eps);
    const Eigen::VectorXd eps0 = a0_ * (y - xbeta0_);

    if (spec_.run_el) {
      const OmegaMatrix om = omega(design_, gtilde_, a0_, eps0, spec_.theta0.sigma2);
      const ElResult res = el_statistic(om);
      out.el_statistic = res.statistic;
      out.el_infeasible = res.lambda.status == LambdaStatus::HullInfeasible;
      out.el_covered = res.statistic <= threshold_;
    }
    if (spec_.run_lr) {
      const MlFit fit = mle_with_context(mle_ctx_, design_, y);
      if (!fit.converged) {
        out.mle_failed = true;
      } else {
        const double l0 =
            l0_const_ - eps0.squaredNorm() / (2.0 * spec_.theta0.sigma2);
        const double lr = std::max(0.0, 2.0 * (fit.loglik - l0));
        out.lr_covered = lr <= threshold_;
      }
    }
    return out;
  }

private:
  double log_likelihood_log_det() const {
    double acc = 0.0;
    double sign = static_cast<double>(lu_sim_.permutationP().determinant());
    for (Eigen::Index i = 0; i < design_.n; ++i) {
      const double p = lu_sim_.matrixLU()(i, i);
      acc += std::log(std::abs(p));
      if (p < 0.0) sign = -sign;
    }
    if (sign <= 0.0) {
      throw SingularityError("det A(rho0) is nonpositive; rho0 is outside the valid branch", 0.0);
    }
    return acc;
  }

  ExperimentSpec spec_;
  SemDesign design_;
  Eigen::MatrixXd a0_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_sim_;
  Eigen::MatrixXd gtilde_;
  Eigen::VectorXd xbeta0_;
  MleContext mle_ctx_;
  double scale_ = 1.0;
  double threshold_ = 0.0;
  double l0_const_ = 0.0;
};

std::vector<RepOutcome> run_all_reps(const Engine& engine, int reps, int threads) {
  std::vector<RepOutcome> outcomes(static_cast<size_t>(reps));
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, reps));
  if (workers == 1) {
    for (int r = 0; r < reps; ++r) outcomes[static_cast<size_t>(r)] = engine.run_rep(r + 1);
    return outcomes;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= reps) return;
      outcomes[static_cast<size_t>(r)] = engine.run_rep(r + 1);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return outcomes;
}

double binomial_se(double p, int reps) {
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(reps));
}

}  // namespace

CoverageResult run_coverage(const ExperimentSpec& spec) {
  if (spec.reps < 1) throw std::invalid_argument("reps must be >= 1");
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (!spec.run_el && !spec.run_lr) throw std::invalid_argument("no methods selected");

  const Engine engine(spec, design_for(spec));
  const auto outcomes = run_all_reps(engine, spec.reps, spec.threads);

  CoverageResult res;
  res.label = weights_label(spec.weights);
  res.rho = spec.theta0.rho;
  res.reps = spec.reps;
  long el_hits = 0;
  long lr_hits = 0;
  for (const auto& o : outcomes) {
    el_hits += o.el_covered ? 1 : 0;
    lr_hits += o.lr_covered ? 1 : 0;
    res.el_infeasible += o.el_infeasible ? 1 : 0;
    res.mle_failures += o.mle_failed ? 1 : 0;
  }
  if (spec.run_el) {
    res.el_coverage = static_cast<double>(el_hits) / spec.reps;
    res.el_se = binomial_se(*res.el_coverage, spec.reps);
  }
  if (spec.run_lr) {
    res.lr_coverage = static_cast<double>(lr_hits) / spec.reps;
    res.lr_se = binomial_se(*res.lr_coverage, spec.reps);
  }
  return res;
}

CalibrationReport run_calibration(const ExperimentSpec& spec,
                                  const std::vector<double>& quantile_grid) {
  if (spec.reps < 1) throw std::invalid_argument("reps must be >= 1");
  if (!spec.run_el) throw std::invalid_argument("calibration requires the EL method");

  ExperimentSpec el_only = spec;
  el_only.run_lr = false;
  const Engine engine(el_only, design_for(el_only));
  const auto outcomes = run_all_reps(engine, el_only.reps, el_only.threads);

  CalibrationReport report;
  report.df = engine.df();
  report.statistics.resize(spec.reps);
  for (int r = 0; r < spec.reps; ++r) {
    report.statistics(r) = outcomes[static_cast<size_t>(r)].el_statistic;
    report.infeasible += outcomes[static_cast<size_t>(r)].el_infeasible ? 1 : 0;
  }

  // One-sample KS distance against chi2_df.
  std::vector<double> sorted(report.statistics.data(), report.statistics.data() + spec.reps);
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(spec.reps);
  double ks = 0.0;
  for (int i = 0; i < spec.reps; ++i) {
    const double f = std::isinf(sorted[static_cast<size_t>(i)])
                         ? 1.0
                         : chi2_cdf(report.df, sorted[static_cast<size_t>(i)]);
    ks = std::max(ks, std::max(f - i / m, (i + 1) / m - f));
  }
  report.ks_distance = ks;

  for (double alpha : quantile_grid) {
    QuantilePoint q;
    q.alpha = alpha;
    q.z = chi2_quantile(report.df, alpha);
    long hits = 0;
    for (int r = 0; r < spec.reps; ++r) {
      if (report.statistics(r) <= q.z) ++hits;
    }
    q.empirical = static_cast<double>(hits) / m;
    report.quantiles.push_back(q);
  }
  return report;
}

TableFormat parse_table_format(const std::string& name) {
  if (name == "csv") return TableFormat::Csv;
  if (name == "markdown") return TableFormat::Markdown;
  throw std::invalid_argument("unknown table format: " + name);
}

namespace {

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string rho_str(double rho) {
  std::string s = format_double(rho);
  return s;
}

}  // namespace

void emit_table(const std::vector<CoverageResult>& results, TableFormat format,
                const std::string& path, const std::string& invocation) {
  if (results.empty()) throw std::invalid_argument("emit_table: no results");
  std::string out;
  const char* cols[] = {"rho",   "weights_label", "lr_coverage",   "el_coverage", "reps",
                        "lr_se", "el_se",         "el_infeasible", "mle_failures"};
  if (format == TableFormat::Csv) {
    out = provenance_header(invocation);
    for (size_t c = 0; c < std::size(cols); ++c) {
      if (c > 0) out += ',';
      out += cols[c];
    }
    out += '\n';
    for (const auto& r : results) {
      out += rho_str(r.rho) + "," + r.label + ",";
      out += (r.lr_coverage ? fmt4(*r.lr_coverage) : std::string()) + ",";
      out += (r.el_coverage ? fmt4(*r.el_coverage) : std::string()) + ",";
      out += std::to_string(r.reps) + ",";
      out += (r.lr_coverage ? fmt6(r.lr_se) : std::string()) + ",";
      out += (r.el_coverage ? fmt6(r.el_se) : std::string()) + ",";
      out += std::to_string(r.el_infeasible) + "," + std::to_string(r.mle_failures) + "\n";
    }
  } else {
    out = "<!-- invocation: " + invocation + " -->\n";
    out += "| rho | weights_label | lr_coverage | el_coverage | reps | lr_se | el_se | "
           "el_infeasible | mle_failures |\n";
    out += "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : results) {
      out += "| " + rho_str(r.rho) + " | " + r.label + " | ";
      out += (r.lr_coverage ? fmt4(*r.lr_coverage) : std::string()) + " | ";
      out += (r.el_coverage ? fmt4(*r.el_coverage) : std::string()) + " | ";
      out += std::to_string(r.reps) + " | ";
      out += (r.lr_coverage ? fmt6(r.lr_se) : std::string()) + " | ";
      out += (r.el_coverage ? fmt6(r.el_se) : std::string()) + " | ";
      out += std::to_string(r.el_infeasible) + " | " + std::to_string(r.mle_failures) + " |\n";
    }
  }
  atomic_write_text(path, out);
}

namespace {

std::string trim(const std::string& s) {
  size_t a = 0;
  size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) parts.push_back(trim(part));
  return parts;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string part;
  while (ss >> part) parts.push_back(part);
  return parts;
}

double parse_num(const std::string& s, const std::string& key) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("config: cannot parse number '" + s + "' for key '" + key + "'");
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config: " + path);
  ExperimentConfig cfg;
  bool weights_seen = false;
  bool beta_seen = false;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw FormatError("config: expected 'key = value'", line_no);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key == "weights") {
      const auto parts = split_ws(value);
      if (parts.size() == 3 && parts[0] == "grid") {
        cfg.weights.grid_rows = static_cast<int>(parse_num(parts[1], key));
        cfg.weights.grid_cols = static_cast<int>(parse_num(parts[2], key));
      } else if ((parts.size() == 2 || parts.size() == 3) && parts[0] == "file") {
        cfg.weights.file = parts[1];
        cfg.weights.file_format =
            parts.size() == 3 ? parse_weights_format(parts[2]) : WeightsFormat::DenseCsv;
      } else {
        throw FormatError("config: weights must be 'grid R C' or 'file PATH [format]'", line_no);
      }
      weights_seen = true;
    } else if (key == "standardize") {
      cfg.weights.standardize = (value == "true" || value == "1" || value == "yes");
    } else if (key == "pool") {
      cfg.weights.pool = static_cast<int>(parse_num(value, key));
    } else if (key == "label") {
      cfg.weights.label = value;
    } else if (key == "x") {
      if (value == "ramp") {
        cfg.x_file.clear();
      } else {
        const auto parts = split_ws(value);
        if (parts.size() != 2 || parts[0] != "file") {
          throw FormatError("config: x must be 'ramp' or 'file PATH'", line_no);
        }
        cfg.x_file = parts[1];
      }
    } else if (key == "beta") {
      const auto parts = split(value, ',');
      cfg.beta.resize(static_cast<Eigen::Index>(parts.size()));
      for (size_t i = 0; i < parts.size(); ++i) cfg.beta(static_cast<Eigen::Index>(i)) = parse_num(parts[i], key);
      beta_seen = true;
    } else if (key == "rho") {
      cfg.rhos.clear();
      for (const auto& part : split(value, ',')) cfg.rhos.push_back(parse_num(part, key));
    } else if (key == "sigma2") {
      cfg.sigma2 = parse_num(value, key);
    } else if (key == "dist") {
      cfg.dist = parse_dist(value);
    } else if (key == "reps") {
      cfg.reps = static_cast<int>(parse_num(value, key));
    } else if (key == "alpha") {
      cfg.alpha = parse_num(value, key);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_num(value, key));
    } else if (key == "methods") {
      cfg.run_el = false;
      cfg.run_lr = false;
      for (auto m : split(value, ',')) {
        std::transform(m.begin(), m.end(), m.begin(), [](unsigned char c) { return std::toupper(c); });
        if (m == "EL") {
          cfg.run_el = true;
        } else if (m == "LR") {
          cfg.run_lr = true;
        } else {
          throw FormatError("config: unknown method '" + m + "'", line_no);
        }
      }
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_num(value, key));
    } else if (key == "output") {
      cfg.output = value;
    } else {
      throw FormatError("config: unknown key '" + key + "'", line_no);
    }
  }
  if (!weights_seen) throw FormatError("config: missing 'weights'");
  if (!beta_seen) throw FormatError("config: missing 'beta'");
  if (cfg.rhos.empty()) throw FormatError("config: missing 'rho'");
  return cfg;
}

std::vector<ExperimentSpec> expand_config(const ExperimentConfig& cfg) {
  std::vector<ExperimentSpec> specs;
  for (double rho : cfg.rhos) {
    ExperimentSpec s;
    s.weights = cfg.weights;
    s.x_file = cfg.x_file;
    s.theta0.beta = cfg.beta;
    s.theta0.rho = rho;
    s.theta0.sigma2 = cfg.sigma2;
    s.dist = cfg.dist;
    s.reps = cfg.reps;
    s.alpha = cfg.alpha;
    s.base_seed = cfg.seed;
    s.run_el = cfg.run_el;
    s.run_lr = cfg.run_lr;
    s.threads = cfg.threads;
    specs.push_back(std::move(s));
  }
  return specs;
}

}  // namespace semel
