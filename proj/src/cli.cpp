#include "semel/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "semel/chi2.hpp"
#include "semel/el.hpp"
#include "semel/errors.hpp"
#include "semel/gaussian_ml.hpp"
#include "semel/io.hpp"
#include "semel/montecarlo.hpp"
#include "semel/sem.hpp"
#include "semel/weights.hpp"

#ifndef SEMEL_VERSION
#define SEMEL_VERSION "0.0.0"
#endif

namespace semel {

namespace {

std::string join_invocation(int argc, const char* const* argv) {
  std::string s = "semel";
  for (int i = 1; i < argc; ++i) {
    s += ' ';
    s += argv[i];
  }
  return s;
}

std::string build_identifier() {
  std::string id = "semel ";
  id += SEMEL_VERSION;
#if defined(__clang__)
  id += " (clang " __clang_version__ ")";
#elif defined(__GNUC__)
  id += " (gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__) + ")";
#endif
  return id;
}

/// Flags shared by every subcommand that needs a weight matrix.
struct WeightsCliOptions {
  std::vector<int> grid;
  std::string file;
  std::string format = "dense-csv";
  bool standardize = false;
  int pool = 1;
  std::string label;

  void attach(CLI::App* cmd, bool* has_any = nullptr) {
    (void)has_any;
    cmd->add_option("--grid", grid, "queen-contiguity grid ROWS COLS")->expected(2);
    cmd->add_option("--weights", file, "weight matrix file");
    cmd->add_option("--format", format, "weights file format (dense-csv|triplet-csv)")
        ->check(CLI::IsMember({"dense-csv", "triplet-csv"}));
    cmd->add_flag("--standardize", standardize, "row-standardize before use");
    cmd->add_option("--pool", pool, "block-diagonal copies (I_B kron W)")->check(CLI::PositiveNumber);
    cmd->add_option("--label", label, "label used in table output");
  }

  WeightsSpec to_spec() const {
    WeightsSpec spec;
    if (!grid.empty()) {
      spec.grid_rows = grid[0];
      spec.grid_cols = grid[1];
    }
    spec.file = file;
    spec.file_format = parse_weights_format(format);
    spec.standardize = standardize;
    spec.pool = pool;
    spec.label = label;
    return spec;
  }
};

Theta parse_theta(const std::string& csv, Eigen::Index k_hint = -1) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      vals.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse theta component '" + part + "'");
    }
  }
  if (vals.size() < 3) throw std::invalid_argument("theta needs beta...,rho,sigma2 (>= 3 values)");
  if (k_hint >= 0 && static_cast<Eigen::Index>(vals.size()) != k_hint + 2) {
    throw std::invalid_argument("theta has " + std::to_string(vals.size()) + " components, expected " +
                                std::to_string(k_hint + 2));
  }
  Theta theta;
  theta.beta.resize(static_cast<Eigen::Index>(vals.size()) - 2);
  for (Eigen::Index i = 0; i < theta.beta.size(); ++i) theta.beta(i) = vals[static_cast<size_t>(i)];
  theta.rho = vals[vals.size() - 2];
  theta.sigma2 = vals[vals.size() - 1];
  return theta;
}

SemDesign design_from_sample(const SampleData& sample, const WeightsCliOptions& wopts) {
  WeightMatrix w = resolve_weights(wopts.to_spec());
  return make_design(sample.x, std::move(w));
}

int cmd_weights(const WeightsCliOptions& wopts, const std::string& out,
                const std::string& out_format, const std::string& invocation) {
  WeightMatrix w = resolve_weights(wopts.to_spec());
  const WeightsDiagnostics d = validate_weights(w);
  std::cout << "n=" << w.n << "\n"
            << "standardized=" << (w.standardized ? "true" : "false") << "\n"
            << "max_abs_row_sum=" << format_double(d.max_abs_row_sum) << "\n"
            << "max_abs_col_sum=" << format_double(d.max_abs_col_sum) << "\n"
            << "zero_rows=" << d.zero_rows << "\n"
            << "symmetric=" << (d.symmetric ? "true" : "false") << "\n";
  if (!out.empty()) {
    save_weights(w, out, parse_weights_format(out_format), provenance_header(invocation));
  }
  return 0;
}

int cmd_simulate(const WeightsCliOptions& wopts, const std::string& x_file,
                 const std::string& beta_csv, double rho, double sigma2,
                 const std::string& dist_str, std::uint64_t seed, const std::string& out,
                 const std::string& invocation) {
  WeightMatrix w = resolve_weights(wopts.to_spec());
  Eigen::MatrixXd x = x_file.empty() ? Eigen::MatrixXd(ramp_design_column(w.n))
                                     : read_csv_matrix(x_file);
  SemDesign design = make_design(std::move(x), std::move(w));
  Theta theta;
  {
    std::vector<double> vals;
    std::stringstream ss(beta_csv);
    std::string part;
    while (std::getline(ss, part, ',')) vals.push_back(std::stod(part));
    theta.beta = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  }
  theta.rho = rho;
  theta.sigma2 = sigma2;
  const SemSample sample = simulate(design, theta, parse_dist(dist_str), seed);
  write_sample(out, design.x, sample.y, invocation);
  return 0;
}

int cmd_test(const WeightsCliOptions& wopts, const std::string& sample_path,
             const std::string& theta_csv, double alpha, const std::string& method,
             bool machine) {
  const SampleData sample = read_sample(sample_path);
  const SemDesign design = design_from_sample(sample, wopts);
  const Theta theta0 = parse_theta(theta_csv, design.k);

  const bool do_el = method == "el" || method == "both";
  const bool do_lr = method == "lr" || method == "both";
  if (do_el) {
    const ElTestReport r = el_test(design, sample.y, theta0, alpha);
    std::cout << "method=el\n"
              << "statistic=" << format_double(r.el.statistic) << "\n"
              << "threshold=" << format_double(r.threshold) << "\n"
              << "covered=" << (r.covered ? "true" : "false") << "\n"
              << "status=" << lambda_status_name(r.el.lambda.status) << "\n"
              << "iterations=" << r.el.lambda.iterations << "\n"
              << "gradient_norm=" << format_double(r.el.lambda.gradient_norm) << "\n";
    std::cout << "lambda=";
    for (Eigen::Index i = 0; i < r.el.lambda.lambda.size(); ++i) {
      if (i > 0) std::cout << ',';
      std::cout << format_double(r.el.lambda.lambda(i));
    }
    std::cout << "\n";
    if (machine) {
      std::cout << "el," << format_double(r.el.statistic) << "," << format_double(r.threshold)
                << "," << (r.covered ? 1 : 0) << "," << lambda_status_name(r.el.lambda.status)
                << "," << r.el.lambda.iterations << "\n";
    }
  }
  if (do_lr) {
    const LrTestReport r = lr_test(design, sample.y, theta0, alpha);
    std::cout << "method=lr\n"
              << "statistic=" << format_double(r.statistic) << "\n"
              << "threshold=" << format_double(r.threshold) << "\n"
              << "covered=" << (r.covered ? "true" : "false") << "\n";
    if (machine) {
      std::cout << "lr," << format_double(r.statistic) << "," << format_double(r.threshold) << ","
                << (r.covered ? 1 : 0) << ",converged,0\n";
    }
  }
  return 0;
}

int cmd_mle(const WeightsCliOptions& wopts, const std::string& sample_path,
            const std::string& profile_out, const std::string& invocation) {
  const SampleData sample = read_sample(sample_path);
  const SemDesign design = design_from_sample(sample, wopts);
  const MlFit fit = mle(design, sample.y);
  if (!fit.converged) {
    std::cerr << "error=nonconvergence\n";
    return 2;
  }
  std::cout << "beta_hat=";
  for (Eigen::Index i = 0; i < fit.theta_hat.beta.size(); ++i) {
    if (i > 0) std::cout << ',';
    std::cout << format_double(fit.theta_hat.beta(i));
  }
  std::cout << "\nrho_hat=" << format_double(fit.theta_hat.rho) << "\n"
            << "sigma2_hat=" << format_double(fit.theta_hat.sigma2) << "\n"
            << "loglik=" << format_double(fit.loglik) << "\n"
            << "converged=true\n";
  if (!profile_out.empty()) {
    std::string out = provenance_header(invocation) + "rho,concentrated_loglik\n";
    for (const auto& [rho, value] : fit.rho_profile) {
      out += format_double(rho) + "," + format_double(value) + "\n";
    }
    atomic_write_text(profile_out, out);
  }
  return 0;
}

int cmd_coverage(const std::vector<std::string>& config_paths, const std::string& out_override,
                 const std::string& format_str, int reps_override, long long seed_override,
                 double alpha_override, int threads_override, const std::string& invocation) {
  std::vector<CoverageResult> results;
  std::string out_path = out_override;
  for (const auto& path : config_paths) {
    ExperimentConfig cfg = parse_experiment_config(path);
    if (reps_override > 0) cfg.reps = reps_override;
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    if (alpha_override > 0.0) cfg.alpha = alpha_override;
    if (threads_override > 0) cfg.threads = threads_override;
    if (out_path.empty() && !cfg.output.empty()) out_path = cfg.output;
    for (const auto& spec : expand_config(cfg)) {
      results.push_back(run_coverage(spec));
    }
  }
  if (out_path.empty()) throw std::invalid_argument("no output path: pass --out or set 'output' in the config");
  emit_table(results, parse_table_format(format_str), out_path, invocation);
  std::cout << "rows=" << results.size() << "\nout=" << out_path << "\n";
  return 0;
}

int cmd_calibrate(const WeightsCliOptions& wopts, const std::string& theta_csv,
                  const std::string& dist_str, int reps, std::uint64_t seed, int threads,
                  const std::string& out, const std::string& qq_out,
                  const std::string& invocation) {
  ExperimentSpec spec;
  spec.weights = wopts.to_spec();
  spec.theta0 = parse_theta(theta_csv);
  spec.dist = parse_dist(dist_str);
  spec.reps = reps;
  spec.base_seed = seed;
  spec.threads = threads;
  spec.run_el = true;
  spec.run_lr = false;

  const std::vector<double> grid = {0.5, 0.75, 0.9, 0.95, 0.99};
  const CalibrationReport report = run_calibration(spec, grid);

  // Empirical covariance of the summed estimating functions vs the exact
  // Sigma matrix, over the same replication count.
  WeightMatrix w = resolve_weights(spec.weights);
  Eigen::MatrixXd x = spec.x_file.empty() ? Eigen::MatrixXd(ramp_design_column(w.n))
                                          : read_csv_matrix(spec.x_file);
  SemDesign design = make_design(std::move(x), std::move(w));
  const Eigen::MatrixXd a0 = build_a(design.w, spec.theta0.rho);
  const GMatrices gm = g_matrices(design.w, spec.theta0.rho);
  const DistMoments m = dist_moments(spec.dist, spec.theta0.sigma2);
  const SigmaBlocks sigma = sigma_matrix(design, a0, gm.gtilde, m);

  const Eigen::Index d = design.k + 2;
  Eigen::MatrixXd sums(spec.reps, d);
  for (int r = 0; r < spec.reps; ++r) {
    const SemSample s = simulate(design, spec.theta0, spec.dist, spec.base_seed + 1 + r);
    const Eigen::VectorXd eps0 = a0 * (s.y - design.x * spec.theta0.beta);
    sums.row(r) = omega(design, gm.gtilde, a0, eps0, spec.theta0.sigma2).values.colwise().sum();
  }
  const Eigen::RowVectorXd mean = sums.colwise().mean();
  const Eigen::MatrixXd centered = sums.rowwise() - mean;
  const Eigen::MatrixXd empirical = (centered.transpose() * centered) / (spec.reps - 1.0);
  const double frob_rel = (empirical - sigma.full).norm() / sigma.full.norm();
  const auto [eig_lo, eig_hi] = sigma_eigen_range_over_n(sigma, design.n);

  std::string csv = provenance_header(invocation);
  csv += "record,a,b,theoretical,empirical\n";
  csv += "ks,,,," + format_double(report.ks_distance) + "\n";
  csv += "infeasible,,,," + std::to_string(report.infeasible) + "\n";
  for (const auto& q : report.quantiles) {
    csv += "quantile," + format_double(q.alpha) + "," + format_double(q.z) + "," +
           format_double(q.alpha) + "," + format_double(q.empirical) + "\n";
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      csv += "sigma," + std::to_string(i + 1) + "," + std::to_string(j + 1) + "," +
             format_double(sigma.full(i, j)) + "," + format_double(empirical(i, j)) + "\n";
    }
  }
  csv += "sigma_frobenius_rel_error,,,," + format_double(frob_rel) + "\n";
  csv += "sigma_eigen_min_over_n,,,," + format_double(eig_lo) + "\n";
  csv += "sigma_eigen_max_over_n,,,," + format_double(eig_hi) + "\n";
  atomic_write_text(out, csv);

  if (!qq_out.empty()) {
    std::vector<double> sorted(report.statistics.data(),
                               report.statistics.data() + report.statistics.size());
    std::sort(sorted.begin(), sorted.end());
    std::string qq = provenance_header(invocation) + "p,theoretical,empirical\n";
    for (size_t i = 0; i < sorted.size(); ++i) {
      const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(sorted.size());
      qq += format_double(p) + "," + format_double(chi2_quantile(report.df, p)) + "," +
            format_double(sorted[i]) + "\n";
    }
    atomic_write_text(qq_out, qq);
  }
  std::cout << "ks_distance=" << format_double(report.ks_distance) << "\n"
            << "sigma_frobenius_rel_error=" << format_double(frob_rel) << "\n"
            << "out=" << out << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Empirical-likelihood and Gaussian-LR confidence-region tools for linear "
               "regression with spatial autoregressive errors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", build_identifier());
  const std::string invocation = join_invocation(argc, argv);

  // weights
  auto* weights_cmd = app.add_subcommand("weights", "build, transform and inspect weight matrices");
  WeightsCliOptions weights_opts;
  weights_opts.attach(weights_cmd);
  std::string weights_out;
  std::string weights_out_format = "dense-csv";
  weights_cmd->add_option("--out", weights_out, "output file");
  weights_cmd->add_option("--out-format", weights_out_format, "output format")
      ->check(CLI::IsMember({"dense-csv", "triplet-csv"}));

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "draw one sample from the model");
  WeightsCliOptions sim_wopts;
  sim_wopts.attach(sim_cmd);
  std::string sim_x, sim_beta = "3.5", sim_dist = "normal", sim_out;
  double sim_rho = 0.0, sim_sigma2 = 1.0;
  std::uint64_t sim_seed = 1;
  sim_cmd->add_option("--x-file", sim_x, "design matrix CSV (default: ramp x_i = i/(n+1))");
  sim_cmd->add_option("--beta", sim_beta, "comma-separated coefficients");
  sim_cmd->add_option("--rho", sim_rho, "autoregressive parameter, |rho| < 1")->required();
  sim_cmd->add_option("--sigma2", sim_sigma2, "innovation variance");
  sim_cmd->add_option("--dist", sim_dist, "normal|t5|chisq4")
      ->check(CLI::IsMember({"normal", "t5", "chisq4"}));
  sim_cmd->add_option("--seed", sim_seed, "RNG seed");
  sim_cmd->add_option("--out", sim_out, "sample CSV path")->required();

  // test
  auto* test_cmd = app.add_subcommand("test", "confidence-region membership test at theta0");
  WeightsCliOptions test_wopts;
  test_wopts.attach(test_cmd);
  std::string test_sample, test_theta, test_method = "el";
  double test_alpha = 0.95;
  bool test_machine = false;
  test_cmd->add_option("--sample", test_sample, "sample CSV from `simulate`")->required();
  test_cmd->add_option("--theta0", test_theta, "beta...,rho,sigma2")->required();
  test_cmd->add_option("--alpha", test_alpha, "confidence level");
  test_cmd->add_option("--method", test_method, "el|lr|both")
      ->check(CLI::IsMember({"el", "lr", "both"}));
  test_cmd->add_flag("--machine", test_machine, "also print a machine-readable row");

  // mle
  auto* mle_cmd = app.add_subcommand("mle", "Gaussian maximum likelihood fit");
  WeightsCliOptions mle_wopts;
  mle_wopts.attach(mle_cmd);
  std::string mle_sample, mle_profile_out;
  mle_cmd->add_option("--sample", mle_sample, "sample CSV")->required();
  mle_cmd->add_option("--profile-out", mle_profile_out, "write the rho profile curve CSV");

  // coverage
  auto* cov_cmd = app.add_subcommand("coverage", "Monte Carlo coverage experiments");
  std::vector<std::string> cov_configs;
  std::string cov_out, cov_format = "csv";
  int cov_reps = 0, cov_threads = 0;
  long long cov_seed = -1;
  double cov_alpha = 0.0;
  cov_cmd->add_option("--config", cov_configs, "experiment config file(s)")->required();
  cov_cmd->add_option("--out", cov_out, "output table path (overrides config)");
  cov_cmd->add_option("--format", cov_format, "csv|markdown")
      ->check(CLI::IsMember({"csv", "markdown"}));
  cov_cmd->add_option("--reps", cov_reps, "override replication count");
  cov_cmd->add_option("--seed", cov_seed, "override base seed");
  cov_cmd->add_option("--alpha", cov_alpha, "override confidence level");
  cov_cmd->add_option("--threads", cov_threads, "worker thread cap");

  // calibrate
  auto* cal_cmd = app.add_subcommand("calibrate", "chi-squared calibration and Sigma check");
  WeightsCliOptions cal_wopts;
  cal_wopts.attach(cal_cmd);
  std::string cal_theta, cal_dist = "normal", cal_out, cal_qq;
  int cal_reps = 2000, cal_threads = 0;
  std::uint64_t cal_seed = 1;
  cal_cmd->add_option("--theta", cal_theta, "beta...,rho,sigma2")->required();
  cal_cmd->add_option("--dist", cal_dist, "normal|t5|chisq4")
      ->check(CLI::IsMember({"normal", "t5", "chisq4"}));
  cal_cmd->add_option("--reps", cal_reps, "replications");
  cal_cmd->add_option("--seed", cal_seed, "base seed");
  cal_cmd->add_option("--threads", cal_threads, "worker thread cap");
  cal_cmd->add_option("--out", cal_out, "calibration CSV path")->required();
  cal_cmd->add_option("--qq-out", cal_qq, "QQ pairs CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (weights_cmd->parsed()) {
      return cmd_weights(weights_opts, weights_out, weights_out_format, invocation);
    }
    if (sim_cmd->parsed()) {
      return cmd_simulate(sim_wopts, sim_x, sim_beta, sim_rho, sim_sigma2, sim_dist, sim_seed,
                          sim_out, invocation);
    }
    if (test_cmd->parsed()) {
      return cmd_test(test_wopts, test_sample, test_theta, test_alpha, test_method, test_machine);
    }
    if (mle_cmd->parsed()) {
      return cmd_mle(mle_wopts, mle_sample, mle_profile_out, invocation);
    }
    if (cov_cmd->parsed()) {
      return cmd_coverage(cov_configs, cov_out, cov_format, cov_reps, cov_seed, cov_alpha,
                          cov_threads, invocation);
    }
    if (cal_cmd->parsed()) {
      return cmd_calibrate(cal_wopts, cal_theta, cal_dist, cal_reps, cal_seed, cal_threads,
                           cal_out, cal_qq, invocation);
    }
  } catch (const SingularityError& e) {
    std::cerr << "error=singularity\n" << e.what() << "\n";
    return 2;
  } catch (const InconsistentFitError& e) {
    std::cerr << "error=nonconvergence\n" << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error=format\n" << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error=io\n" << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace semel
