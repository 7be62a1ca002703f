#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semel/sem.hpp"
#include "semel/weights.hpp"

namespace semel {

/// How to obtain the weight matrix of an experiment: a queen grid or a
/// file, optionally row-standardized (before pooling) and block-pooled.
struct WeightsSpec {
  int grid_rows = 0;
  int grid_cols = 0;
  std::string file;
  WeightsFormat file_format = WeightsFormat::DenseCsv;
  bool standardize = true;
  int pool = 1;
  std::string label;  // table row label; derived from the source when empty
};

WeightMatrix resolve_weights(const WeightsSpec& spec);
std::string weights_label(const WeightsSpec& spec);

struct ExperimentSpec {
  WeightsSpec weights;
  std::string x_file;  // empty => ramp design x_i = i/(n+1)
  Theta theta0;
  ErrorDist dist = ErrorDist::Normal;
  int reps = 2000;
  double alpha = 0.95;
  std::uint64_t base_seed = 1;
  bool run_el = true;
  bool run_lr = true;
  int threads = 0;  // 0 => hardware concurrency
};

struct CoverageResult {
  std::string label;
  double rho = 0.0;
  int reps = 0;
  std::optional<double> el_coverage;
  std::optional<double> lr_coverage;
  double el_se = 0.0;
  double lr_se = 0.0;
  int el_infeasible = 0;  // hull-infeasible replications (counted as not covered)
  int mle_failures = 0;   // non-converged fits (counted as not covered)
};

/// Simulates `reps` samples at theta0 (seed = base_seed + r) and tallies
/// how often each region covers theta0. A pure function of the spec:
/// results do not depend on thread count or scheduling.
CoverageResult run_coverage(const ExperimentSpec& spec);

struct QuantilePoint {
  double alpha = 0.0;
  double z = 0.0;          // chi2_{k+2} quantile
  double empirical = 0.0;  // P(el statistic <= z)
};

struct CalibrationReport {
  Eigen::VectorXd statistics;  // one EL statistic per replication, +inf if infeasible
  int df = 0;
  double ks_distance = 0.0;
  std::vector<QuantilePoint> quantiles;
  int infeasible = 0;
};

/// Collects the EL statistic across replications and compares its empirical
/// law with chi-squared(k+2) at the given quantile grid.
CalibrationReport run_calibration(const ExperimentSpec& spec,
                                  const std::vector<double>& quantile_grid);

enum class TableFormat { Csv, Markdown };
TableFormat parse_table_format(const std::string& name);

/// Writes one row per result with the fixed column order
/// rho,weights_label,lr_coverage,el_coverage,reps,lr_se,el_se,el_infeasible,mle_failures.
void emit_table(const std::vector<CoverageResult>& results, TableFormat format,
                const std::string& path, const std::string& invocation);

/// One experiment config file: key = value lines. Multiple rho values fan
/// out into one experiment (one table row) each.
struct ExperimentConfig {
  WeightsSpec weights;
  std::string x_file;
  Eigen::VectorXd beta;
  std::vector<double> rhos;
  double sigma2 = 1.0;
  ErrorDist dist = ErrorDist::Normal;
  int reps = 2000;
  double alpha = 0.95;
  std::uint64_t seed = 1;
  bool run_el = true;
  bool run_lr = true;
  int threads = 0;
  std::string output;
};

ExperimentConfig parse_experiment_config(const std::string& path);
std::vector<ExperimentSpec> expand_config(const ExperimentConfig& config);

}  // namespace semel
