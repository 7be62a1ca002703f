#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace semel {

enum class WeightsFormat { DenseCsv, TripletCsv };

WeightsFormat parse_weights_format(const std::string& name);
const char* weights_format_name(WeightsFormat format);

/// Spatial weights: nonnegative entries, zero diagonal. `standardized`
/// records that every row with a nonzero entry has been scaled to unit sum.
struct WeightMatrix {
  Eigen::Index n = 0;
  Eigen::MatrixXd values;
  bool standardized = false;
};

/// Throws std::invalid_argument if `w` violates the type invariants.
void check_weights(const WeightMatrix& w);

/// Binary queen-contiguity weights on a rows x cols grid in row-major cell
/// order: cells are neighbours iff they share an edge or a vertex.
WeightMatrix build_grid_queen(int rows, int cols);

struct StandardizeReport {
  std::vector<Eigen::Index> zero_rows;  // 0-based rows left untouched
};

/// Divides each row by its sum. Zero rows are left unchanged and reported.
WeightMatrix row_standardize(const WeightMatrix& w, StandardizeReport* report = nullptr);

/// Block-diagonal pooling: `blocks` copies of `w` (I_blocks Kronecker w).
WeightMatrix kronecker_pool(int blocks, const WeightMatrix& w);

struct LoadReport {
  std::vector<Eigen::Index> cleared_diagonal;  // 0-based units whose W[i][i] was forced to 0
};

/// Loads a weight matrix from disk. Nonzero diagonal entries are forced to
/// zero and reported. Throws FormatError naming the offending line on parse
/// failures, non-square dense input, or out-of-range triplet indices.
WeightMatrix load_weights(const std::string& path, WeightsFormat format,
                          LoadReport* report = nullptr);

/// Writes `w` to disk. `header` is prepended verbatim when nonempty (used
/// for provenance comment lines). dense-csv round-trips bit-exactly.
void save_weights(const WeightMatrix& w, const std::string& path, WeightsFormat format,
                  const std::string& header = {});

struct WeightsDiagnostics {
  double max_abs_row_sum = 0.0;
  double max_abs_col_sum = 0.0;
  Eigen::Index zero_rows = 0;
  bool symmetric = true;
};

WeightsDiagnostics validate_weights(const WeightMatrix& w);

}  // namespace semel
