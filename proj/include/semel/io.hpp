#pragma once

#include <Eigen/Dense>
#include <string>

namespace semel {

/// Shortest decimal form that parses back to the same double (%.17g).
std::string format_double(double v);

/// Writes `content` to a temporary file in the target directory and renames
/// it into place, so readers never observe a partial file.
void atomic_write_text(const std::string& path, const std::string& content);

/// Two comment lines recording how an output file was produced. The
/// `# generated:` timestamp line is the only non-reproducible output byte.
std::string provenance_header(const std::string& invocation);

/// Dense numeric CSV reader; lines starting with '#' and blank lines are
/// skipped. All rows must have the same width.
Eigen::MatrixXd read_csv_matrix(const std::string& path);

struct SampleData {
  Eigen::MatrixXd x;  // n x k
  Eigen::VectorXd y;  // n
};

/// Sample files carry columns (i, x1..xk, y) with a header row.
void write_sample(const std::string& path, const Eigen::MatrixXd& x,
                  const Eigen::VectorXd& y, const std::string& invocation);
SampleData read_sample(const std::string& path);

}  // namespace semel
