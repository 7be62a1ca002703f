#include "semel/weights.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "semel/errors.hpp"
#include "semel/io.hpp"

namespace semel {

WeightsFormat parse_weights_format(const std::string& name) {
  if (name == "dense-csv") return WeightsFormat::DenseCsv;
  if (name == "triplet-csv") return WeightsFormat::TripletCsv;
  throw std::invalid_argument("unknown weights format: " + name);
}

const char* weights_format_name(WeightsFormat format) {
  return format == WeightsFormat::DenseCsv ? "dense-csv" : "triplet-csv";
}

void check_weights(const WeightMatrix& w) {
  if (w.n < 1 || w.values.rows() != w.n || w.values.cols() != w.n) {
    throw std::invalid_argument("weight matrix must be square with n >= 1");
  }
  for (Eigen::Index i = 0; i < w.n; ++i) {
    if (w.values(i, i) != 0.0) throw std::invalid_argument("weight matrix diagonal must be zero");
    for (Eigen::Index j = 0; j < w.n; ++j) {
      const double v = w.values(i, j);
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("weight matrix entries must be finite and nonnegative");
      }
    }
  }
  if (w.standardized) {
    for (Eigen::Index i = 0; i < w.n; ++i) {
      const double s = w.values.row(i).sum();
      if (s != 0.0 && std::abs(s - 1.0) > 1e-12) {
        throw std::invalid_argument("standardized flag set but row " + std::to_string(i + 1) +
                                    " sums to " + format_double(s));
      }
    }
  }
}

WeightMatrix build_grid_queen(int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid dimensions must be positive");
  const long n_long = static_cast<long>(rows) * cols;
  if (n_long < 2) throw std::invalid_argument("grid must contain at least 2 cells");
  const auto n = static_cast<Eigen::Index>(n_long);

  WeightMatrix w;
  w.n = n;
  w.values = Eigen::MatrixXd::Zero(n, n);
  w.standardized = false;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Eigen::Index i = static_cast<Eigen::Index>(r) * cols + c;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
          const Eigen::Index j = static_cast<Eigen::Index>(rr) * cols + cc;
          w.values(i, j) = 1.0;
        }
      }
    }
  }
  return w;
}

WeightMatrix row_standardize(const WeightMatrix& w, StandardizeReport* report) {
  check_weights(w);
  WeightMatrix out;
  out.n = w.n;
  out.values = w.values;
  out.standardized = true;
  for (Eigen::Index i = 0; i < w.n; ++i) {
    const double s = out.values.row(i).sum();
    if (s > 0.0) {
      out.values.row(i) /= s;
    } else if (report != nullptr) {
      report->zero_rows.push_back(i);
    }
  }
  return out;
}

WeightMatrix kronecker_pool(int blocks, const WeightMatrix& w) {
  if (blocks < 1) throw std::invalid_argument("blocks must be positive");
  check_weights(w);
  WeightMatrix out;
  out.n = w.n * blocks;
  out.values = Eigen::MatrixXd::Zero(out.n, out.n);
  out.standardized = w.standardized;
  for (int b = 0; b < blocks; ++b) {
    out.values.block(b * w.n, b * w.n, w.n, w.n) = w.values;
  }
  return out;
}

namespace {

WeightMatrix load_dense(const std::string& path) {
  Eigen::MatrixXd m = read_csv_matrix(path);
  if (m.rows() != m.cols()) {
    throw FormatError("dense weights must be square, got " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()) + " in " + path);
  }
  WeightMatrix w;
  w.n = m.rows();
  w.values = std::move(m);
  w.standardized = false;
  return w;
}

WeightMatrix load_triplet(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open file: " + path);
  std::string line;
  long line_no = 0;
  long n = -1;
  WeightMatrix w;
  while (std::getline(in, line)) {
    ++line_no;
    std::string trimmed = line;
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) trimmed.pop_back();
    size_t start = 0;
    while (start < trimmed.size() && std::isspace(static_cast<unsigned char>(trimmed[start]))) ++start;
    trimmed = trimmed.substr(start);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    if (n < 0) {
      if (trimmed.rfind("n=", 0) != 0) throw FormatError("expected header 'n=<int>'", line_no);
      try {
        n = std::stol(trimmed.substr(2));
      } catch (const std::exception&) {
        throw FormatError("cannot parse header '" + trimmed + "'", line_no);
      }
      if (n < 1) throw FormatError("n must be positive", line_no);
      w.n = n;
      w.values = Eigen::MatrixXd::Zero(n, n);
      continue;
    }
    std::stringstream ss(trimmed);
    std::string fi, fj, fv;
    if (!std::getline(ss, fi, ',') || !std::getline(ss, fj, ',') || !std::getline(ss, fv)) {
      throw FormatError("expected 'i,j,value'", line_no);
    }
    long i = 0, j = 0;
    double v = 0.0;
    try {
      i = std::stol(fi);
      j = std::stol(fj);
      v = std::stod(fv);
    } catch (const std::exception&) {
      throw FormatError("cannot parse triplet '" + trimmed + "'", line_no);
    }
    if (i < 1 || i > n || j < 1 || j > n) {
      throw FormatError("index (" + std::to_string(i) + "," + std::to_string(j) +
                            ") out of range for n=" + std::to_string(n),
                        line_no);
    }
    if (!std::isfinite(v) || v < 0.0) {
      throw FormatError("weight values must be finite and nonnegative", line_no);
    }
    w.values(i - 1, j - 1) = v;
  }
  if (n < 0) throw FormatError("missing 'n=<int>' header in " + path);
  return w;
}

}  // namespace

WeightMatrix load_weights(const std::string& path, WeightsFormat format, LoadReport* report) {
  WeightMatrix w = format == WeightsFormat::DenseCsv ? load_dense(path) : load_triplet(path);
  for (Eigen::Index i = 0; i < w.n; ++i) {
    if (w.values(i, i) != 0.0) {
      w.values(i, i) = 0.0;
      if (report != nullptr) report->cleared_diagonal.push_back(i);
    }
    for (Eigen::Index j = 0; j < w.n; ++j) {
      const double v = w.values(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        throw FormatError("weight values must be finite and nonnegative in " + path);
      }
    }
  }
  w.standardized = false;
  return w;
}

void save_weights(const WeightMatrix& w, const std::string& path, WeightsFormat format,
                  const std::string& header) {
  std::string out = header;
  if (format == WeightsFormat::DenseCsv) {
    for (Eigen::Index i = 0; i < w.n; ++i) {
      for (Eigen::Index j = 0; j < w.n; ++j) {
        if (j > 0) out += ',';
        out += format_double(w.values(i, j));
      }
      out += '\n';
    }
  } else {
    out += "n=" + std::to_string(w.n) + "\n";
    for (Eigen::Index i = 0; i < w.n; ++i) {
      for (Eigen::Index j = 0; j < w.n; ++j) {
        if (w.values(i, j) != 0.0) {
          out += std::to_string(i + 1) + "," + std::to_string(j + 1) + "," +
                 format_double(w.values(i, j)) + "\n";
        }
      }
    }
  }
  atomic_write_text(path, out);
}

WeightsDiagnostics validate_weights(const WeightMatrix& w) {
  WeightsDiagnostics d;
  if (w.n == 0) return d;
  d.max_abs_row_sum = w.values.cwiseAbs().rowwise().sum().maxCoeff();
  d.max_abs_col_sum = w.values.cwiseAbs().colwise().sum().maxCoeff();
  for (Eigen::Index i = 0; i < w.n; ++i) {
    if (w.values.row(i).cwiseAbs().sum() == 0.0) ++d.zero_rows;
  }
  const double scale = std::max(1.0, w.values.cwiseAbs().maxCoeff());
  d.symmetric = (w.values - w.values.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
  return d;
}

}  // namespace semel
