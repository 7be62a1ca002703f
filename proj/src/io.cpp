#include "semel/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "semel/errors.hpp"

namespace semel {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write_text(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("rename failed for " + path + ": " + ec.message());
  }
}

std::string provenance_header(const std::string& invocation) {
  char stamp[64] = "unknown";
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  if (gmtime_r(&now, &tm_utc) != nullptr) {
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  }
  return "# invocation: " + invocation + "\n# generated: " + stamp + "\n";
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool blank_or_comment(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

double parse_field(const std::string& field, long line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(begin, &end);
  while (end != nullptr && *end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
  if (end == begin || (end != nullptr && *end != '\0') || errno == ERANGE) {
    throw FormatError("cannot parse number '" + field + "'", line_no);
  }
  return v;
}

}  // namespace

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  Eigen::Index width = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;
    auto fields = split_csv_line(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_field(f, line_no));
    if (width < 0) width = static_cast<Eigen::Index>(row.size());
    if (static_cast<Eigen::Index>(row.size()) != width) {
      throw FormatError("ragged row: expected " + std::to_string(width) + " fields, got " +
                            std::to_string(row.size()),
                        line_no);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("no data rows in " + path);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), width);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < width; ++j) m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  return m;
}

void write_sample(const std::string& path, const Eigen::MatrixXd& x,
                  const Eigen::VectorXd& y, const std::string& invocation) {
  if (x.rows() != y.size()) throw std::invalid_argument("write_sample: x/y row mismatch");
  std::string out = provenance_header(invocation);
  out += "i";
  for (Eigen::Index j = 0; j < x.cols(); ++j) out += ",x" + std::to_string(j + 1);
  out += ",y\n";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out += std::to_string(i + 1);
    for (Eigen::Index j = 0; j < x.cols(); ++j) out += "," + format_double(x(i, j));
    out += "," + format_double(y(i)) + "\n";
  }
  atomic_write_text(path, out);
}

SampleData read_sample(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open file: " + path);
  std::string line;
  long line_no = 0;
  bool header_seen = false;
  Eigen::Index k = -1;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;
    auto fields = split_csv_line(line);
    if (!header_seen) {
      if (fields.size() < 3 || fields.front() != "i" || fields.back() != "y") {
        throw FormatError("expected sample header 'i,x1..xk,y'", line_no);
      }
      k = static_cast<Eigen::Index>(fields.size()) - 2;
      header_seen = true;
      continue;
    }
    if (static_cast<Eigen::Index>(fields.size()) != k + 2) {
      throw FormatError("sample row width mismatch", line_no);
    }
    std::vector<double> row;
    for (size_t j = 1; j < fields.size(); ++j) row.push_back(parse_field(fields[j], line_no));
    rows.push_back(std::move(row));
  }
  if (!header_seen || rows.empty()) throw FormatError("no sample rows in " + path);
  SampleData s;
  const auto n = static_cast<Eigen::Index>(rows.size());
  s.x.resize(n, k);
  s.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) s.x(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    s.y(i) = rows[static_cast<size_t>(i)][static_cast<size_t>(k)];
  }
  return s;
}

}  // namespace semel
