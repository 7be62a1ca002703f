#pragma once

#include <stdexcept>
#include <string>

namespace semel {

/// A(rho) (or another factorization) is numerically singular. Carries the
/// offending pivot magnitude.
class SingularityError : public std::runtime_error {
public:
  SingularityError(const std::string& what, double pivot)
      : std::runtime_error(what), pivot_(pivot) {}

  double pivot() const noexcept { return pivot_; }

private:
  double pivot_;
};

/// Malformed input file. `line` is the 1-based offending line when known.
class FormatError : public std::runtime_error {
public:
  explicit FormatError(const std::string& what, long line = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")"
                                     : what),
        line_(line) {}

  long line() const noexcept { return line_; }

private:
  long line_;
};

/// The likelihood optimizer produced an internally inconsistent fit.
class InconsistentFitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace semel
