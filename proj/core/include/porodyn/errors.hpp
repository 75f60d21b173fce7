// Exception taxonomy shared by all modules. Every throwing path in the public
// API uses one of these types; plain std::runtime_error never escapes.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace porodyn {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Argument outside the model interval I (or too close to a finite endpoint).
struct DomainError : Error {
  using Error::Error;
};

// Value outside the range of an invertible map (e.g. beta on a bounded table).
struct RangeError : Error {
  using Error::Error;
};

// Structurally invalid construction parameters.
struct ConfigError : Error {
  using Error::Error;
};

// Iterative solver exhausted its budget; carries the last residual.
struct NoConvergence : Error {
  double residual;
  long iterations;
  NoConvergence(const std::string& msg, double res, long iters)
      : Error(msg + " (residual " + std::to_string(res) + " after " +
              std::to_string(iters) + " iterations)"),
        residual(res),
        iterations(iters) {}
};

// Operation requires a boundary condition the grid does not have.
struct BCError : Error {
  using Error::Error;
};

// Grid or problem size beyond a documented cap.
struct SizeError : Error {
  using Error::Error;
};

// Operation requires a model property (e.g. a smooth approximation) it lacks.
struct ModelError : Error {
  using Error::Error;
};

// Test function support touches the boundary of the domain of definition.
struct SupportError : Error {
  using Error::Error;
};

// Picard iteration contraction ratios exceeded the divergence threshold.
struct PicardDivergence : Error {
  using Error::Error;
};

// Config file is not syntactically valid TOML (subset); carries line info.
struct ParseError : Error {
  int line;
  ParseError(const std::string& msg, int line_no)
      : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

// Config is syntactically valid but violates constraints; aggregates all of
// them instead of stopping at the first.
struct ValidationError : Error {
  std::vector<std::string> violations;
  explicit ValidationError(std::vector<std::string> v)
      : Error(join(v)), violations(std::move(v)) {}

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "config validation failed:";
    for (const auto& e : v) s += "\n  - " + e;
    return s;
  }
};

// Filesystem failures while writing artifacts.
struct IOError : Error {
  using Error::Error;
};

// NaN/Inf detected after a public operation.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace porodyn
