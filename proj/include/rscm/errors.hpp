#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace rscm {

/// Base of every error raised by the library. `kind()` is a short stable
/// token used by the command-line front end for machine-readable output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message) : Error("dimension", message) {}
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& message) : Error("parameter", message) {}
};

class InsufficientSamplesError : public Error {
 public:
  explicit InsufficientSamplesError(const std::string& message)
      : Error("insufficient_samples", message) {}
};

/// Symmetric positive-definite factorization failed at `pivot()`.
class SingularityError : public Error {
 public:
  SingularityError(Eigen::Index pivot, const std::string& message)
      : Error("singular", message), pivot_(pivot) {}

  Eigen::Index pivot() const noexcept { return pivot_; }

 private:
  Eigen::Index pivot_;
};

/// Degenerate data or matrix. `column()` is -1 unless a specific column is at fault.
class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& message, Eigen::Index column = -1)
      : Error("degenerate", message), column_(column) {}

  Eigen::Index column() const noexcept { return column_; }

 private:
  Eigen::Index column_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, Eigen::VectorXd last_iterate, double residual)
      : Error("convergence", message),
        last_iterate_(std::move(last_iterate)),
        residual_(residual) {}

  const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
  double residual() const noexcept { return residual_; }

 private:
  Eigen::VectorXd last_iterate_;
  double residual_;
};

class SizeCapError : public Error {
 public:
  explicit SizeCapError(const std::string& message) : Error("size_cap", message) {}
};

/// Malformed input text. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column = 0)
      : Error("parse", message), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ExperimentError : public Error {
 public:
  explicit ExperimentError(const std::string& message) : Error("experiment", message) {}
};

/// Estimation failed inside a rolling backtest; `window()` is the 0-based rebalance index.
class BacktestError : public Error {
 public:
  BacktestError(std::size_t window, const std::string& message)
      : Error("backtest", message), window_(window) {}

  std::size_t window() const noexcept { return window_; }

 private:
  std::size_t window_;
};

}  // namespace rscm
