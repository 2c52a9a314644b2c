#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace msvdd {

/// Bad caller input: dimension mismatch, empty data, invalid parameters.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed text input. Carries the 1-based line number.
class ParseError : public InputError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// C * |members| < 1: the capped simplex {0 <= a <= C, sum a = 1} is empty.
class InfeasibleSubproblemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The dual QP hit its iteration cap. Keeps the best iterate and its gap.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> best_alpha, double gap)
      : std::runtime_error(what), best_alpha_(std::move(best_alpha)), gap_(gap) {}
  const std::vector<double>& best_alpha() const { return best_alpha_; }
  double gap() const { return gap_; }

 private:
  std::vector<double> best_alpha_;
  double gap_;
};

/// Unrecoverable failure inside the exact search.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// AUC requested with only one class present.
class UndefinedMetricError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace msvdd
