#pragma once

#include <stdexcept>
#include <string>

namespace selfcheck {

/// Thrown when a caller violates a documented precondition (bad shapes,
/// out-of-range parameters, malformed requests). These are caller bugs, not
/// data problems.
class RejectedInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numeric computation produces non-finite intermediates or
/// visibly diverges. Carries the offending layer index when the failure
/// happened inside a model evaluation (-1 otherwise).
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what, int layer = -1)
      : std::runtime_error(what), layer_(layer) {}

  /// Index of the model layer (encoder layers first, then predictor layers)
  /// where a non-finite value was first observed, or -1 if not applicable.
  int layer() const { return layer_; }

 private:
  int layer_;
};

/// Thrown when a text input (CSV, config) cannot be parsed. Carries the
/// 1-based line number of the offending record (0 when unknown).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what, long line = 0)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")"
                                    : what),
        line_(line) {}

  long line() const { return line_; }

 private:
  long line_;
};

/// Thrown when a requested statistic is undefined for the given instance
/// (for example an average over an empty set with no documented fallback).
class UndefinedCondition : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace selfcheck
