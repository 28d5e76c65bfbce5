#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hvo {

/// Malformed input text (CSV row, JSON document, binary cache).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Interpolation query outside the bounding box of a table.
class OutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The powertrain cannot follow the mission (conventional envelope violation,
/// empty feasible set in the optimal control problem, dead end in a rollout).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoFeasibleRatio : public InfeasibleError {
 public:
  using InfeasibleError::InfeasibleError;
};

class AllInfeasible : public InfeasibleError {
 public:
  using InfeasibleError::InfeasibleError;
};

class DeadEnd : public InfeasibleError {
 public:
  DeadEnd(std::size_t stage, const std::string& what)
      : InfeasibleError(what), stage_(stage) {}
  std::size_t stage() const { return stage_; }

 private:
  std::size_t stage_;
};

}  // namespace hvo
