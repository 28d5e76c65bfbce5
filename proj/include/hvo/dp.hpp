#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "hvo/executor.hpp"
#include "hvo/interp.hpp"

namespace hvo::dp {

inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();
inline constexpr std::uint32_t kNoControl = 0xFFFFFFFFu;
inline constexpr std::size_t kMaxDims = 4;

using Point = std::array<double, kMaxDims>;

/// Cartesian product of axes, flattened row-major (last axis fastest).
class TensorGrid {
 public:
  TensorGrid() = default;
  explicit TensorGrid(std::vector<Axis> axes);

  std::size_t dims() const { return axes_.size(); }
  const Axis& axis(std::size_t d) const { return axes_[d]; }
  const std::vector<Axis>& axes() const { return axes_; }
  std::size_t size() const { return size_; }
  std::size_t stride(std::size_t d) const { return strides_[d]; }

  /// Coordinates of node `flat`; only the first dims() entries are set.
  Point node(std::size_t flat) const;
  bool contains(const Point& x) const;

  friend bool operator==(const TensorGrid& a, const TensorGrid& b) { return a.axes_ == b.axes_; }

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Multilinear interpolation of a field stored on `grid`. Points outside the
/// hull are infeasible. Corners with zero weight are skipped, so a query on a
/// node returns the stored value exactly. An infeasible corner with positive
/// weight contributes `boundary_penalty`; with the default (infinite) penalty
/// any such corner makes the result infeasible. The result is infeasible
/// whenever every positive-weight corner is.
double interpolate(const TensorGrid& grid, std::span<const double> field, const Point& x,
                   double boundary_penalty = kInfeasible);

struct Transition {
  bool feasible = false;
  double cost = 0.0;
  Point next{};
};

/// Finite-horizon problem: stages k = 0 .. stage_count()-1 each take one
/// decision; the value field has stage_count()+1 slices.
class DpProblem {
 public:
  virtual ~DpProblem() = default;

  virtual std::size_t stage_count() const = 0;
  virtual const TensorGrid& state_grid() const = 0;
  virtual const TensorGrid& control_grid() const = 0;

  /// Evaluates every control-grid node at (k, state). out.size() equals
  /// control_grid().size(). Must be reentrant and must not throw for
  /// infeasible inputs.
  virtual void evaluate(std::size_t k, const Point& state, std::span<Transition> out) const = 0;

  virtual double terminal_cost(const Point& state) const = 0;

  /// Value assigned to infeasible corners of a partly feasible cell during
  /// cost-to-go interpolation. Infinite (strict) unless overridden.
  virtual double boundary_penalty() const { return kInfeasible; }

  /// Optional specialised Bellman update for stage k. Implementations must
  /// produce the same minimiser (same tie-breaking) as the generic update.
  /// Returns false when not provided.
  virtual bool bellman_stage(std::size_t /*k*/, std::span<const double> /*next_value*/,
                             std::span<double> /*value*/, std::span<std::uint32_t> /*policy*/,
                             Executor& /*executor*/) const {
    return false;
  }
};

struct Solution {
  TensorGrid states;
  TensorGrid controls;
  std::size_t stage_count = 0;
  std::vector<double> values;         // (stage_count + 1) slices
  std::vector<std::uint32_t> policy;  // stage_count slices; kNoControl where infeasible

  std::span<const double> value(std::size_t k) const {
    return {values.data() + k * states.size(), states.size()};
  }
  std::span<const std::uint32_t> policy_at(std::size_t k) const {
    return {policy.data() + k * states.size(), states.size()};
  }
  double value_at(std::size_t k, const Point& x, double boundary_penalty = kInfeasible) const {
    return interpolate(states, value(k), x, boundary_penalty);
  }

  friend bool operator==(const Solution&, const Solution&) = default;
};

struct SolveOptions {
  bool use_fast_path = true;
};

/// Backward Bellman recursion. Ties go to the lowest flat control index.
/// Throws AllInfeasible when no stage-0 state has a finite value.
Solution solve_backward(const DpProblem& problem, Executor& executor, SolveOptions options = {});

struct Trajectory {
  std::vector<Point> states;            // stage_count + 1
  std::vector<std::uint32_t> controls;  // stage_count
  std::vector<double> stage_costs;
  double terminal_cost = 0.0;
  /// Stage costs and terminal cost summed from the last stage backwards,
  /// the same association order as the Bellman recursion.
  double total_cost = 0.0;
};

/// Forward pass from x0. At every stage all controls are re-evaluated at the
/// actual (off-grid) state and scored against the interpolated next value.
/// Throws DeadEnd with the stage index when no control is admissible.
Trajectory rollout(const DpProblem& problem, const Solution& solution, const Point& x0);

/// weight * max(0, target - terminal): a deficit is penalised, surplus is free.
double terminal_soc_penalty(double soc_terminal, double soc_target, double weight);

/// Binary cache: "DPV1", little-endian header with both grids, then values
/// and policy. Throws IoError / ParseError.
void save_solution(const Solution& solution, const std::filesystem::path& path);
Solution load_solution(const std::filesystem::path& path);

}  // namespace hvo::dp
