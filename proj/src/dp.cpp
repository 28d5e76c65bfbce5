#include "hvo/dp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "hvo/errors.hpp"

namespace hvo::dp {

TensorGrid::TensorGrid(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > kMaxDims) {
    throw InvalidArgument("grid needs between 1 and " + std::to_string(kMaxDims) + " axes");
  }
  strides_.resize(axes_.size());
  size_ = 1;
  for (std::size_t d = axes_.size(); d-- > 0;) {
    strides_[d] = size_;
    size_ *= axes_[d].size();
  }
}

Point TensorGrid::node(std::size_t flat) const {
  Point x{};
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    x[d] = axes_[d][(flat / strides_[d]) % axes_[d].size()];
  }
  return x;
}

bool TensorGrid::contains(const Point& x) const {
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    if (!axes_[d].contains(x[d])) return false;
  }
  return true;
}

double interpolate(const TensorGrid& grid, std::span<const double> field, const Point& x,
                   double boundary_penalty) {
  const std::size_t dims = grid.dims();
  std::array<Cell, kMaxDims> cells{};
  for (std::size_t d = 0; d < dims; ++d) {
    if (!grid.axis(d).contains(x[d])) return kInfeasible;
    cells[d] = grid.axis(d).locate(x[d]);
  }
  double sum = 0.0;
  bool any_finite = false;
  for (std::size_t mask = 0; mask < (std::size_t{1} << dims); ++mask) {
    double w = 1.0;
    std::size_t flat = 0;
    for (std::size_t d = 0; d < dims; ++d) {
      const bool upper = (mask >> (dims - 1 - d)) & 1u;
      w *= upper ? cells[d].t : 1.0 - cells[d].t;
      flat += (cells[d].index + (upper ? 1 : 0)) * grid.stride(d);
    }
    if (w == 0.0) continue;
    double v = field[flat];
    if (v == kInfeasible) {
      if (boundary_penalty == kInfeasible) return kInfeasible;
      v = boundary_penalty;
    } else {
      any_finite = true;
    }
    sum += w * v;
  }
  return any_finite ? sum : kInfeasible;
}

namespace {

void generic_stage(const DpProblem& problem, std::size_t k, std::span<const double> next,
                   std::span<double> value, std::span<std::uint32_t> policy, Executor& ex) {
  const TensorGrid& states = problem.state_grid();
  const std::size_t controls = problem.control_grid().size();
  const double penalty = problem.boundary_penalty();
  ex.parallel_for(states.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<Transition> out(controls);
    for (std::size_t s = begin; s < end; ++s) {
      problem.evaluate(k, states.node(s), out);
      double best = kInfeasible;
      std::uint32_t arg = kNoControl;
      for (std::size_t c = 0; c < controls; ++c) {
        if (!out[c].feasible) continue;
        const double v = interpolate(states, next, out[c].next, penalty);
        if (v == kInfeasible) continue;
        const double total = out[c].cost + v;
        if (total < best) {
          best = total;
          arg = static_cast<std::uint32_t>(c);
        }
      }
      value[s] = best;
      policy[s] = arg;
    }
  });
}

}  // namespace

Solution solve_backward(const DpProblem& problem, Executor& executor, SolveOptions options) {
  Solution sol;
  sol.states = problem.state_grid();
  sol.controls = problem.control_grid();
  sol.stage_count = problem.stage_count();
  if (sol.stage_count < 1) throw InvalidArgument("problem needs at least one decision stage");
  if (sol.controls.size() >= kNoControl) throw InvalidArgument("control grid too large");
  const std::size_t n = sol.states.size();
  const std::size_t stages = sol.stage_count;
  sol.values.assign((stages + 1) * n, kInfeasible);
  sol.policy.assign(stages * n, kNoControl);

  double* terminal = sol.values.data() + stages * n;
  executor.parallel_for(n, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) terminal[s] = problem.terminal_cost(sol.states.node(s));
  });

  for (std::size_t k = stages; k-- > 0;) {
    std::span<const double> next(sol.values.data() + (k + 1) * n, n);
    std::span<double> value(sol.values.data() + k * n, n);
    std::span<std::uint32_t> policy(sol.policy.data() + k * n, n);
    if (options.use_fast_path && problem.bellman_stage(k, next, value, policy, executor)) continue;
    generic_stage(problem, k, next, value, policy, executor);
  }

  const auto v0 = sol.value(0);
  if (std::none_of(v0.begin(), v0.end(), [](double v) { return v < kInfeasible; })) {
    throw AllInfeasible("no initial state has a feasible control sequence");
  }
  return sol;
}

Trajectory rollout(const DpProblem& problem, const Solution& solution, const Point& x0) {
  const std::size_t stages = solution.stage_count;
  if (!solution.states.contains(x0)) throw InvalidArgument("initial state outside the state grid");
  const double penalty = problem.boundary_penalty();
  if (!(solution.value_at(0, x0, penalty) < kInfeasible)) {
    throw DeadEnd(0, "initial state has no feasible control sequence");
  }
  Trajectory tr;
  tr.states.reserve(stages + 1);
  tr.controls.reserve(stages);
  tr.stage_costs.reserve(stages);
  std::vector<Transition> out(solution.controls.size());
  Point x = x0;
  tr.states.push_back(x);
  for (std::size_t k = 0; k < stages; ++k) {
    problem.evaluate(k, x, out);
    const auto next_value = solution.value(k + 1);
    double best = kInfeasible;
    std::uint32_t arg = kNoControl;
    for (std::size_t c = 0; c < out.size(); ++c) {
      if (!out[c].feasible) continue;
      const double v = interpolate(solution.states, next_value, out[c].next, penalty);
      if (v == kInfeasible) continue;
      const double total = out[c].cost + v;
      if (total < best) {
        best = total;
        arg = static_cast<std::uint32_t>(c);
      }
    }
    if (arg == kNoControl) {
      throw DeadEnd(k, "no admissible control at stage " + std::to_string(k));
    }
    tr.controls.push_back(arg);
    tr.stage_costs.push_back(out[arg].cost);
    x = out[arg].next;
    tr.states.push_back(x);
  }
  tr.terminal_cost = problem.terminal_cost(x);
  tr.total_cost = tr.terminal_cost;
  for (std::size_t k = stages; k-- > 0;) tr.total_cost = tr.stage_costs[k] + tr.total_cost;
  return tr;
}

double terminal_soc_penalty(double soc_terminal, double soc_target, double weight) {
  if (!(weight > 0.0)) throw InvalidArgument("terminal penalty weight must be positive");
  return weight * std::max(0.0, soc_target - soc_terminal);
}

namespace {

constexpr char kMagic[4] = {'D', 'P', 'V', '1'};

template <class T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw ParseError("value cache is truncated");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

void put_grid(std::ostream& out, const TensorGrid& g) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.dims()));
  for (const Axis& a : g.axes()) {
    put<std::uint64_t>(out, a.size());
    for (double p : a.points()) put<double>(out, p);
  }
}

TensorGrid get_grid(std::istream& in) {
  const auto dims = get<std::uint32_t>(in);
  if (dims == 0 || dims > kMaxDims) throw ParseError("value cache has a bad grid header");
  std::vector<Axis> axes;
  for (std::uint32_t d = 0; d < dims; ++d) {
    const auto n = get<std::uint64_t>(in);
    if (n < 1 || n > 100000) throw ParseError("value cache has a bad axis length");
    std::vector<double> pts(n);
    for (auto& p : pts) p = get<double>(in);
    try {
      axes.emplace_back(std::move(pts));
    } catch (const InvalidArgument& e) {
      throw ParseError(std::string("value cache axis: ") + e.what());
    }
  }
  return TensorGrid(std::move(axes));
}

}  // namespace

void save_solution(const Solution& sol, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write value cache " + path.string());
  out.write(kMagic, 4);
  put_grid(out, sol.states);
  put_grid(out, sol.controls);
  put<std::uint64_t>(out, sol.stage_count);
  for (double v : sol.values) put<double>(out, v);
  for (std::uint32_t p : sol.policy) put<std::uint32_t>(out, p);
  if (!out) throw IoError("write failed for " + path.string());
}

Solution load_solution(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open value cache " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError(path.string() + ": not a DPV1 value cache");
  }
  Solution sol;
  sol.states = get_grid(in);
  sol.controls = get_grid(in);
  sol.stage_count = get<std::uint64_t>(in);
  if (sol.stage_count == 0 || sol.stage_count > (std::uint64_t{1} << 32)) {
    throw ParseError(path.string() + ": bad stage count");
  }
  const std::size_t n = sol.states.size();
  sol.values.resize((sol.stage_count + 1) * n);
  for (auto& v : sol.values) v = get<double>(in);
  sol.policy.resize(sol.stage_count * n);
  for (auto& p : sol.policy) p = get<std::uint32_t>(in);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError(path.string() + ": trailing bytes after value cache");
  }
  return sol;
}

}  // namespace hvo::dp
