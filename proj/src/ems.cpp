#include "hvo/ems.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "hvo/csv.hpp"
#include "hvo/errors.hpp"

namespace hvo {

using nlohmann::json;

std::string_view to_string(CostKind kind) {
  return kind == CostKind::emissions ? "emissions" : "fuel";
}

CostKind parse_cost_kind(std::string_view text) {
  if (text == "emissions") return CostKind::emissions;
  if (text == "fuel") return CostKind::fuel;
  throw ValidationError("unknown cost kind '" + std::string(text) + "'");
}

void CostSpec::validate() const {
  if (!(nox_max > 0.0 && hc_max > 0.0 && fuel_max > 0.0)) {
    throw ValidationError("cost normalisers must be positive");
  }
  if (kind == CostKind::emissions && !(mu >= 0.0 && mu <= 1.0)) {
    throw ValidationError("mu must lie in [0, 1]");
  }
}

CostSpec CostSpec::emissions(double mu, const EngineMapSet& maps) {
  CostSpec s{CostKind::emissions, mu, maps.m_dot_nox_max, maps.m_dot_hc_max, maps.m_dot_f_max};
  s.validate();
  return s;
}

CostSpec CostSpec::fuel_only(const EngineMapSet& maps) {
  CostSpec s{CostKind::fuel, 0.0, maps.m_dot_nox_max, maps.m_dot_hc_max, maps.m_dot_f_max};
  s.validate();
  return s;
}

CostSpec make_cost_spec(const Objective& objective, const EngineMapSet& maps) {
  return objective.kind == CostKind::emissions ? CostSpec::emissions(objective.mu, maps)
                                               : CostSpec::fuel_only(maps);
}

namespace {

double rate_cost(double fuel, double nox, double hc, const CostSpec& spec) {
  if (spec.kind == CostKind::fuel) return fuel / spec.fuel_max;
  return spec.mu * nox / spec.nox_max + (1.0 - spec.mu) * hc / spec.hc_max;
}

std::vector<StepInput> mission_inputs(const MissionProfile& mission) {
  std::vector<StepInput> in(mission.size());
  for (std::size_t k = 0; k < mission.size(); ++k) in[k] = step_input(mission, k);
  return in;
}

}  // namespace

double stage_cost(const StepResult& step, const CostSpec& spec) {
  if (!step.engine_on) return 0.0;
  return rate_cost(step.fuel_rate, step.nox_rate, step.hc_rate, spec);
}

// ---------------------------------------------------------------- parallel

ParallelProblem::ParallelProblem(const ParallelPlant& plant, const MissionProfile& mission,
                                 const CostSpec& cost, const DpConfig& grids, double soc_target)
    : plant_(plant),
      cost_(cost),
      inputs_(mission_inputs(mission)),
      states_({Axis::linspace(plant.battery.soc_min, plant.battery.soc_max, grids.soc_nodes)}),
      controls_({Axis::linspace(grids.alpha_min, grids.alpha_max, grids.alpha_nodes)}),
      soc_target_(soc_target),
      terminal_weight_(grids.terminal_weight_per_stage * static_cast<double>(mission.size())),
      boundary_penalty_(static_cast<double>(mission.size()) +
                        terminal_weight_ * (plant.battery.soc_max - plant.battery.soc_min)) {
  cost_.validate();
}

StepResult ParallelProblem::step(std::size_t k, const dp::Point& state,
                                 std::uint32_t control) const {
  return parallel_step(inputs_[k], state[0], controls_.axis(0)[control], plant_);
}

void ParallelProblem::evaluate(std::size_t k, const dp::Point& state,
                               std::span<dp::Transition> out) const {
  const Axis& alpha = controls_.axis(0);
  for (std::size_t c = 0; c < alpha.size(); ++c) {
    const StepResult r = parallel_step(inputs_[k], state[0], alpha[c], plant_);
    out[c].feasible = r.feasible;
    out[c].cost = r.feasible ? stage_cost(r, cost_) : 0.0;
    out[c].next[0] = r.soc_next;
  }
}

double ParallelProblem::terminal_cost(const dp::Point& state) const {
  return dp::terminal_soc_penalty(state[0], soc_target_, terminal_weight_);
}

// ------------------------------------------------------------------ series

Axis SeriesProblem::omega_axis(const EngineMapSet& maps, std::size_t nodes) {
  if (nodes < 3) throw InvalidArgument("engine-speed grid needs at least three nodes");
  const Axis on = Axis::linspace(maps.omega_idle, maps.omega_max, nodes - 1);
  std::vector<double> pts{0.0};
  pts.insert(pts.end(), on.points().begin(), on.points().end());
  return Axis(std::move(pts));
}

SeriesProblem::SeriesProblem(const SeriesPlant& plant, const MissionProfile& mission,
                             const CostSpec& cost, const DpConfig& grids, double soc_target)
    : plant_(plant),
      cost_(cost),
      inputs_(mission_inputs(mission)),
      states_({Axis::linspace(plant.battery.soc_min, plant.battery.soc_max, grids.soc_nodes),
               omega_axis(plant.engine.maps, grids.omega_nodes)}),
      controls_({Axis::linspace(-1.0, 1.0, grids.phi_nodes),
                 omega_axis(plant.engine.maps, grids.omega_nodes)}),
      soc_target_(soc_target),
      terminal_weight_(grids.terminal_weight_per_stage * static_cast<double>(mission.size())),
      boundary_penalty_(static_cast<double>(mission.size()) +
                        terminal_weight_ * (plant.battery.soc_max - plant.battery.soc_min)) {
  cost_.validate();
  const auto& maps = plant.engine.maps;
  const Axis& omega = states_.axis(1);
  const Axis& torque = maps.fuel.y();
  if (!torque.uniform() || torque.front() != 0.0) {
    throw InvalidArgument("series solver expects a uniform torque axis starting at zero");
  }
  torque_step_ = torque[1] - torque[0];
  torque_inv_step_ = 1.0 / torque_step_;
  torque_limit_.assign(omega.size(), 0.0);
  cost_intercept_.resize(omega.size());
  cost_slope_.resize(omega.size());
  for (std::size_t c = 1; c < omega.size(); ++c) {
    const double w = omega[c];
    torque_limit_[c] = maps.torque_max(w);
    const auto fuel = maps.fuel.slice_at_x(w);
    const auto nox = maps.nox.slice_at_x(w);
    const auto hc = maps.hc.slice_at_x(w);
    std::vector<double> node(torque.size());
    for (std::size_t m = 0; m < torque.size(); ++m) node[m] = rate_cost(fuel[m], nox[m], hc[m], cost_);
    auto& a = cost_intercept_[c];
    auto& b = cost_slope_[c];
    a.resize(torque.size() - 1);
    b.resize(torque.size() - 1);
    for (std::size_t m = 0; m + 1 < torque.size(); ++m) {
      b[m] = (node[m + 1] - node[m]) / (torque[m + 1] - torque[m]);
      a[m] = node[m] - b[m] * torque[m];
    }
  }
}

StepResult SeriesProblem::step(std::size_t k, const dp::Point& state,
                               std::uint32_t control) const {
  const std::size_t w = controls_.axis(1).size();
  const double phi = controls_.axis(0)[control / w];
  const double omega = controls_.axis(1)[control % w];
  return series_step(inputs_[k], {state[0], state[1]}, phi, omega, plant_);
}

void SeriesProblem::evaluate(std::size_t k, const dp::Point& state,
                             std::span<dp::Transition> out) const {
  const Axis& phi = controls_.axis(0);
  const Axis& omega = controls_.axis(1);
  const PlantState s{state[0], state[1]};
  for (std::size_t p = 0; p < phi.size(); ++p) {
    for (std::size_t c = 0; c < omega.size(); ++c) {
      const StepResult r = series_step(inputs_[k], s, phi[p], omega[c], plant_);
      auto& t = out[p * omega.size() + c];
      t.feasible = r.feasible;
      t.cost = r.feasible ? stage_cost(r, cost_) : 0.0;
      t.next[0] = r.soc_next;
      t.next[1] = omega[c];
    }
  }
}

double SeriesProblem::terminal_cost(const dp::Point& state) const {
  return dp::terminal_soc_penalty(state[0], soc_target_, terminal_weight_);
}

bool SeriesProblem::bellman_stage(std::size_t k, std::span<const double> next,
                                  std::span<double> value, std::span<std::uint32_t> policy,
                                  Executor& executor) const {
  const StepInput& in = inputs_[k];
  const SeriesDemand demand = series_demand(in, plant_);
  if (demand.violation != Violation::none) {
    std::fill(value.begin(), value.end(), dp::kInfeasible);
    std::fill(policy.begin(), policy.end(), dp::kNoControl);
    return true;
  }

  const Axis& soc = states_.axis(0);
  const Axis& omega = states_.axis(1);
  const Axis& phi = controls_.axis(0);
  const std::size_t n_omega = omega.size();
  const std::size_t n_phi = phi.size();
  const std::size_t last_cell = cost_slope_[1].size() - 1;

  std::vector<double> shift(n_omega * n_omega);
  for (std::size_t j = 0; j < n_omega; ++j) {
    for (std::size_t c = 0; c < n_omega; ++c) {
      shift[j * n_omega + c] = series_inertia_torque(omega[c], omega[j], in.dt, plant_);
    }
  }

  // Cost-to-go along SOC at a fixed engine-speed column. The column is a grid
  // node, so this is dp::interpolate with the zero-weight corners dropped and
  // the same summation order.
  const double penalty = boundary_penalty();
  auto column_value = [&](double soc_next, std::size_t c) {
    if (!soc.contains(soc_next)) return dp::kInfeasible;
    const Cell cell = soc.locate(soc_next);
    const double w0 = 1.0 - cell.t;
    const double w1 = cell.t;
    double sum = 0.0;
    bool any_finite = false;
    if (w0 != 0.0) {
      double v = next[cell.index * n_omega + c];
      if (v == dp::kInfeasible) {
        v = penalty;
      } else {
        any_finite = true;
      }
      sum += w0 * v;
    }
    if (w1 != 0.0) {
      double v = next[(cell.index + 1) * n_omega + c];
      if (v == dp::kInfeasible) {
        v = penalty;
      } else {
        any_finite = true;
      }
      sum += w1 * v;
    }
    return any_finite ? sum : dp::kInfeasible;
  };

  executor.parallel_for(soc.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<double> base(n_phi * n_omega);
    std::vector<double> to_go(n_phi * n_omega);
    for (std::size_t i = begin; i < end; ++i) {
      // Gen-set off: the battery follows the bus load, phi is irrelevant and
      // control index 0 represents the mode.
      double off = dp::kInfeasible;
      const BatteryStep b_off = battery_from_power(demand.bus_power, soc[i], plant_.battery, in.dt);
      if (b_off.feasible()) off = column_value(b_off.soc_next, 0);

      for (std::size_t p = 0; p < n_phi; ++p) {
        double* q = &to_go[p * n_omega];
        double* tb = &base[p * n_omega];
        const BatteryStep b = battery_from_current_factor(phi[p], soc[i], plant_.battery, in.dt);
        if (!b.feasible()) {
          std::fill(q, q + n_omega, dp::kInfeasible);
          continue;
        }
        const double p_gen = demand.bus_power - b.power;
        for (std::size_t c = 1; c < n_omega; ++c) {
          const GeneratorTorque g =
              generator_evaluate(p_gen, omega[c] * plant_.coupling.tau, plant_.generator);
          if (!g.feasible()) {
            q[c] = dp::kInfeasible;
            continue;
          }
          tb[c] = plant_.coupling.tau * g.torque;
          q[c] = column_value(b.soc_next, c);
        }
      }

      for (std::size_t j = 0; j < n_omega; ++j) {
        double best = off;
        std::uint32_t arg = off < dp::kInfeasible ? 0 : dp::kNoControl;
        const double* sh = &shift[j * n_omega];
        for (std::size_t p = 0; p < n_phi; ++p) {
          const double* q = &to_go[p * n_omega];
          const double* tb = &base[p * n_omega];
          for (std::size_t c = 1; c < n_omega; ++c) {
            // Running costs are nonnegative, so a cost-to-go that already
            // matches the incumbent cannot win.
            if (!(q[c] < best)) continue;
            const double t = tb[c] + sh[c];
            if (!(t <= torque_limit_[c])) continue;
            const double tq = std::max(t, 0.0);
            const auto m = std::min(static_cast<std::size_t>(tq * torque_inv_step_), last_cell);
            const double total = (cost_intercept_[c][m] + cost_slope_[c][m] * tq) + q[c];
            if (total < best) {
              best = total;
              arg = static_cast<std::uint32_t>(p * n_omega + c);
            }
          }
        }
        value[i * n_omega + j] = best;
        policy[i * n_omega + j] = arg;
      }
    }
  });
  return true;
}

// ------------------------------------------------------------------- runs

namespace {

struct Totals {
  double fuel = 0.0;  // kg
  double nox = 0.0;
  double hc = 0.0;
  double duration = 0.0;  // s
};

void finish_report(RunReport& r, const MissionProfile& mission, const Totals& t) {
  const double hours = t.duration / 3600.0;
  r.duration_s = t.duration;
  r.fuel_lph = t.fuel / kDieselDensity / hours;
  r.nox_gph = t.nox * 1e3 / hours;
  r.hc_gph = t.hc * 1e3 / hours;
  r.dsoc = r.soc_final - r.soc_initial;
  (void)mission;
}

void accumulate(Totals& t, const StepResult& s, double dt) {
  t.fuel += s.fuel_rate * dt;
  t.nox += s.nox_rate * dt;
  t.hc += s.hc_rate * dt;
  t.duration += dt;
}

TrajectoryRow trajectory_row(std::size_t k, const MissionProfile& mission, const PlantState& state,
                             const StepResult& s, std::vector<double> controls) {
  TrajectoryRow row;
  row.k = k;
  row.t = mission[k].t;
  row.soc = state.soc;
  row.omega_eng = s.engine_on ? s.engine.omega : 0.0;
  row.controls = std::move(controls);
  row.fuel_rate = s.fuel_rate;
  row.nox_rate = s.nox_rate;
  row.hc_rate = s.hc_rate;
  row.battery_power = s.battery_power;
  return row;
}

void check_grid(const DpConfig& dp) {
  dp.validate();
  if (dp.soc_nodes < 21) {
    spdlog::warn("SOC grid has only {} nodes; expect degraded accuracy (21 or more recommended)",
                 dp.soc_nodes);
  }
}

RunReport run_conventional(const ConventionalPlant& plant, const MissionProfile& mission,
                           const Objective& objective) {
  RunReport r;
  r.architecture = Architecture::conventional;
  r.cost = make_cost_spec(objective, plant.engine.maps);
  Totals totals;
  for (std::size_t k = 0; k < mission.size(); ++k) {
    const StepInput in = step_input(mission, k);
    const StepResult s = conventional_step(in, plant);
    if (!s.feasible) {
      throw InfeasibleError("conventional plant cannot follow the mission at sample " +
                            std::to_string(k) + " (" + std::string(to_string(s.violation)) + ")");
    }
    accumulate(totals, s, in.dt);
    r.rollout_cost += stage_cost(s, r.cost);
    r.states.push_back({0.0, 0.0});
    r.trajectory.push_back(trajectory_row(k, mission, r.states.back(), s, {}));
    r.steps.push_back(s);
  }
  r.objective = r.rollout_cost;
  finish_report(r, mission, totals);
  return r;
}

template <class Problem>
dp::Solution solve(const Problem& problem, Executor& executor, const RunOptions& options,
                   std::string_view label) {
  const auto start = std::chrono::steady_clock::now();
  dp::Solution sol = dp::solve_backward(problem, executor, {options.use_fast_path});
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  spdlog::info("{} solve: {} stages x {} states x {} controls in {:.1f} s", label,
               problem.stage_count(), problem.state_grid().size(), problem.control_grid().size(),
               secs);
  if (!options.value_cache.empty()) dp::save_solution(sol, options.value_cache);
  return sol;
}

RunReport run_parallel(const ParallelPlant& plant, const PlantConfig& config,
                       const MissionProfile& mission, const Objective& objective,
                       Executor& executor, const RunOptions& options) {
  RunReport r;
  r.architecture = Architecture::parallel;
  r.cost = make_cost_spec(objective, plant.engine.maps);
  r.control_names = {"alpha"};
  const ParallelProblem problem(plant, mission, r.cost, config.dp, config.soc_initial);
  const dp::Solution sol = solve(problem, executor, options, "parallel");
  const dp::Point x0{config.soc_initial};
  const dp::Trajectory tr = dp::rollout(problem, sol, x0);
  r.objective = sol.value_at(0, x0, problem.boundary_penalty());
  r.rollout_cost = tr.total_cost;

  Totals totals;
  const Axis& alpha = problem.control_grid().axis(0);
  for (std::size_t k = 0; k < mission.size(); ++k) {
    const StepResult s = problem.step(k, tr.states[k], tr.controls[k]);
    accumulate(totals, s, step_input(mission, k).dt);
    r.states.push_back({tr.states[k][0], 0.0});
    r.trajectory.push_back(trajectory_row(k, mission, r.states.back(), s, {alpha[tr.controls[k]]}));
    r.steps.push_back(s);
  }
  r.soc_initial = config.soc_initial;
  r.soc_final = tr.states.back()[0];
  finish_report(r, mission, totals);
  return r;
}

RunReport run_series(const SeriesPlant& plant, const PlantConfig& config,
                     const MissionProfile& mission, const Objective& objective,
                     Executor& executor, const RunOptions& options) {
  RunReport r;
  r.architecture = Architecture::series;
  r.cost = make_cost_spec(objective, plant.engine.maps);
  r.control_names = {"phi"};
  const SeriesProblem problem(plant, mission, r.cost, config.dp, config.soc_initial);
  const dp::Solution sol = solve(problem, executor, options, "series");
  const dp::Point x0{config.soc_initial, 0.0};
  const dp::Trajectory tr = dp::rollout(problem, sol, x0);
  r.objective = sol.value_at(0, x0, problem.boundary_penalty());
  r.rollout_cost = tr.total_cost;

  Totals totals;
  const Axis& phi = problem.control_grid().axis(0);
  const std::size_t n_omega = problem.control_grid().axis(1).size();
  for (std::size_t k = 0; k < mission.size(); ++k) {
    const StepResult s = problem.step(k, tr.states[k], tr.controls[k]);
    accumulate(totals, s, step_input(mission, k).dt);
    r.states.push_back({tr.states[k][0], tr.states[k][1]});
    double applied = phi[tr.controls[k] / n_omega];
    if (!s.engine_on) {
      // Gen-set off: report the current factor the battery actually ran at.
      applied = s.battery_current >= 0.0 ? s.battery_current / plant.battery.i_lim_dis
                                         : s.battery_current / -plant.battery.i_lim_ch;
    }
    r.trajectory.push_back(trajectory_row(k, mission, r.states.back(), s, {applied}));
    r.steps.push_back(s);
  }
  r.soc_initial = config.soc_initial;
  r.soc_final = tr.states.back()[0];
  finish_report(r, mission, totals);
  return r;
}

}  // namespace

RunReport run_architecture(const Plant& plant, const PlantConfig& config,
                           const MissionProfile& mission, const Objective& objective,
                           Executor& executor, const RunOptions& options) {
  return std::visit(
      [&](const auto& p) -> RunReport {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConventionalPlant>) {
          return run_conventional(p, mission, objective);
        } else {
          check_grid(config.dp);
          if constexpr (std::is_same_v<T, ParallelPlant>) {
            return run_parallel(p, config, mission, objective, executor, options);
          } else {
            return run_series(p, config, mission, objective, executor, options);
          }
        }
      },
      plant);
}

std::vector<RunReport> mu_sweep(const Plant& plant, const PlantConfig& config,
                                const MissionProfile& mission, std::span<const double> mus,
                                Executor& executor) {
  if (mus.empty()) throw InvalidArgument("mu list is empty");
  for (double mu : mus) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw InvalidArgument("mu values must lie in [0, 1]");
  }
  std::vector<RunReport> out;
  out.reserve(mus.size());
  for (double mu : mus) {
    out.push_back(run_architecture(plant, config, mission, {CostKind::emissions, mu}, executor));
  }
  return out;
}

std::vector<RunReport> compare_architectures(std::span<const PlantSetup> plants,
                                             const MissionProfile& mission,
                                             const Objective& objective, Executor& executor) {
  std::vector<RunReport> out;
  out.reserve(plants.size());
  for (const auto& p : plants) {
    out.push_back(run_architecture(p.plant, p.config, mission, objective, executor));
  }
  return out;
}

double verify_run(const Plant& plant, const MissionProfile& mission, const RunReport& report) {
  if (report.trajectory.size() != mission.size()) {
    throw InvalidArgument("report does not match the mission length");
  }
  double worst = 0.0;
  PlantState state{report.soc_initial, 0.0};
  for (std::size_t k = 0; k < mission.size(); ++k) {
    const StepInput in = step_input(mission, k);
    const TrajectoryRow& row = report.trajectory[k];
    StepResult s;
    if (const auto* c = std::get_if<ConventionalPlant>(&plant)) {
      s = conventional_step(in, *c);
    } else if (const auto* p = std::get_if<ParallelPlant>(&plant)) {
      s = parallel_step(in, state.soc, row.controls.at(0), *p);
    } else {
      const auto& sp = std::get<SeriesPlant>(plant);
      s = series_step(in, state, row.controls.at(0), row.omega_eng, sp);
    }
    if (!s.feasible) {
      throw InfeasibleError("replayed step " + std::to_string(k) + " is infeasible (" +
                            std::string(to_string(s.violation)) + ")");
    }
    if (!std::holds_alternative<ConventionalPlant>(plant)) {
      worst = std::max(worst, std::abs(state.soc - row.soc));
      state = {s.soc_next, s.engine_on ? s.engine.omega : 0.0};
    }
  }
  if (!std::holds_alternative<ConventionalPlant>(plant)) {
    worst = std::max(worst, std::abs(state.soc - report.soc_final));
  }
  return worst;
}

double balance_residual(const Plant& plant, const StepResult& s) {
  if (!s.feasible) return 0.0;
  if (const auto* p = std::get_if<ParallelPlant>(&plant)) {
    const double tau = p->coupling.tau;
    const double em_inertial = p->emachine.inertia * s.omega_dot_engine * tau;
    const double eng_inertial = p->engine.inertia * s.omega_dot_engine;
    const double lhs = s.engine.torque + tau * (s.em.torque - em_inertial) - eng_inertial;
    const double scale = std::max({std::abs(s.transmission.torque), std::abs(s.engine.torque),
                                   std::abs(tau * s.em.torque), 1e-12});
    return std::abs(lhs - s.transmission.torque) / scale;
  }
  if (const auto* sp = std::get_if<SeriesPlant>(&plant)) {
    const double load = s.em_power + sp->aux_power;
    const double gen = s.engine_on ? s.generator_power : 0.0;
    const double scale = std::max({std::abs(gen), std::abs(s.battery_power), std::abs(load), 1e-12});
    return std::abs(gen + s.battery_power - load) / scale;
  }
  return 0.0;
}

// --------------------------------------------------------------- reports

ReportRow report_row(const RunReport& r) {
  ReportRow row;
  row.arch = std::string(to_string(r.architecture));
  row.cost_kind = std::string(to_string(r.cost.kind));
  if (r.cost.kind == CostKind::emissions) row.mu = r.cost.mu;
  row.fuel_lph = r.fuel_lph;
  row.nox_gph = r.nox_gph;
  row.hc_gph = r.hc_gph;
  row.dsoc = r.dsoc;
  return row;
}

std::string format_report_row(const ReportRow& row) {
  return csv::join({row.arch, row.cost_kind, row.mu ? csv::format_number(*row.mu) : "",
                    csv::format_number(row.fuel_lph), csv::format_number(row.nox_gph),
                    csv::format_number(row.hc_gph), csv::format_number(row.dsoc)});
}

ReportRow parse_report_row(std::string_view line) {
  const auto f = csv::split(line);
  if (f.size() != 7) throw ParseError("report row needs 7 fields");
  ReportRow row;
  row.arch = std::string(f[0]);
  row.cost_kind = std::string(f[1]);
  if (!f[2].empty()) row.mu = csv::parse_number(f[2]);
  row.fuel_lph = csv::parse_number(f[3]);
  row.nox_gph = csv::parse_number(f[4]);
  row.hc_gph = csv::parse_number(f[5]);
  row.dsoc = csv::parse_number(f[6]);
  return row;
}

std::string report_json(const RunReport& r) {
  json j;
  j["architecture"] = to_string(r.architecture);
  j["cost_kind"] = to_string(r.cost.kind);
  if (r.cost.kind == CostKind::emissions) {
    j["mu"] = r.cost.mu;
  } else {
    j["mu"] = nullptr;
  }
  j["normalisers"] = {{"fuel_kgps", r.cost.fuel_max},
                      {"nox_kgps", r.cost.nox_max},
                      {"hc_kgps", r.cost.hc_max}};
  j["fuel_lph"] = r.fuel_lph;
  j["nox_gph"] = r.nox_gph;
  j["hc_gph"] = r.hc_gph;
  j["soc_initial"] = r.soc_initial;
  j["soc_final"] = r.soc_final;
  j["dsoc"] = r.dsoc;
  j["duration_s"] = r.duration_s;
  j["objective"] = r.objective;
  j["rollout_cost"] = r.rollout_cost;
  j["steps"] = r.steps.size();
  j["engine_on_steps"] =
      std::count_if(r.steps.begin(), r.steps.end(), [](const StepResult& s) { return s.engine_on; });
  return j.dump(2) + "\n";
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

void write_trajectory_csv(const RunReport& r, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "k,t,soc,omega_eng";
  for (const auto& name : r.control_names) out << ',' << name;
  out << ",fuel_rate,nox_rate,hc_rate,P_b\n";
  for (const auto& row : r.trajectory) {
    out << row.k << ',' << csv::format_number(row.t) << ',' << csv::format_number(row.soc) << ','
        << csv::format_number(row.omega_eng);
    for (double c : row.controls) out << ',' << csv::format_number(c);
    out << ',' << csv::format_number(row.fuel_rate) << ',' << csv::format_number(row.nox_rate)
        << ',' << csv::format_number(row.hc_rate) << ',' << csv::format_number(row.battery_power)
        << '\n';
  }
  write_text(path, out.str());
}

void write_report_files(const RunReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", report_json(r));
  write_text(dir / "report.csv",
             std::string(kReportCsvHeader) + "\n" + format_report_row(report_row(r)) + "\n");
  write_trajectory_csv(r, dir / "trajectory.csv");
}

std::vector<ReportRow> load_report_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != kReportCsvHeader) {
    throw ParseError(path.string() + ": expected header " + kReportCsvHeader);
  }
  std::vector<ReportRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    try {
      rows.push_back(parse_report_row(lines[i]));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<TrajectoryRow> load_trajectory_csv(const std::filesystem::path& path,
                                               std::vector<std::string>* control_names) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ParseError(path.string() + ": empty trajectory file");
  const auto header = csv::split(lines[0]);
  const std::vector<std::string_view> head{"k", "t", "soc", "omega_eng"};
  const std::vector<std::string_view> tail{"fuel_rate", "nox_rate", "hc_rate", "P_b"};
  if (header.size() < 8 || !std::equal(head.begin(), head.end(), header.begin()) ||
      !std::equal(tail.begin(), tail.end(), header.end() - 4)) {
    throw ParseError(path.string() + ": unexpected trajectory header");
  }
  const std::size_t n_controls = header.size() - 8;
  if (control_names) {
    control_names->clear();
    for (std::size_t i = 0; i < n_controls; ++i) control_names->emplace_back(header[4 + i]);
  }
  std::vector<TrajectoryRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = csv::split(lines[i]);
    if (f.size() != header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": wrong field count");
    }
    try {
      TrajectoryRow row;
      row.k = static_cast<std::size_t>(csv::parse_integer(f[0]));
      row.t = csv::parse_number(f[1]);
      row.soc = csv::parse_number(f[2]);
      row.omega_eng = csv::parse_number(f[3]);
      for (std::size_t c = 0; c < n_controls; ++c) row.controls.push_back(csv::parse_number(f[4 + c]));
      row.fuel_rate = csv::parse_number(f[4 + n_controls]);
      row.nox_rate = csv::parse_number(f[5 + n_controls]);
      row.hc_rate = csv::parse_number(f[6 + n_controls]);
      row.battery_power = csv::parse_number(f[7 + n_controls]);
      rows.push_back(std::move(row));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace hvo
