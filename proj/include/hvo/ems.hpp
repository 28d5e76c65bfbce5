#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hvo/architectures.hpp"
#include "hvo/dp.hpp"
#include "hvo/executor.hpp"
#include "hvo/mission.hpp"

namespace hvo {

enum class CostKind { emissions, fuel };

std::string_view to_string(CostKind kind);
/// Accepts "emissions" and "fuel"; throws ValidationError otherwise.
CostKind parse_cost_kind(std::string_view text);

/// Running-cost definition. Normalisers are the envelope maxima of the
/// engine that produces the emissions.
struct CostSpec {
  CostKind kind = CostKind::emissions;
  double mu = 0.5;
  double nox_max = 1.0;   // kg/s
  double hc_max = 1.0;    // kg/s
  double fuel_max = 1.0;  // kg/s

  void validate() const;
  static CostSpec emissions(double mu, const EngineMapSet& maps);
  static CostSpec fuel_only(const EngineMapSet& maps);
};

/// mu·nox/nox_max + (1-mu)·hc/hc_max, or fuel/fuel_max. Zero when the engine
/// is off.
double stage_cost(const StepResult& step, const CostSpec& spec);

/// Cost-function selection before the normalisers are known.
struct Objective {
  CostKind kind = CostKind::emissions;
  double mu = 0.5;
};

CostSpec make_cost_spec(const Objective& objective, const EngineMapSet& maps);

/// Parallel hybrid: state (SOC), control (alpha).
class ParallelProblem final : public dp::DpProblem {
 public:
  ParallelProblem(const ParallelPlant& plant, const MissionProfile& mission, const CostSpec& cost,
                  const DpConfig& grids, double soc_target);

  std::size_t stage_count() const override { return inputs_.size(); }
  const dp::TensorGrid& state_grid() const override { return states_; }
  const dp::TensorGrid& control_grid() const override { return controls_; }
  void evaluate(std::size_t k, const dp::Point& state, std::span<dp::Transition> out) const override;
  double terminal_cost(const dp::Point& state) const override;
  /// Worst feasible outcome: running cost 1 at every stage plus the largest
  /// terminal deficit.
  double boundary_penalty() const override { return boundary_penalty_; }

  StepResult step(std::size_t k, const dp::Point& state, std::uint32_t control) const;

 private:
  const ParallelPlant& plant_;
  CostSpec cost_;
  std::vector<StepInput> inputs_;
  dp::TensorGrid states_;
  dp::TensorGrid controls_;
  double soc_target_;
  double terminal_weight_;
  double boundary_penalty_;
};

/// Series hybrid: state (SOC, previous engine speed), control (phi, engine
/// speed). The engine-speed control shares the state axis, whose first node
/// is 0 (gen-set off).
class SeriesProblem final : public dp::DpProblem {
 public:
  SeriesProblem(const SeriesPlant& plant, const MissionProfile& mission, const CostSpec& cost,
                const DpConfig& grids, double soc_target);

  std::size_t stage_count() const override { return inputs_.size(); }
  const dp::TensorGrid& state_grid() const override { return states_; }
  const dp::TensorGrid& control_grid() const override { return controls_; }
  void evaluate(std::size_t k, const dp::Point& state, std::span<dp::Transition> out) const override;
  double terminal_cost(const dp::Point& state) const override;
  /// Worst feasible outcome: running cost 1 at every stage plus the largest
  /// terminal deficit.
  double boundary_penalty() const override { return boundary_penalty_; }
  bool bellman_stage(std::size_t k, std::span<const double> next_value, std::span<double> value,
                     std::span<std::uint32_t> policy, Executor& executor) const override;

  StepResult step(std::size_t k, const dp::Point& state, std::uint32_t control) const;

  /// Engine-speed axis {0} ∪ linspace(idle, max, nodes - 1).
  static Axis omega_axis(const EngineMapSet& maps, std::size_t nodes);

 private:
  const SeriesPlant& plant_;
  CostSpec cost_;
  std::vector<StepInput> inputs_;
  dp::TensorGrid states_;
  dp::TensorGrid controls_;
  double soc_target_;
  double terminal_weight_;
  double boundary_penalty_;
  // Per engine-speed node: full-load torque and the running cost as a
  // piecewise-linear function of engine torque (intercept, slope per cell).
  std::vector<double> torque_limit_;
  std::vector<std::vector<double>> cost_intercept_;
  std::vector<std::vector<double>> cost_slope_;
  double torque_inv_step_ = 0.0;
  double torque_step_ = 0.0;
};

struct TrajectoryRow {
  std::size_t k = 0;
  double t = 0.0;
  double soc = 0.0;
  double omega_eng = 0.0;
  std::vector<double> controls;
  double fuel_rate = 0.0;
  double nox_rate = 0.0;
  double hc_rate = 0.0;
  double battery_power = 0.0;

  friend bool operator==(const TrajectoryRow&, const TrajectoryRow&) = default;
};

struct RunReport {
  Architecture architecture = Architecture::conventional;
  CostSpec cost;
  double fuel_lph = 0.0;
  double nox_gph = 0.0;
  double hc_gph = 0.0;
  double soc_initial = 0.0;
  double soc_final = 0.0;
  double dsoc = 0.0;  // final minus initial
  double duration_s = 0.0;
  double objective = 0.0;     // interpolated optimal value at the initial state
  double rollout_cost = 0.0;  // realised running plus terminal cost
  std::vector<std::string> control_names;
  std::vector<TrajectoryRow> trajectory;
  std::vector<StepResult> steps;
  std::vector<PlantState> states;  // states[k] is the state entering step k
};

struct RunOptions {
  std::filesystem::path value_cache;  // written after the solve when set
  bool use_fast_path = true;
};

/// Conventional plants are simulated directly; hybrids are solved by DP and
/// rolled out from the configured initial SOC (engine off for the series
/// plant). Throws InfeasibleError (mission not achievable) or AllInfeasible.
RunReport run_architecture(const Plant& plant, const PlantConfig& config,
                           const MissionProfile& mission, const Objective& objective,
                           Executor& executor, const RunOptions& options = {});

/// One independent emissions-cost solve per mu, in input order.
std::vector<RunReport> mu_sweep(const Plant& plant, const PlantConfig& config,
                                const MissionProfile& mission, std::span<const double> mus,
                                Executor& executor);

struct PlantSetup {
  PlantConfig config;
  Plant plant;
};

/// Runs every plant under the same objective; rows follow the input order.
std::vector<RunReport> compare_architectures(std::span<const PlantSetup> plants,
                                             const MissionProfile& mission,
                                             const Objective& objective, Executor& executor);

/// Replays the logged controls open loop from the initial state and returns
/// the largest SOC mismatch against the logged trajectory. Throws
/// InfeasibleError if a replayed step is infeasible.
double verify_run(const Plant& plant, const MissionProfile& mission, const RunReport& report);

/// Per-step balance residuals, relative to the largest term involved.
/// Parallel: engine + coupled e-machine torque against the gearbox demand.
/// Series: generator + battery power against motor + auxiliary load
/// (engine-on steps). Conventional plants return 0.
double balance_residual(const Plant& plant, const StepResult& step);

struct ReportRow {
  std::string arch;
  std::string cost_kind;
  std::optional<double> mu;  // empty for fuel-only rows
  double fuel_lph = 0.0;
  double nox_gph = 0.0;
  double hc_gph = 0.0;
  double dsoc = 0.0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

inline constexpr const char* kReportCsvHeader = "arch,cost_kind,mu,fuel_lph,nox_gph,hc_gph,dsoc";

ReportRow report_row(const RunReport& report);
std::string format_report_row(const ReportRow& row);
ReportRow parse_report_row(std::string_view line);

std::string report_json(const RunReport& report);
void write_report_files(const RunReport& report, const std::filesystem::path& dir);
void write_trajectory_csv(const RunReport& report, const std::filesystem::path& path);

std::vector<ReportRow> load_report_csv(const std::filesystem::path& path);
std::vector<TrajectoryRow> load_trajectory_csv(const std::filesystem::path& path,
                                               std::vector<std::string>* control_names = nullptr);

}  // namespace hvo
