#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hvo/components.hpp"
#include "hvo/mission.hpp"

namespace hvo {

enum class Architecture { conventional, parallel, series };

std::string_view to_string(Architecture a);
/// Throws ValidationError for unknown names.
Architecture parse_architecture(std::string_view name);

/// Propeller demand of one time step.
struct StepInput {
  double omega_prop = 0.0;
  double torque_prop = 0.0;
  double omega_dot_prop = 0.0;
  double dt = 1.0;
};

/// Sample k held for its hold interval, with the backward-difference
/// acceleration.
StepInput step_input(const MissionProfile& mission, std::size_t k);

struct ConventionalPlant {
  Transmission transmission;
  Engine engine;
};

struct ParallelPlant {
  Transmission transmission;
  TorqueCoupling coupling;
  Engine engine;
  EMachine emachine;
  BatteryPack battery;
  double aux_power = 2e3;  // W
};

struct SeriesPlant {
  Transmission transmission;
  EMachine motor;
  TorqueCoupling coupling;
  Engine engine;
  Generator generator;
  BatteryPack battery;
  double aux_power = 2e3;  // W
};

struct PlantState {
  double soc = 0.6;
  double omega_eng_prev = 0.0;  // series only
};

StepResult conventional_step(const StepInput& in, const ConventionalPlant& plant);

/// Complementary torque split: the e-machine takes alpha of the gearbox
/// torque (through the coupling ratio), the engine the remaining 1 - alpha.
/// Negative alpha shifts the engine load point up and charges the battery.
StepResult parallel_step(const StepInput& in, double soc, double alpha, const ParallelPlant& plant);

/// omega_eng == 0 switches the gen-set off; the battery then covers the bus
/// load on its own and phi is not used.
StepResult series_step(const StepInput& in, const PlantState& state, double phi, double omega_eng,
                       const SeriesPlant& plant);

/// Motor side of a series step: everything that does not depend on the
/// battery or gen-set decisions.
struct SeriesDemand {
  Violation violation = Violation::none;
  ShaftPoint transmission{};
  ShaftPoint motor{};
  double motor_power = 0.0;  // electrical, W
  double bus_power = 0.0;    // motor plus auxiliaries, W
};

SeriesDemand series_demand(const StepInput& in, const SeriesPlant& plant);

/// Inertia torque at the engine shaft for a gen-set speed change over dt:
/// tau_tc·J_gen·(d omega_gen/dt) + J_eng·(d omega_eng/dt) with
/// omega_gen = tau_tc·omega_eng.
inline double series_inertia_torque(double omega_eng, double omega_prev, double dt,
                                    const SeriesPlant& plant) {
  const double tau = plant.coupling.tau;
  return (tau * tau * plant.generator.inertia + plant.engine.inertia) *
         ((omega_eng - omega_prev) / dt);
}

/// Engine torque that holds the generator load while changing speed. The
/// generator turns tau_tc times faster than the engine, so its torque is
/// reflected to the engine shaft multiplied by tau_tc.
inline double series_engine_torque(double generator_torque, double omega_eng, double omega_prev,
                                   double dt, const SeriesPlant& plant) {
  return plant.coupling.tau * generator_torque +
         series_inertia_torque(omega_eng, omega_prev, dt, plant);
}

struct RatioRow {
  double ratio = 0.0;
  bool feasible = false;
  double mean_efficiency = 0.0;  // energy-weighted over the mission
  std::size_t violations = 0;
};

struct RatioResult {
  double best_ratio = 0.0;
  std::vector<RatioRow> table;
};

/// Maps every sample onto the motor through a transmission of each candidate
/// ratio, averages motor efficiency weighted by |mechanical energy|, and
/// returns the feasible argmax. Throws NoFeasibleRatio.
RatioResult optimize_transmission_ratio(const MissionProfile& mission, const EMachine& motor,
                                        const Transmission& transmission,
                                        std::span<const double> candidates);

/// Grid and penalty settings for the energy-management solve.
struct DpConfig {
  std::size_t soc_nodes = 201;
  std::size_t omega_nodes = 25;  // series engine-speed axis, including 0
  std::size_t phi_nodes = 41;
  std::size_t alpha_nodes = 81;
  double alpha_min = -1.0;
  double alpha_max = 1.0;
  /// Terminal SOC deficit weight per decision stage.
  double terminal_weight_per_stage = 110.0;

  void validate() const;
};

struct EngineConfig {
  EngineSpec map_spec;        // engine the map family is generated for
  double rated_power = 147e3; // W, after scaling
  double inertia = 1.5;
  std::filesystem::path map_file;  // optional precomputed maps
};

struct MachineConfig {
  EmSpec spec;
  double inertia = 0.1;
  std::filesystem::path map_file;
};

/// Parsed plant configuration file. Keys carry their units
/// (`rated_power_kw`, `inertia_kgm2`, ...).
struct PlantConfig {
  Architecture architecture = Architecture::conventional;
  std::string name;
  Transmission transmission;
  EngineConfig engine;
  MachineConfig machine;    // parallel e-machine or series motor
  MachineConfig generator;  // series only
  TorqueCoupling coupling;
  LiFePo4PackSpec battery;
  double aux_power = 2e3;
  double soc_initial = 0.6;
  DpConfig dp;
};

/// Throws IoError, ParseError (malformed JSON) or ValidationError (unknown
/// keys, missing blocks, out-of-range values).
PlantConfig load_plant_config(const std::filesystem::path& path);
PlantConfig parse_plant_config(std::string_view json_text,
                               const std::filesystem::path& base_dir = {});

using Plant = std::variant<ConventionalPlant, ParallelPlant, SeriesPlant>;

Plant build_plant(const PlantConfig& config);
Engine build_engine(const EngineConfig& config);
EMachine build_machine(const MachineConfig& config);

}  // namespace hvo
