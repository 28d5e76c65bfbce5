#pragma once

#include <cstdint>
#include <string_view>

#include "hvo/interp.hpp"
#include "hvo/maps.hpp"

namespace hvo {

enum class Violation : std::uint8_t {
  none,
  engine_underspeed,
  engine_overspeed,
  engine_torque,
  em_speed,
  em_torque,
  generator_speed,
  generator_torque,
  generator_zero_speed,
  battery_power,    // voltage-limited: negative discriminant
  battery_current,
  soc_window,
};

std::string_view to_string(Violation v);

struct Transmission {
  double tau = 4.0;
  double eta = 0.97;
  double inertia = 0.5;  // kg·m², referred to the input shaft

  void validate() const;
};

struct ShaftPoint {
  double omega = 0.0;
  double torque = 0.0;

  friend bool operator==(const ShaftPoint&, const ShaftPoint&) = default;
};

/// Gearbox input speed and torque for a propeller operating point, including
/// the transmission's own inertia.
ShaftPoint transmission_input(double omega_prop, double torque_prop, double omega_dot_prop,
                              const Transmission& tr);

struct Engine {
  EngineMapSet maps;
  double inertia = 1.5;
};

struct EngineRates {
  Violation violation = Violation::none;
  double fuel = 0.0;  // kg/s
  double nox = 0.0;
  double hc = 0.0;

  bool feasible() const { return violation == Violation::none; }
};

/// Envelope check plus map lookup. Negative torque is looked up at T = 0.
EngineRates engine_evaluate(double omega, double torque, const Engine& eng);

struct EMachine {
  EmMapSet maps;
  double inertia = 0.1;
};

struct EmPower {
  Violation violation = Violation::none;
  double power = 0.0;  // electrical, W; positive when motoring
  double efficiency = 1.0;

  bool feasible() const { return violation == Violation::none; }
};

EmPower em_power(double omega, double torque, const EMachine& em);

struct Generator {
  EmMapSet maps;
  double inertia = 0.3;
};

struct GeneratorTorque {
  Violation violation = Violation::none;
  double torque = 0.0;  // mechanical load on the shaft, N·m
  double efficiency = 1.0;

  bool feasible() const { return violation == Violation::none; }
};

/// Mechanical torque that produces electrical power p_el at omega.
/// Efficiency is read at the electrical torque p_el / omega; both the
/// electrical and mechanical torque must lie inside the envelope.
GeneratorTorque generator_evaluate(double p_el, double omega, const Generator& gen);

struct TorqueCoupling {
  double tau = 4.0;

  void validate() const;
};

/// Equivalent-series-resistance pack. Positive current discharges.
struct BatteryPack {
  double capacity = 0.0;  // A·s
  MonotoneCurve v_oc;     // V over SOC in [0, 1]
  MonotoneCurve r_eq;     // Ω over SOC in [0, 1]
  double eta_charge = 0.98;
  double eta_discharge = 1.0;
  double i_lim_dis = 0.0;  // A, > 0
  double i_lim_ch = 0.0;   // A, < 0
  double soc_min = 0.4;
  double soc_max = 0.8;
  double energy_rating = 0.0;  // Wh

  void validate() const;
};

struct LiFePo4PackSpec {
  double energy_kwh = 70.0;
  std::size_t cells_series = 110;
  double cell_nominal_voltage = 3.2;  // V
  double cell_capacity_ah = 20.0;
  double discharge_c_rate = 3.0;
  double charge_c_rate = 2.0;
  double soc_min = 0.4;
  double soc_max = 0.8;
  double eta_charge = 0.98;
  double eta_discharge = 1.0;
};

/// Builds a pack from tabulated LiFePO4 cell open-circuit voltage and
/// resistance curves, scaled to the series/parallel layout that carries the
/// requested energy at nominal voltage.
BatteryPack make_lifepo4_pack(const LiFePo4PackSpec& spec);

struct BatteryStep {
  Violation violation = Violation::none;
  double current = 0.0;  // A
  double power = 0.0;    // W, terminal power delivered to the bus
  double soc_next = 0.0;

  bool feasible() const { return violation == Violation::none; }
};

/// Smaller root of R·i² − v·i + P = 0, written in a cancellation-free form.
/// Returns NaN when the discriminant is negative.
double battery_current(double v_oc, double r_eq, double p_b);

/// SOC after holding current for dt seconds.
double soc_update(double soc, double current, double dt, const BatteryPack& batt);

BatteryStep battery_from_power(double p_b, double soc, const BatteryPack& batt, double dt);

/// phi >= 0 scales the discharge limit, phi < 0 the charge limit magnitude.
BatteryStep battery_from_current_factor(double phi, double soc, const BatteryPack& batt,
                                        double dt);

/// Everything one time step of any architecture produces. When feasible is
/// false only violation is meaningful.
struct StepResult {
  bool feasible = false;
  Violation violation = Violation::none;
  double fuel_rate = 0.0;  // kg/s
  double nox_rate = 0.0;
  double hc_rate = 0.0;
  double battery_power = 0.0;    // W
  double battery_current = 0.0;  // A
  double soc_next = 0.0;
  bool engine_on = false;
  ShaftPoint transmission{};
  ShaftPoint engine{};
  ShaftPoint em{};           // parallel e-machine or series motor
  double em_power = 0.0;     // electrical, W
  ShaftPoint generator{};
  double generator_power = 0.0;  // electrical, W
  double omega_dot_engine = 0.0;

  friend bool operator==(const StepResult&, const StepResult&) = default;
};

}  // namespace hvo
