#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "hvo/interp.hpp"

namespace hvo {

inline constexpr double kDieselLhv = 42.5e6;      // J/kg
inline constexpr double kDieselDensity = 0.835;   // kg/l
inline constexpr double kRpm = 3.14159265358979323846 / 30.0;  // rad/s per rpm

/// Friction and efficiency model behind the synthetic fuel map: fuel power
/// equals (brake power + friction power) divided by an indicated efficiency
/// that depends on speed only.
struct WillansModel {
  double displacement = 8.7e-3;  // m^3
  double omega_rated = 2000.0 * kRpm;
  double fmep_base = 0.6e5;      // Pa
  double fmep_quadratic = 0.3e5; // Pa at rated speed
  double efficiency_peak = 0.46;
  double efficiency_curvature = 0.1;
  double efficiency_peak_speed = 0.5;  // fraction of rated speed

  double friction_power(double omega) const;
  double indicated_efficiency(double omega) const;
  /// Chemical fuel power in W; negative torque is treated as zero.
  double fuel_power(double omega, double torque) const;
  double fuel_rate(double omega, double torque) const { return fuel_power(omega, torque) / kDieselLhv; }
  double brake_efficiency(double omega, double torque) const;
};

/// Emission-index shape functions in g per kg of fuel over normalized speed
/// s = (omega - idle) / (max - idle) and load l = torque / peak torque.
/// NOx: a Gaussian ridge whose load centre falls as speed rises, running
/// from the low-speed full-load corner toward part load at high speed.
/// HC: highest at low load and low speed.
struct EmissionShape {
  double nox_floor = 4.0;
  double nox_gain = 60.0;
  double nox_speed_center = 0.6;
  double nox_speed_width = 0.5;
  double nox_load_center = 0.64;  // at nox_speed_center
  double nox_load_width = 0.16;
  double nox_load_tilt = 1.28;    // drop of the load centre per unit s
  double hc_floor = 0.10;
  double hc_gain = 3.0;
  double hc_load_scale = 0.3;
  double hc_speed_scale = 1.0;

  double nox_index(double s, double l) const;
  double hc_index(double s, double l) const;
};

struct EngineSpec {
  double displacement_l = 8.7;
  double rated_power = 147e3;                 // W
  double omega_rated = 2000.0 * kRpm;         // rad/s
  double torque_peak = 1200.0;                // N·m
  double omega_torque_peak = 1100.0 * kRpm;   // rad/s
  double omega_idle = 600.0 * kRpm;           // rad/s
  double overspeed_ratio = 1.1;               // omega_max / omega_rated
  double idle_torque_fraction = 0.6;          // full-load torque at idle / peak
  std::size_t speed_points = 33;
  std::size_t torque_points = 33;
  WillansModel willans{};
  EmissionShape emissions{};

  /// Reference diesel: 8.7 l, 147 kW at 2000 rpm, 1200 N·m at 1100 rpm.
  static EngineSpec reference();
  /// Throws InvalidArgument on non-positive values or misordered speeds.
  void validate() const;
  double omega_max() const { return overspeed_ratio * omega_rated; }
  WillansModel willans_model() const;
};

/// Gridded fuel/NOx/HC mass-flow maps (kg/s) over (speed, torque) plus the
/// full-load curve. The m_dot_*_max fields are maxima over the feasible
/// envelope (idle..max speed, 0..full-load torque).
struct EngineMapSet {
  Grid2D fuel;
  Grid2D nox;
  Grid2D hc;
  Curve torque_max;
  double omega_idle = 0.0;
  double omega_max = 0.0;
  double rated_power = 0.0;
  double m_dot_f_max = 0.0;
  double m_dot_nox_max = 0.0;
  double m_dot_hc_max = 0.0;

  /// Highest torque-speed product along the full-load curve.
  double envelope_max_power() const;
  /// Brake-specific fuel consumption in g/kWh; requires torque > 0.
  double bsfc(double omega, double torque) const;

  friend bool operator==(const EngineMapSet&, const EngineMapSet&) = default;
};

EngineMapSet generate_engine_maps(const EngineSpec& spec);

/// Rescales torque and mass flows by new_rated_power / rated_power; the speed
/// axis is untouched, so specific consumption and emissions at a normalized
/// load point are preserved.
EngineMapSet scale_engine_maps(const EngineMapSet& maps, double new_rated_power);

/// Recomputes the m_dot_*_max fields of a map set over its feasible envelope.
void update_envelope_maxima(EngineMapSet& maps);

/// Loss model: P_loss / P_rated = copper * Tn^2 + iron * wn + windage * wn^3
/// + constant, with Tn = T / T_base and wn = omega / omega_base.
struct EmLossModel {
  double copper = 0.025;
  double iron = 0.003;
  double windage = 0.004;
  double constant = 0.002;
};

struct EmSpec {
  double rated_power = 147e3;  // W
  double omega_max = 314.0;    // rad/s
  double omega_base = 157.0;   // rad/s
  double efficiency_floor = 0.5;
  std::size_t speed_points = 33;
  std::size_t torque_points = 33;
  std::size_t envelope_points = 65;
  EmLossModel losses{};

  void validate() const;
};

/// Electric machine efficiency map over (speed, torque) with the
/// constant-torque / constant-power envelope. torque_inf = -torque_sup.
struct EmMapSet {
  Grid2D efficiency;
  Curve torque_sup;
  Curve torque_inf;
  double omega_max = 0.0;
  double rated_power = 0.0;

  friend bool operator==(const EmMapSet&, const EmMapSet&) = default;
};

EmMapSet generate_em_map(const EmSpec& spec);
inline EmMapSet generate_em_map(double rated_power, double omega_max, double omega_base) {
  EmSpec spec;
  spec.rated_power = rated_power;
  spec.omega_max = omega_max;
  spec.omega_base = omega_base;
  return generate_em_map(spec);
}

/// JSON persistence. Doubles are written in shortest round-trip form, so a
/// save/load cycle is lossless. Load throws IoError or ParseError.
void save_maps(const EngineMapSet& maps, const std::filesystem::path& path);
void save_maps(const EmMapSet& maps, const std::filesystem::path& path);
EngineMapSet load_engine_maps(const std::filesystem::path& path);
EmMapSet load_em_maps(const std::filesystem::path& path);

}  // namespace hvo
