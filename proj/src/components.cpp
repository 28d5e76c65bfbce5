#include "hvo/components.hpp"

#include <cmath>
#include <limits>

#include "hvo/errors.hpp"

namespace hvo {

std::string_view to_string(Violation v) {
  switch (v) {
    case Violation::none: return "none";
    case Violation::engine_underspeed: return "engine_underspeed";
    case Violation::engine_overspeed: return "engine_overspeed";
    case Violation::engine_torque: return "engine_torque";
    case Violation::em_speed: return "em_speed";
    case Violation::em_torque: return "em_torque";
    case Violation::generator_speed: return "generator_speed";
    case Violation::generator_torque: return "generator_torque";
    case Violation::generator_zero_speed: return "generator_zero_speed";
    case Violation::battery_power: return "battery_power";
    case Violation::battery_current: return "battery_current";
    case Violation::soc_window: return "soc_window";
  }
  return "unknown";
}

namespace {

int sgn(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

void Transmission::validate() const {
  if (!(tau > 0.0)) throw ValidationError("transmission ratio must be positive");
  if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("transmission efficiency must be in (0, 1]");
  if (!(inertia >= 0.0)) throw ValidationError("transmission inertia must be nonnegative");
}

void TorqueCoupling::validate() const {
  if (!(tau > 0.0)) throw ValidationError("torque coupling ratio must be positive");
}

ShaftPoint transmission_input(double omega_prop, double torque_prop, double omega_dot_prop,
                              const Transmission& tr) {
  const int k = -sgn(torque_prop) * sgn(omega_prop);
  double torque = torque_prop / tr.tau;
  if (k < 0) {
    torque /= tr.eta;
  } else if (k > 0) {
    torque *= tr.eta;
  }
  return {omega_prop * tr.tau, torque + tr.inertia * omega_dot_prop * tr.tau};
}

EngineRates engine_evaluate(double omega, double torque, const Engine& eng) {
  const auto& m = eng.maps;
  EngineRates r;
  if (!(omega >= m.omega_idle)) {
    r.violation = Violation::engine_underspeed;
    return r;
  }
  if (!(omega <= m.omega_max)) {
    r.violation = Violation::engine_overspeed;
    return r;
  }
  if (!(torque <= m.torque_max(omega))) {
    r.violation = Violation::engine_torque;
    return r;
  }
  const double t = std::max(torque, 0.0);
  r.fuel = m.fuel(omega, t);
  r.nox = m.nox(omega, t);
  r.hc = m.hc(omega, t);
  return r;
}

EmPower em_power(double omega, double torque, const EMachine& em) {
  const auto& m = em.maps;
  EmPower r;
  if (!(omega >= 0.0 && omega <= m.omega_max)) {
    r.violation = Violation::em_speed;
    return r;
  }
  if (!(torque <= m.torque_sup(omega) && torque >= m.torque_inf(omega))) {
    r.violation = Violation::em_torque;
    return r;
  }
  const double mech = torque * omega;
  r.efficiency = m.efficiency(omega, torque);
  r.power = mech >= 0.0 ? mech / r.efficiency : r.efficiency * mech;
  return r;
}

GeneratorTorque generator_evaluate(double p_el, double omega, const Generator& gen) {
  const auto& m = gen.maps;
  GeneratorTorque r;
  if (p_el == 0.0) return r;
  if (!(omega > 0.0)) {
    r.violation = Violation::generator_zero_speed;
    return r;
  }
  if (!(omega <= m.omega_max)) {
    r.violation = Violation::generator_speed;
    return r;
  }
  const double lo = m.torque_inf(omega);
  const double hi = m.torque_sup(omega);
  const double t_el = p_el / omega;
  if (!(t_el >= lo && t_el <= hi)) {
    r.violation = Violation::generator_torque;
    return r;
  }
  r.efficiency = m.efficiency(omega, t_el);
  r.torque = p_el >= 0.0 ? p_el / (r.efficiency * omega) : r.efficiency * p_el / omega;
  if (!(r.torque >= lo && r.torque <= hi)) r.violation = Violation::generator_torque;
  return r;
}

void BatteryPack::validate() const {
  if (!(capacity > 0.0)) throw ValidationError("battery capacity must be positive");
  if (!(i_lim_dis > 0.0) || !(i_lim_ch < 0.0)) {
    throw ValidationError("battery current limits must be positive (discharge) and negative (charge)");
  }
  if (!(0.0 <= soc_min && soc_min < soc_max && soc_max <= 1.0)) {
    throw ValidationError("battery SOC window must satisfy 0 <= min < max <= 1");
  }
  if (!(eta_charge > 0.0 && eta_charge <= 1.0 && eta_discharge > 0.0 && eta_discharge <= 1.0)) {
    throw ValidationError("coulombic efficiencies must be in (0, 1]");
  }
  if (v_oc.x().size() < 2 || r_eq.x().size() < 2) throw ValidationError("battery curves missing");
}

BatteryPack make_lifepo4_pack(const LiFePo4PackSpec& spec) {
  if (!(spec.energy_kwh > 0.0 && spec.cells_series > 0 && spec.cell_nominal_voltage > 0.0 &&
        spec.cell_capacity_ah > 0.0 && spec.discharge_c_rate > 0.0 && spec.charge_c_rate > 0.0)) {
    throw ValidationError("battery pack parameters must be positive");
  }
  // Tabulated cell characteristics at 25 °C.
  static const std::vector<double> soc{0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5,
                                       0.6, 0.7,  0.8, 0.9, 0.95, 1.0};
  static const std::vector<double> ocv{2.90, 3.10, 3.20,  3.25, 3.275, 3.29, 3.30,
                                       3.31, 3.325, 3.34, 3.36, 3.39,  3.50};
  static const std::vector<double> res_mohm{9.0, 6.5, 5.2,  4.5,  4.2, 4.05, 4.0,
                                            4.0, 4.05, 4.15, 4.35, 4.6, 5.0};

  const auto ns = static_cast<double>(spec.cells_series);
  const double pack_ah = spec.energy_kwh * 1e3 / (ns * spec.cell_nominal_voltage);
  const double np = pack_ah / spec.cell_capacity_ah;

  std::vector<double> v(ocv.size());
  std::vector<double> r(res_mohm.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = ocv[i] * ns;
    r[i] = res_mohm[i] * 1e-3 * ns / np;
  }

  BatteryPack b;
  b.capacity = pack_ah * 3600.0;
  b.v_oc = MonotoneCurve(Axis(soc), std::move(v));
  b.r_eq = MonotoneCurve(Axis(soc), std::move(r));
  b.eta_charge = spec.eta_charge;
  b.eta_discharge = spec.eta_discharge;
  b.i_lim_dis = spec.discharge_c_rate * pack_ah;
  b.i_lim_ch = -spec.charge_c_rate * pack_ah;
  b.soc_min = spec.soc_min;
  b.soc_max = spec.soc_max;
  b.energy_rating = spec.energy_kwh * 1e3;
  b.validate();
  return b;
}

double battery_current(double v_oc, double r_eq, double p_b) {
  const double disc = v_oc * v_oc - 4.0 * r_eq * p_b;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  // (v - sqrt(disc)) / 2R, rearranged to avoid cancellation at small power.
  return 2.0 * p_b / (v_oc + std::sqrt(disc));
}

double soc_update(double soc, double current, double dt, const BatteryPack& batt) {
  const double eta = current > 0.0 ? batt.eta_discharge : batt.eta_charge;
  return soc - eta * current * dt / batt.capacity;
}

namespace {

BatteryStep finish(BatteryStep s, double soc, double dt, const BatteryPack& batt) {
  s.soc_next = soc_update(soc, s.current, dt, batt);
  if (!(s.soc_next >= batt.soc_min && s.soc_next <= batt.soc_max)) {
    s.violation = Violation::soc_window;
  }
  return s;
}

}  // namespace

BatteryStep battery_from_power(double p_b, double soc, const BatteryPack& batt, double dt) {
  BatteryStep s;
  const double v = batt.v_oc(soc);
  const double r = batt.r_eq(soc);
  s.current = battery_current(v, r, p_b);
  s.power = p_b;
  if (std::isnan(s.current)) {
    s.violation = Violation::battery_power;
    return s;
  }
  if (s.current > batt.i_lim_dis || s.current < batt.i_lim_ch) {
    s.violation = Violation::battery_current;
    return s;
  }
  return finish(s, soc, dt, batt);
}

BatteryStep battery_from_current_factor(double phi, double soc, const BatteryPack& batt,
                                        double dt) {
  BatteryStep s;
  if (!(phi >= -1.0 && phi <= 1.0)) {
    s.violation = Violation::battery_current;
    return s;
  }
  s.current = phi >= 0.0 ? phi * batt.i_lim_dis : phi * -batt.i_lim_ch;
  const double v = batt.v_oc(soc);
  const double r = batt.r_eq(soc);
  s.power = v * s.current - r * s.current * s.current;
  return finish(s, soc, dt, batt);
}

}  // namespace hvo
