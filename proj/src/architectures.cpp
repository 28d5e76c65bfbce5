#include "hvo/architectures.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hvo/errors.hpp"

namespace hvo {

using nlohmann::json;

std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::conventional: return "conventional";
    case Architecture::parallel: return "parallel";
    case Architecture::series: return "series";
  }
  return "unknown";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "conventional") return Architecture::conventional;
  if (name == "parallel") return Architecture::parallel;
  if (name == "series") return Architecture::series;
  throw ValidationError("unknown architecture '" + std::string(name) + "'");
}

StepInput step_input(const MissionProfile& mission, std::size_t k) {
  const auto& s = mission[k];
  return {s.omega_prop, s.torque_prop, mission.acceleration(k), mission.hold(k)};
}

StepResult conventional_step(const StepInput& in, const ConventionalPlant& plant) {
  StepResult r;
  r.transmission = transmission_input(in.omega_prop, in.torque_prop, in.omega_dot_prop,
                                      plant.transmission);
  r.engine = r.transmission;
  r.engine_on = true;
  r.omega_dot_engine = in.omega_dot_prop * plant.transmission.tau;
  const EngineRates e = engine_evaluate(r.engine.omega, r.engine.torque, plant.engine);
  r.violation = e.violation;
  if (!e.feasible()) return r;
  r.fuel_rate = e.fuel;
  r.nox_rate = e.nox;
  r.hc_rate = e.hc;
  r.feasible = true;
  return r;
}

StepResult parallel_step(const StepInput& in, double soc, double alpha,
                         const ParallelPlant& plant) {
  StepResult r;
  const ShaftPoint tr = transmission_input(in.omega_prop, in.torque_prop, in.omega_dot_prop,
                                           plant.transmission);
  const double tau_tc = plant.coupling.tau;
  const double accel_tran = in.omega_dot_prop * plant.transmission.tau;
  r.transmission = tr;
  r.omega_dot_engine = accel_tran;
  r.em = {tr.omega * tau_tc,
          alpha * tr.torque / tau_tc + plant.emachine.inertia * accel_tran * tau_tc};
  r.engine = {tr.omega, (1.0 - alpha) * tr.torque + plant.engine.inertia * accel_tran};
  r.engine_on = true;

  const EngineRates e = engine_evaluate(r.engine.omega, r.engine.torque, plant.engine);
  if (!e.feasible()) {
    r.violation = e.violation;
    return r;
  }
  const EmPower p = em_power(r.em.omega, r.em.torque, plant.emachine);
  if (!p.feasible()) {
    r.violation = p.violation;
    return r;
  }
  r.em_power = p.power;
  const BatteryStep b = battery_from_power(p.power + plant.aux_power, soc, plant.battery, in.dt);
  r.battery_current = b.current;
  r.battery_power = b.power;
  r.soc_next = b.soc_next;
  if (!b.feasible()) {
    r.violation = b.violation;
    return r;
  }
  r.fuel_rate = e.fuel;
  r.nox_rate = e.nox;
  r.hc_rate = e.hc;
  r.feasible = true;
  return r;
}

SeriesDemand series_demand(const StepInput& in, const SeriesPlant& plant) {
  SeriesDemand d;
  d.transmission = transmission_input(in.omega_prop, in.torque_prop, in.omega_dot_prop,
                                      plant.transmission);
  const double accel = in.omega_dot_prop * plant.transmission.tau;
  d.motor = {d.transmission.omega, d.transmission.torque + plant.motor.inertia * accel};
  const EmPower p = em_power(d.motor.omega, d.motor.torque, plant.motor);
  d.violation = p.violation;
  d.motor_power = p.power;
  d.bus_power = p.power + plant.aux_power;
  return d;
}

StepResult series_step(const StepInput& in, const PlantState& state, double phi,
                       double omega_eng, const SeriesPlant& plant) {
  StepResult r;
  const SeriesDemand d = series_demand(in, plant);
  r.transmission = d.transmission;
  r.em = d.motor;
  r.em_power = d.motor_power;
  r.omega_dot_engine = (omega_eng - state.omega_eng_prev) / in.dt;
  if (d.violation != Violation::none) {
    r.violation = d.violation;
    return r;
  }

  if (omega_eng == 0.0) {
    const BatteryStep b = battery_from_power(d.bus_power, state.soc, plant.battery, in.dt);
    r.battery_current = b.current;
    r.battery_power = b.power;
    r.soc_next = b.soc_next;
    r.violation = b.violation;
    r.feasible = b.feasible();
    return r;
  }

  const BatteryStep b = battery_from_current_factor(phi, state.soc, plant.battery, in.dt);
  r.battery_current = b.current;
  r.battery_power = b.power;
  r.soc_next = b.soc_next;
  if (!b.feasible()) {
    r.violation = b.violation;
    return r;
  }
  r.engine_on = true;
  r.generator_power = d.bus_power - b.power;
  r.generator.omega = omega_eng * plant.coupling.tau;
  const GeneratorTorque g = generator_evaluate(r.generator_power, r.generator.omega,
                                               plant.generator);
  if (!g.feasible()) {
    r.violation = g.violation;
    return r;
  }
  r.generator.torque = g.torque;
  r.engine = {omega_eng,
              series_engine_torque(g.torque, omega_eng, state.omega_eng_prev, in.dt, plant)};
  const EngineRates e = engine_evaluate(r.engine.omega, r.engine.torque, plant.engine);
  if (!e.feasible()) {
    r.violation = e.violation;
    return r;
  }
  r.fuel_rate = e.fuel;
  r.nox_rate = e.nox;
  r.hc_rate = e.hc;
  r.feasible = true;
  return r;
}

RatioResult optimize_transmission_ratio(const MissionProfile& mission, const EMachine& motor,
                                        const Transmission& transmission,
                                        std::span<const double> candidates) {
  if (candidates.empty()) throw InvalidArgument("no candidate ratios");
  RatioResult out;
  bool found = false;
  double best = 0.0;
  for (double ratio : candidates) {
    if (!(ratio > 0.0)) throw InvalidArgument("candidate ratios must be positive");
    Transmission tr = transmission;
    tr.tau = ratio;
    RatioRow row;
    row.ratio = ratio;
    double weighted = 0.0;
    double energy = 0.0;
    for (std::size_t k = 0; k < mission.size(); ++k) {
      const StepInput in = step_input(mission, k);
      const ShaftPoint p = transmission_input(in.omega_prop, in.torque_prop, in.omega_dot_prop, tr);
      const double torque = p.torque + motor.inertia * in.omega_dot_prop * ratio;
      const EmPower e = em_power(p.omega, torque, motor);
      if (!e.feasible()) {
        ++row.violations;
        continue;
      }
      const double w = std::abs(torque * p.omega) * in.dt;
      weighted += e.efficiency * w;
      energy += w;
    }
    row.feasible = row.violations == 0;
    row.mean_efficiency = energy > 0.0 ? weighted / energy : 0.0;
    if (row.feasible && (!found || row.mean_efficiency > best)) {
      found = true;
      best = row.mean_efficiency;
      out.best_ratio = ratio;
    }
    out.table.push_back(row);
  }
  if (!found) throw NoFeasibleRatio("no candidate ratio keeps the motor inside its envelope");
  return out;
}

void DpConfig::validate() const {
  auto check_nodes = [](std::size_t n, std::size_t lo, const char* what) {
    if (n < lo || n > 10000) {
      throw ValidationError(std::string(what) + " must have between " + std::to_string(lo) +
                            " and 10000 nodes");
    }
  };
  check_nodes(soc_nodes, 2, "SOC grid");
  check_nodes(omega_nodes, 3, "engine-speed grid");
  check_nodes(phi_nodes, 2, "current-factor grid");
  check_nodes(alpha_nodes, 2, "torque-split grid");
  if (!(alpha_min >= -1.0 && alpha_min < alpha_max && alpha_max <= 1.0)) {
    throw ValidationError("torque-split range must satisfy -1 <= min < max <= 1");
  }
  if (!(terminal_weight_per_stage > 0.0)) {
    throw ValidationError("terminal weight must be positive");
  }
}

namespace {

// JSON object reader that remembers which keys were consumed so unknown
// (usually misspelled) keys can be rejected.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_ + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key) {
    if (!has(key)) throw ValidationError(path_ + "." + key + " is required");
    return number_or(key, 0.0);
  }

  double number_or(const std::string& key, double fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ValidationError(path_ + "." + key + " must be a number");
    return v.get<double>();
  }

  std::size_t count_or(const std::string& key, std::size_t fallback) {
    const double v = number_or(key, static_cast<double>(fallback));
    if (!(v >= 0.0) || v != std::floor(v)) {
      throw ValidationError(path_ + "." + key + " must be a nonnegative integer");
    }
    return static_cast<std::size_t>(v);
  }

  std::string string_or(const std::string& key, std::string fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ValidationError(path_ + "." + key + " must be a string");
    return v.get<std::string>();
  }

  Block child(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw ValidationError(path_ + "." + key + " block is required");
    return Block(j_.at(key), path_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.contains(key)) throw ValidationError("unknown key " + path_ + "." + key);
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::filesystem::path resolve(const std::string& file, const std::filesystem::path& base) {
  if (file.empty()) return {};
  std::filesystem::path p(file);
  return p.is_absolute() || base.empty() ? p : base / p;
}

EngineConfig read_engine(Block b, const std::filesystem::path& base) {
  EngineConfig c;
  c.rated_power = b.number("rated_power_kw") * 1e3;
  EngineSpec& s = c.map_spec;
  s.displacement_l = b.number("displacement_l");
  s.rated_power = b.number_or("map_rated_power_kw", c.rated_power * 1e-3) * 1e3;
  s.omega_rated = b.number("rated_speed_rpm") * kRpm;
  s.torque_peak = b.number("peak_torque_nm");
  s.omega_torque_peak = b.number("peak_torque_speed_rpm") * kRpm;
  s.omega_idle = b.number("idle_speed_rpm") * kRpm;
  s.overspeed_ratio = b.number_or("overspeed_ratio", s.overspeed_ratio);
  c.inertia = b.number_or("inertia_kgm2", c.inertia);
  c.map_file = resolve(b.string_or("map_file", ""), base);
  b.finish();
  if (!(c.rated_power > 0.0)) throw ValidationError("engine rated power must be positive");
  if (!(c.inertia >= 0.0)) throw ValidationError("engine inertia must be nonnegative");
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError(std::string("engine: ") + e.what());
  }
  return c;
}

MachineConfig read_machine(Block b, const std::filesystem::path& base, double default_inertia) {
  MachineConfig c;
  c.spec.rated_power = b.number("rated_power_kw") * 1e3;
  c.spec.omega_max = b.number("max_speed_rads");
  c.spec.omega_base = b.number("base_speed_rads");
  c.inertia = b.number_or("inertia_kgm2", default_inertia);
  c.map_file = resolve(b.string_or("map_file", ""), base);
  b.finish();
  if (!(c.inertia >= 0.0)) throw ValidationError("machine inertia must be nonnegative");
  try {
    c.spec.validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError(std::string("machine: ") + e.what());
  }
  return c;
}

LiFePo4PackSpec read_battery(Block b) {
  LiFePo4PackSpec s;
  s.energy_kwh = b.number("energy_kwh");
  s.discharge_c_rate = b.number("discharge_c_rate");
  s.charge_c_rate = b.number("charge_c_rate");
  s.soc_min = b.number_or("soc_min", s.soc_min);
  s.soc_max = b.number_or("soc_max", s.soc_max);
  s.cells_series = b.count_or("cells_series", s.cells_series);
  s.cell_nominal_voltage = b.number_or("cell_nominal_voltage_v", s.cell_nominal_voltage);
  s.cell_capacity_ah = b.number_or("cell_capacity_ah", s.cell_capacity_ah);
  s.eta_charge = b.number_or("coulombic_efficiency_charge", s.eta_charge);
  s.eta_discharge = b.number_or("coulombic_efficiency_discharge", s.eta_discharge);
  b.finish();
  make_lifepo4_pack(s);  // validates
  return s;
}

DpConfig read_dp(Block b) {
  DpConfig d;
  d.soc_nodes = b.count_or("soc_nodes", d.soc_nodes);
  d.omega_nodes = b.count_or("omega_nodes", d.omega_nodes);
  d.phi_nodes = b.count_or("phi_nodes", d.phi_nodes);
  d.alpha_nodes = b.count_or("alpha_nodes", d.alpha_nodes);
  d.alpha_min = b.number_or("alpha_min", d.alpha_min);
  d.alpha_max = b.number_or("alpha_max", d.alpha_max);
  d.terminal_weight_per_stage = b.number_or("terminal_weight_per_stage", d.terminal_weight_per_stage);
  b.finish();
  d.validate();
  return d;
}

}  // namespace

PlantConfig parse_plant_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("plant config: ") + e.what());
  }
  PlantConfig c;
  Block root(j, "config");
  c.architecture = parse_architecture(root.string_or("architecture", ""));
  c.name = root.string_or("name", std::string(to_string(c.architecture)));

  Block tr = root.child("transmission");
  c.transmission.tau = tr.number("speed_ratio");
  c.transmission.eta = tr.number_or("efficiency", c.transmission.eta);
  c.transmission.inertia = tr.number_or("inertia_kgm2", c.transmission.inertia);
  tr.finish();
  c.transmission.validate();

  c.engine = read_engine(root.child("engine"), base_dir);

  if (c.architecture != Architecture::conventional) {
    const char* machine_key = c.architecture == Architecture::parallel ? "emachine" : "motor";
    c.machine = read_machine(root.child(machine_key), base_dir,
                             c.architecture == Architecture::parallel ? 0.1 : 0.8);
    Block tc = root.child("torque_coupling");
    c.coupling.tau = tc.number("speed_ratio");
    tc.finish();
    c.coupling.validate();
    c.battery = read_battery(root.child("battery"));
    c.aux_power = root.number_or("aux_power_kw", c.aux_power * 1e-3) * 1e3;
    c.soc_initial = root.number_or("soc_initial", c.soc_initial);
    if (!(c.aux_power >= 0.0)) throw ValidationError("auxiliary power must be nonnegative");
    if (!(c.soc_initial >= c.battery.soc_min && c.soc_initial <= c.battery.soc_max)) {
      throw ValidationError("initial SOC must lie inside the SOC window");
    }
  }
  if (c.architecture == Architecture::series) {
    c.generator = read_machine(root.child("generator"), base_dir, 0.3);
  }
  if (root.has("dp")) c.dp = read_dp(root.child("dp"));
  root.finish();
  return c;
}

PlantConfig load_plant_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open plant config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_plant_config(buf.str(), path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Engine build_engine(const EngineConfig& config) {
  EngineMapSet maps = config.map_file.empty() ? generate_engine_maps(config.map_spec)
                                              : load_engine_maps(config.map_file);
  if (maps.rated_power != config.rated_power) maps = scale_engine_maps(maps, config.rated_power);
  return Engine{std::move(maps), config.inertia};
}

EMachine build_machine(const MachineConfig& config) {
  EmMapSet maps = config.map_file.empty() ? generate_em_map(config.spec)
                                          : load_em_maps(config.map_file);
  return EMachine{std::move(maps), config.inertia};
}

Plant build_plant(const PlantConfig& c) {
  switch (c.architecture) {
    case Architecture::conventional:
      return ConventionalPlant{c.transmission, build_engine(c.engine)};
    case Architecture::parallel:
      return ParallelPlant{c.transmission, c.coupling,
                           build_engine(c.engine), build_machine(c.machine),
                           make_lifepo4_pack(c.battery), c.aux_power};
    case Architecture::series: {
      EMachine gen = build_machine(c.generator);
      return SeriesPlant{c.transmission,
                         build_machine(c.machine),
                         c.coupling,
                         build_engine(c.engine),
                         Generator{std::move(gen.maps), gen.inertia},
                         make_lifepo4_pack(c.battery),
                         c.aux_power};
    }
  }
  throw ValidationError("unknown architecture");
}

}  // namespace hvo
