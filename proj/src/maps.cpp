#include "hvo/maps.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "hvo/errors.hpp"

namespace hvo {

using nlohmann::json;

double WillansModel::friction_power(double omega) const {
  const double s = omega / omega_rated;
  const double fmep = fmep_base + fmep_quadratic * s * s;
  // Four-stroke: one power stroke per two revolutions.
  return fmep * displacement * omega / (4.0 * std::numbers::pi);
}

double WillansModel::indicated_efficiency(double omega) const {
  const double d = omega / omega_rated - efficiency_peak_speed;
  return efficiency_peak - efficiency_curvature * d * d;
}

double WillansModel::fuel_power(double omega, double torque) const {
  const double brake = std::max(torque, 0.0) * omega;
  return (brake + friction_power(omega)) / indicated_efficiency(omega);
}

double WillansModel::brake_efficiency(double omega, double torque) const {
  return torque * omega / fuel_power(omega, torque);
}

double EmissionShape::nox_index(double s, double l) const {
  l = std::max(l, 0.0);
  const double zs = (s - nox_speed_center) / nox_speed_width;
  const double zl = (l - nox_load_center + nox_load_tilt * (s - nox_speed_center)) / nox_load_width;
  return nox_floor + nox_gain * std::exp(-zs * zs - zl * zl);
}

double EmissionShape::hc_index(double s, double l) const {
  l = std::max(l, 0.0);
  s = std::max(s, 0.0);
  // Hyperbolic in load: with the friction share of fuel below hc_load_scale,
  // the HC mass rate never falls as torque rises.
  return hc_floor + hc_gain * std::exp(-s / hc_speed_scale) / (1.0 + l / hc_load_scale);
}

EngineSpec EngineSpec::reference() { return EngineSpec{}; }

void EngineSpec::validate() const {
  if (!(displacement_l > 0.0 && rated_power > 0.0 && omega_rated > 0.0 && torque_peak > 0.0 &&
        omega_torque_peak > 0.0 && omega_idle > 0.0)) {
    throw InvalidArgument("engine parameters must be positive");
  }
  if (!(omega_idle < omega_torque_peak && omega_torque_peak < omega_rated)) {
    throw InvalidArgument("engine speeds must satisfy idle < peak-torque speed < rated speed");
  }
  if (!(overspeed_ratio > 1.0)) throw InvalidArgument("overspeed ratio must exceed 1");
  if (rated_power / torque_peak < omega_torque_peak) {
    throw InvalidArgument("peak torque at its speed exceeds the rated power");
  }
  if (rated_power / torque_peak > omega_rated) {
    throw InvalidArgument("rated power is not reachable below rated speed");
  }
  if (speed_points < 2 || torque_points < 2) throw InvalidArgument("map grids need two points");
}

WillansModel EngineSpec::willans_model() const {
  WillansModel w = willans;
  w.displacement = displacement_l * 1e-3;
  w.omega_rated = omega_rated;
  return w;
}

namespace {

Curve full_load_curve(const EngineSpec& spec) {
  const double omega_max = spec.omega_max();
  const double omega_cap = spec.rated_power / spec.torque_peak;
  std::vector<double> w{spec.omega_idle, spec.omega_torque_peak};
  std::vector<double> t{spec.idle_torque_fraction * spec.torque_peak, spec.torque_peak};
  if (omega_cap > spec.omega_torque_peak) {
    w.push_back(omega_cap);
    t.push_back(spec.torque_peak);
  }
  // Constant-power arc, sampled densely enough that the chords overshoot
  // rated power by well under 0.1%.
  constexpr int kArc = 32;
  for (int i = 1; i <= kArc; ++i) {
    const double omega = omega_cap + (spec.omega_rated - omega_cap) * i / kArc;
    w.push_back(omega);
    t.push_back(spec.rated_power / omega);
  }
  w.push_back(omega_max);
  t.push_back(0.0);
  return Curve(Axis(std::move(w)), std::move(t));
}

// Speeds at which envelope maxima are sampled: grid lines, curve breakpoints
// and a dense uniform sweep.
std::vector<double> envelope_speeds(const EngineMapSet& m) {
  std::vector<double> w = m.fuel.x().points();
  for (double x : m.torque_max.x().points()) w.push_back(x);
  constexpr int kDense = 512;
  for (int i = 0; i <= kDense; ++i) {
    w.push_back(m.omega_idle + (m.omega_max - m.omega_idle) * i / kDense);
  }
  std::sort(w.begin(), w.end());
  w.erase(std::unique(w.begin(), w.end()), w.end());
  std::erase_if(w, [&](double x) { return x < m.omega_idle || x > m.omega_max; });
  return w;
}

}  // namespace

double EngineMapSet::envelope_max_power() const {
  const auto& xs = torque_max.x().points();
  const auto& ts = torque_max.values();
  double best = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) best = std::max(best, xs[i] * ts[i]);
  // T is linear on each segment, so T·ω is a parabola with at most one
  // interior maximum.
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double b = (ts[i + 1] - ts[i]) / (xs[i + 1] - xs[i]);
    if (b >= 0.0) continue;
    const double a = ts[i] - b * xs[i];
    const double w = -a / (2.0 * b);
    if (w > xs[i] && w < xs[i + 1]) best = std::max(best, (a + b * w) * w);
  }
  return best;
}

double EngineMapSet::bsfc(double omega, double torque) const {
  if (!(torque > 0.0)) throw InvalidArgument("bsfc needs positive torque");
  // kg/s per W -> g/kWh
  return fuel(omega, torque) / (torque * omega) * 3.6e9;
}

void update_envelope_maxima(EngineMapSet& m) {
  double f = 0.0;
  double n = 0.0;
  double h = 0.0;
  const auto& torques = m.fuel.y().points();
  for (double w : envelope_speeds(m)) {
    const double tmax = std::min(m.torque_max(w), m.fuel.y().back());
    auto visit = [&](double t) {
      f = std::max(f, m.fuel(w, t));
      n = std::max(n, m.nox(w, t));
      h = std::max(h, m.hc(w, t));
    };
    for (double t : torques) {
      if (t > tmax) break;
      if (t >= 0.0) visit(t);
    }
    if (tmax >= 0.0) visit(tmax);
  }
  m.m_dot_f_max = f;
  m.m_dot_nox_max = n;
  m.m_dot_hc_max = h;
}

EngineMapSet generate_engine_maps(const EngineSpec& spec) {
  spec.validate();
  const WillansModel willans = spec.willans_model();
  const double omega_max = spec.omega_max();

  Axis x = Axis::linspace(spec.omega_idle, omega_max, spec.speed_points);
  Axis y = Axis::linspace(0.0, spec.torque_peak, spec.torque_points);
  const std::size_t nx = x.size();
  const std::size_t ny = y.size();
  std::vector<double> fuel(nx * ny);
  std::vector<double> nox(nx * ny);
  std::vector<double> hc(nx * ny);
  for (std::size_t i = 0; i < nx; ++i) {
    const double s = (x[i] - spec.omega_idle) / (omega_max - spec.omega_idle);
    for (std::size_t j = 0; j < ny; ++j) {
      const double l = y[j] / spec.torque_peak;
      const double mf = willans.fuel_rate(x[i], y[j]);
      fuel[i * ny + j] = mf;
      nox[i * ny + j] = mf * spec.emissions.nox_index(s, l) * 1e-3;
      hc[i * ny + j] = mf * spec.emissions.hc_index(s, l) * 1e-3;
    }
  }

  EngineMapSet m;
  m.fuel = Grid2D(x, y, std::move(fuel));
  m.nox = Grid2D(x, y, std::move(nox));
  m.hc = Grid2D(std::move(x), std::move(y), std::move(hc));
  m.torque_max = full_load_curve(spec);
  m.omega_idle = spec.omega_idle;
  m.omega_max = omega_max;
  m.rated_power = spec.rated_power;
  update_envelope_maxima(m);
  return m;
}

EngineMapSet scale_engine_maps(const EngineMapSet& maps, double new_rated_power) {
  if (!(new_rated_power > 0.0) || !std::isfinite(new_rated_power)) {
    throw InvalidArgument("scaled rated power must be positive");
  }
  if (new_rated_power == maps.rated_power) return maps;
  const double f = new_rated_power / maps.rated_power;
  EngineMapSet out = maps;
  out.fuel = maps.fuel.transformed(1.0, f, f);
  out.nox = maps.nox.transformed(1.0, f, f);
  out.hc = maps.hc.transformed(1.0, f, f);
  std::vector<double> t = maps.torque_max.values();
  for (double& v : t) v *= f;
  out.torque_max = Curve(maps.torque_max.x(), std::move(t));
  out.rated_power = new_rated_power;
  update_envelope_maxima(out);
  return out;
}

void EmSpec::validate() const {
  if (!(rated_power > 0.0)) throw InvalidArgument("e-machine rated power must be positive");
  if (!(omega_base > 0.0 && omega_base < omega_max)) {
    throw InvalidArgument("e-machine speeds must satisfy 0 < base < max");
  }
  if (!(efficiency_floor > 0.0 && efficiency_floor <= 1.0)) {
    throw InvalidArgument("efficiency floor must be in (0, 1]");
  }
  if (speed_points < 2 || torque_points < 2 || envelope_points < 2) {
    throw InvalidArgument("map grids need two points");
  }
}

EmMapSet generate_em_map(const EmSpec& spec) {
  spec.validate();
  const double t_base = spec.rated_power / spec.omega_base;

  Axis x = Axis::linspace(0.0, spec.omega_max, spec.speed_points);
  Axis y = Axis::linspace(-t_base, t_base, spec.torque_points);
  std::vector<double> eta(x.size() * y.size());
  const auto& c = spec.losses;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wn = x[i] / spec.omega_base;
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double tn = y[j] / t_base;
      const double mech = std::abs(y[j]) * x[i];
      const double loss =
          spec.rated_power * (c.copper * tn * tn + c.iron * wn + c.windage * wn * wn * wn + c.constant);
      double e = mech > 0.0 ? mech / (mech + loss) : 0.0;
      eta[i * y.size() + j] = std::clamp(e, spec.efficiency_floor, 1.0);
    }
  }

  std::vector<double> w{0.0, spec.omega_base};
  std::vector<double> t{t_base, t_base};
  const std::size_t arc = spec.envelope_points;
  for (std::size_t i = 1; i < arc; ++i) {
    const double omega =
        spec.omega_base + (spec.omega_max - spec.omega_base) * static_cast<double>(i) / (arc - 1);
    w.push_back(omega);
    t.push_back(spec.rated_power / omega);
  }
  std::vector<double> neg(t.size());
  std::transform(t.begin(), t.end(), neg.begin(), [](double v) { return -v; });

  EmMapSet m;
  m.efficiency = Grid2D(std::move(x), std::move(y), std::move(eta));
  Axis env(std::move(w));
  m.torque_sup = Curve(env, std::move(t));
  m.torque_inf = Curve(std::move(env), std::move(neg));
  m.omega_max = spec.omega_max;
  m.rated_power = spec.rated_power;
  return m;
}

namespace {

json grid_json(const Grid2D& g, const char* kind, const char* units) {
  return json{{"kind", kind},
              {"units", units},
              {"x_axis", g.x().points()},
              {"y_axis", g.y().points()},
              {"values", g.values()}};
}

json curve_json(const Curve& c) {
  return json{{"x_axis", c.x().points()}, {"values", c.values()}};
}

Grid2D grid_from(const json& j) {
  return Grid2D(Axis(j.at("x_axis").get<std::vector<double>>()),
                Axis(j.at("y_axis").get<std::vector<double>>()),
                j.at("values").get<std::vector<double>>());
}

Curve curve_from(const json& j) {
  return Curve(Axis(j.at("x_axis").get<std::vector<double>>()),
               j.at("values").get<std::vector<double>>());
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

template <class F>
auto parse_checked(const std::filesystem::path& path, F&& build) {
  const json j = read_json(path);
  try {
    return build(j);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace

void save_maps(const EngineMapSet& m, const std::filesystem::path& path) {
  json j{{"kind", "engine"},
         {"fuel", grid_json(m.fuel, "fuel", "kg/s")},
         {"nox", grid_json(m.nox, "nox", "kg/s")},
         {"hc", grid_json(m.hc, "hc", "kg/s")},
         {"torque_max", curve_json(m.torque_max)},
         {"omega_idle", m.omega_idle},
         {"omega_max", m.omega_max},
         {"rated_power", m.rated_power},
         {"m_dot_f_max", m.m_dot_f_max},
         {"m_dot_nox_max", m.m_dot_nox_max},
         {"m_dot_hc_max", m.m_dot_hc_max}};
  write_json(j, path);
}

void save_maps(const EmMapSet& m, const std::filesystem::path& path) {
  json j{{"kind", "emachine"},
         {"efficiency", grid_json(m.efficiency, "efficiency", "-")},
         {"torque_sup", curve_json(m.torque_sup)},
         {"torque_inf", curve_json(m.torque_inf)},
         {"omega_max", m.omega_max},
         {"rated_power", m.rated_power}};
  write_json(j, path);
}

EngineMapSet load_engine_maps(const std::filesystem::path& path) {
  return parse_checked(path, [&](const json& j) {
    if (j.at("kind") != "engine") throw ParseError(path.string() + ": not an engine map file");
    EngineMapSet m;
    m.fuel = grid_from(j.at("fuel"));
    m.nox = grid_from(j.at("nox"));
    m.hc = grid_from(j.at("hc"));
    m.torque_max = curve_from(j.at("torque_max"));
    m.omega_idle = j.at("omega_idle").get<double>();
    m.omega_max = j.at("omega_max").get<double>();
    m.rated_power = j.at("rated_power").get<double>();
    m.m_dot_f_max = j.at("m_dot_f_max").get<double>();
    m.m_dot_nox_max = j.at("m_dot_nox_max").get<double>();
    m.m_dot_hc_max = j.at("m_dot_hc_max").get<double>();
    return m;
  });
}

EmMapSet load_em_maps(const std::filesystem::path& path) {
  return parse_checked(path, [&](const json& j) {
    if (j.at("kind") != "emachine") throw ParseError(path.string() + ": not an e-machine map file");
    EmMapSet m;
    m.efficiency = grid_from(j.at("efficiency"));
    m.torque_sup = curve_from(j.at("torque_sup"));
    m.torque_inf = curve_from(j.at("torque_inf"));
    m.omega_max = j.at("omega_max").get<double>();
    m.rated_power = j.at("rated_power").get<double>();
    return m;
  });
}

}  // namespace hvo
