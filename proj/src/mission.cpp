#include "hvo/mission.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "hvo/csv.hpp"
#include "hvo/errors.hpp"
#include "hvo/interp.hpp"

namespace hvo {

namespace {

constexpr double kTimeTol = 1e-9;

// Portable uniform draw in [0, 1): std distributions are implementation-defined.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

MissionProfile::MissionProfile(std::vector<MissionSample> samples, std::vector<int> segments,
                               std::string name)
    : samples_(std::move(samples)), segments_(std::move(segments)), name_(std::move(name)) {
  if (samples_.size() < 2) throw ValidationError("mission needs at least two samples");
  if (!segments_.empty() && segments_.size() != samples_.size()) {
    throw ValidationError("segment labels do not match the sample count");
  }
  for (std::size_t k = 0; k < samples_.size(); ++k) {
    const auto& s = samples_[k];
    if (!std::isfinite(s.t) || !std::isfinite(s.omega_prop) || !std::isfinite(s.torque_prop)) {
      throw ValidationError("mission sample " + std::to_string(k) + " is not finite");
    }
    if (k > 0 && !(s.t > samples_[k - 1].t)) {
      throw ValidationError("mission time is not strictly increasing at sample " +
                            std::to_string(k));
    }
  }
  const double first = samples_[1].t - samples_[0].t;
  uniform_ = std::all_of(samples_.begin() + 1, samples_.end(), [&, prev = samples_.front().t](
                                                                    const MissionSample& s) mutable {
    const bool ok = std::abs((s.t - prev) - first) <= kTimeTol;
    prev = s.t;
    return ok;
  });
}

double MissionProfile::dt() const {
  if (!uniform_) throw ValidationError("mission is not uniformly sampled; resample it first");
  return samples_[1].t - samples_[0].t;
}

std::vector<double> MissionProfile::dt_candidates() const {
  std::vector<double> deltas;
  for (std::size_t k = 1; k < samples_.size(); ++k) {
    deltas.push_back(samples_[k].t - samples_[k - 1].t);
  }
  std::sort(deltas.begin(), deltas.end());
  std::vector<double> out;
  for (double d : deltas) {
    if (out.empty() || d - out.back() > kTimeTol) out.push_back(d);
  }
  return out;
}

double MissionProfile::hold(std::size_t k) const {
  if (k + 1 < samples_.size()) return samples_[k + 1].t - samples_[k].t;
  return samples_[k].t - samples_[k - 1].t;
}

double MissionProfile::acceleration(std::size_t k) const {
  if (k == 0) return 0.0;
  return (samples_[k].omega_prop - samples_[k - 1].omega_prop) /
         (samples_[k].t - samples_[k - 1].t);
}

MissionProfile load_mission(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mission file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty mission file");
  const auto header = csv::split(line);
  const bool labeled = header.size() == 4 && header[3] == "segment";
  if (header.size() < 3 || header[0] != "t" || header[1] != "omega_prop" ||
      header[2] != "torque_prop" || (header.size() == 4 && !labeled) || header.size() > 4) {
    throw ParseError(path.string() + ": expected header t,omega_prop,torque_prop[,segment]");
  }
  std::vector<MissionSample> samples;
  std::vector<int> segments;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = csv::split(line);
    if (fields.size() != header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields");
    }
    try {
      samples.push_back({csv::parse_number(fields[0]), csv::parse_number(fields[1]),
                         csv::parse_number(fields[2])});
      if (labeled) segments.push_back(static_cast<int>(csv::parse_integer(fields[3])));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return MissionProfile(std::move(samples), std::move(segments), path.stem().string());
}

void save_mission(const MissionProfile& profile, const std::filesystem::path& path) {
  std::ostringstream out;
  const bool labeled = !profile.segments().empty();
  out << "t,omega_prop,torque_prop" << (labeled ? ",segment" : "") << '\n';
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const auto& s = profile[k];
    out << csv::format_number(s.t) << ',' << csv::format_number(s.omega_prop) << ','
        << csv::format_number(s.torque_prop);
    if (labeled) out << ',' << profile.segment(k);
    out << '\n';
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write mission file " + path.string());
  file << out.str();
}

MissionProfile resample(const MissionProfile& profile, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("resample interval must be positive");
  const double duration = profile.duration();
  if (dt > duration + kTimeTol) throw InvalidArgument("resample interval exceeds mission duration");

  std::vector<double> times;
  times.reserve(profile.size());
  for (const auto& s : profile.samples()) times.push_back(s.t);
  const Axis time_axis(times);

  const auto steps = static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
  std::vector<MissionSample> out(steps + 1);
  std::vector<int> labels;
  if (!profile.segments().empty()) labels.resize(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) {
    double t = profile.start() + static_cast<double>(j) * dt;
    if (j == steps && std::abs(t - profile.end()) <= kTimeTol) t = profile.end();
    t = std::min(t, profile.end());
    const Cell c = time_axis.locate(t);
    const auto& a = profile[c.index];
    const auto& b = profile[c.index + 1];
    out[j] = {t, lerp(a.omega_prop, b.omega_prop, c.t), lerp(a.torque_prop, b.torque_prop, c.t)};
    if (!labels.empty()) {
      labels[j] = profile.segment(c.t >= 1.0 ? c.index + 1 : c.index);
    }
  }
  return MissionProfile(std::move(out), std::move(labels), profile.name());
}

DemoMissionSpec DemoMissionSpec::linea1() {
  DemoMissionSpec spec;
  spec.seed = 20210601;
  // Outer lagoon: five stops, long legs close to top speed.
  spec.segments.push_back({.label = 1,
                           .duration_s = 1500.0,
                           .stops = 5,
                           .cruise_speed = 46.5,
                           .speed_spread = 0.03,
                           .maneuver_amplitude = 0.6,
                           .maneuver_period_s = 70.0,
                           .dwell_s = 40.0});
  // Inner canal: close stops, traffic maneuvers.
  spec.segments.push_back({.label = 2,
                           .duration_s = 2100.0,
                           .stops = 14,
                           .cruise_speed = 30.0,
                           .speed_spread = 0.15,
                           .maneuver_amplitude = 5.0,
                           .maneuver_period_s = 25.0,
                           .dwell_s = 30.0});
  return spec;
}

MissionProfile synthesize_demo_mission(const DemoMissionSpec& spec) {
  if (spec.segments.empty()) throw InvalidArgument("demo mission needs at least one segment");
  if (!(spec.dt > 0.0)) throw InvalidArgument("demo mission dt must be positive");
  for (const auto& seg : spec.segments) {
    if (!(seg.duration_s > 0.0)) throw InvalidArgument("segment duration must be positive");
    if (seg.stops < 1) throw InvalidArgument("segment needs at least one stop");
    if (!(seg.cruise_speed > spec.idle_speed)) {
      throw InvalidArgument("segment cruise speed must exceed the idle speed");
    }
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<MissionSample> samples;
  std::vector<int> labels;
  double omega = spec.idle_speed;
  double t = 0.0;

  for (const auto& seg : spec.segments) {
    const auto seg_steps = static_cast<std::size_t>(std::llround(seg.duration_s / spec.dt));
    const double leg_len = seg.duration_s / seg.stops;
    double leg_target = 0.0;
    double phase = 0.0;
    int current_leg = -1;
    for (std::size_t i = 0; i < seg_steps; ++i) {
      const double tau = static_cast<double>(i) * spec.dt;
      const int leg = std::min(static_cast<int>(tau / leg_len), seg.stops - 1);
      if (leg != current_leg) {
        current_leg = leg;
        leg_target = seg.cruise_speed * (1.0 + seg.speed_spread * (2.0 * uniform01(rng) - 1.0));
        phase = 2.0 * std::numbers::pi * uniform01(rng);
      }
      const double in_leg = tau - leg * leg_len;
      const double peak = leg_target + seg.maneuver_amplitude;
      const double decel_time = (peak - spec.idle_speed) / spec.decel_rate + 4.0 * spec.dt;
      double command = spec.idle_speed;
      if (in_leg >= seg.dwell_s && in_leg < leg_len - decel_time) {
        command = leg_target + seg.maneuver_amplitude *
                                   std::sin(2.0 * std::numbers::pi * in_leg / seg.maneuver_period_s +
                                            phase);
      }
      command = std::max(command, spec.idle_speed);

      const double prev = omega;
      if (!samples.empty()) {
        const double step = std::clamp(command - omega, -spec.decel_rate * spec.dt,
                                       spec.accel_rate * spec.dt);
        omega += step;
      }
      const double accel = samples.empty() ? 0.0 : (omega - prev) / spec.dt;

      double torque = spec.load_coefficient * omega * omega;
      if (accel > 0.0) {
        torque += spec.acceleration_torque * accel;
      } else {
        torque += spec.reverse_thrust_gain * accel;
      }
      torque *= 1.0 + spec.torque_noise * (2.0 * uniform01(rng) - 1.0);
      torque = std::min({torque, spec.max_torque, spec.max_power / omega});

      samples.push_back({t, omega, torque});
      labels.push_back(seg.label);
      t += spec.dt;
    }
  }
  return MissionProfile(std::move(samples), std::move(labels), "linea1_demo");
}

MissionStats mission_stats(const MissionProfile& profile) {
  MissionStats stats;
  std::map<int, std::pair<double, std::size_t>> sums;
  double total = 0.0;
  stats.max_power = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const auto& s = profile[k];
    const double p = s.omega_prop * s.torque_prop;
    total += p;
    stats.max_power = std::max(stats.max_power, p);
    stats.energy += p * profile.hold(k);
    auto& acc = sums[profile.segment(k)];
    acc.first += p;
    ++acc.second;
  }
  stats.mean_power = total / static_cast<double>(profile.size());
  for (const auto& [label, acc] : sums) {
    stats.segment_mean_power[label] = acc.first / static_cast<double>(acc.second);
  }
  return stats;
}

}  // namespace hvo
