#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hvo {

/// One recorded propeller operating point. Reverse thrust is a negative
/// torque at nonnegative speed.
struct MissionSample {
  double t = 0.0;            // s
  double omega_prop = 0.0;   // rad/s
  double torque_prop = 0.0;  // N·m

  friend bool operator==(const MissionSample&, const MissionSample&) = default;
};

/// Immutable propeller speed/torque time series. Optional integer segment
/// labels travel with the samples.
class MissionProfile {
 public:
  /// Throws ValidationError on fewer than two samples, non-finite values,
  /// non-increasing time, or a label vector of the wrong length.
  explicit MissionProfile(std::vector<MissionSample> samples, std::vector<int> segments = {},
                          std::string name = {});

  const std::vector<MissionSample>& samples() const { return samples_; }
  const std::vector<int>& segments() const { return segments_; }
  const std::string& name() const { return name_; }
  std::size_t size() const { return samples_.size(); }
  const MissionSample& operator[](std::size_t k) const { return samples_[k]; }

  /// Label of sample k (0 when the profile is unlabeled).
  int segment(std::size_t k) const { return segments_.empty() ? 0 : segments_[k]; }

  double start() const { return samples_.front().t; }
  double end() const { return samples_.back().t; }
  double duration() const { return end() - start(); }

  /// True when every consecutive delta equals the first one within 1e-9 s.
  bool uniform() const { return uniform_; }
  /// Uniform sampling interval. Throws ValidationError for non-uniform profiles.
  double dt() const;
  /// Distinct consecutive time deltas (merged within 1e-9 s), ascending.
  std::vector<double> dt_candidates() const;

  /// Hold interval of sample k: the delta to the next sample, the previous
  /// delta for the last sample.
  double hold(std::size_t k) const;

  /// Backward-difference propeller acceleration; zero at k = 0.
  double acceleration(std::size_t k) const;

  friend bool operator==(const MissionProfile& a, const MissionProfile& b) {
    return a.samples_ == b.samples_ && a.segments_ == b.segments_;
  }

 private:
  std::vector<MissionSample> samples_;
  std::vector<int> segments_;
  std::string name_;
  bool uniform_ = false;
};

/// Reads `t,omega_prop,torque_prop[,segment]` CSV. Throws IoError, ParseError
/// (malformed header or row) or ValidationError.
MissionProfile load_mission(const std::filesystem::path& path);
void save_mission(const MissionProfile& profile, const std::filesystem::path& path);

/// Linear interpolation onto t0, t0 + dt, ... up to the last grid time not
/// beyond the end. Throws InvalidArgument if dt <= 0 or dt > duration.
MissionProfile resample(const MissionProfile& profile, double dt);

struct SegmentSpec {
  int label = 1;
  double duration_s = 0.0;
  int stops = 1;
  double cruise_speed = 0.0;        // rad/s, leg target speed
  double speed_spread = 0.0;        // relative spread of leg targets
  double maneuver_amplitude = 0.0;  // rad/s oscillation during legs
  double maneuver_period_s = 60.0;
  double dwell_s = 30.0;            // time at idle speed per stop
};

struct DemoMissionSpec {
  std::uint64_t seed = 1;
  double dt = 1.0;
  double idle_speed = 16.0;             // rad/s, propeller speed while moored
  double load_coefficient = 0.98;       // N·m per (rad/s)^2
  double acceleration_torque = 150.0;   // N·m per rad/s^2 while accelerating
  double reverse_thrust_gain = 300.0;   // N·m per rad/s^2 while decelerating
  double accel_rate = 2.0;              // rad/s^2
  double decel_rate = 3.0;              // rad/s^2
  double torque_noise = 0.02;           // relative, uniform
  double max_power = 108e3;             // W
  double max_torque = 2400.0;           // N·m
  std::vector<SegmentSpec> segments;

  /// Two segments: long cruise legs at high load, then a stop-and-go leg
  /// with frequent maneuvers. 3600 samples at 1 Hz.
  static DemoMissionSpec linea1();
};

/// Deterministic for a given spec (including the seed). Throws
/// InvalidArgument on empty segment lists or non-positive durations.
MissionProfile synthesize_demo_mission(const DemoMissionSpec& spec);

struct MissionStats {
  double mean_power = 0.0;  // W
  double max_power = 0.0;   // W
  double energy = 0.0;      // J, sample-and-hold
  std::map<int, double> segment_mean_power;
};

MissionStats mission_stats(const MissionProfile& profile);

}  // namespace hvo
