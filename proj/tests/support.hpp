#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "hvo/mission.hpp"

namespace hvo::test {

inline std::filesystem::path source_dir() { return HVO_SOURCE_DIR; }
inline std::filesystem::path config_path(const std::string& name) {
  return source_dir() / "data" / "configs" / (name + ".json");
}
inline std::filesystem::path demo_mission_path() {
  return source_dir() / "data" / "missions" / "linea1_demo.csv";
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("hvo_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// First `n` samples of the demo mission, re-timed from zero.
inline MissionProfile demo_prefix(std::size_t n, std::size_t offset = 0) {
  const MissionProfile full = load_mission(demo_mission_path());
  std::vector<MissionSample> s(full.samples().begin() + offset,
                               full.samples().begin() + offset + n);
  const double t0 = s.front().t;
  for (auto& x : s) x.t -= t0;
  std::vector<int> seg(full.segments().begin() + offset, full.segments().begin() + offset + n);
  return MissionProfile(std::move(s), std::move(seg), "demo_prefix");
}

}  // namespace hvo::test
