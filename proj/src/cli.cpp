#include "hvo/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hvo/csv.hpp"
#include "hvo/ems.hpp"
#include "hvo/errors.hpp"
#include "hvo/maps.hpp"

namespace hvo {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitSweepFailed = 3;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("hvo");
  logger->set_pattern("%l: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("HVO_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only honour it when asked for.
    if (level != spdlog::level::off || std::string_view(env) == "off") spdlog::set_level(level);
  }
}

struct GridOverrides {
  std::size_t soc_nodes = 0;
  std::size_t omega_nodes = 0;
  std::size_t phi_nodes = 0;
  std::size_t alpha_nodes = 0;

  void apply(DpConfig& dp) const {
    if (soc_nodes) dp.soc_nodes = soc_nodes;
    if (omega_nodes) dp.omega_nodes = omega_nodes;
    if (phi_nodes) dp.phi_nodes = phi_nodes;
    if (alpha_nodes) dp.alpha_nodes = alpha_nodes;
    try {
      dp.validate();
    } catch (const InvalidArgument& e) {
      throw ValidationError(e.what());
    }
  }
};

void add_grid_flags(CLI::App* cmd, GridOverrides& g) {
  cmd->add_option("--soc-nodes", g.soc_nodes, "SOC grid nodes");
  cmd->add_option("--omega-nodes", g.omega_nodes, "series engine-speed nodes, including off");
  cmd->add_option("--phi-nodes", g.phi_nodes, "series current-factor nodes");
  cmd->add_option("--alpha-nodes", g.alpha_nodes, "parallel torque-split nodes");
}

void require_file(const std::filesystem::path& path, std::string_view what) {
  if (!std::filesystem::is_regular_file(path)) {
    throw IoError(std::string(what) + " not found: " + path.string());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------- run

struct RunArgs {
  std::filesystem::path config;
  std::filesystem::path mission;
  std::string cost = "emissions";
  double mu = 0.5;
  std::filesystem::path out = "out";
  std::filesystem::path value_cache;
  bool verify = false;
  GridOverrides grid;
};

struct Loaded {
  PlantConfig config;
  Plant plant;
  MissionProfile mission;
};

Loaded load_inputs(const std::filesystem::path& config_path,
                   const std::filesystem::path& mission_path, const GridOverrides& grid) {
  require_file(config_path, "plant config");
  require_file(mission_path, "mission file");
  PlantConfig config = load_plant_config(config_path);
  grid.apply(config.dp);
  MissionProfile mission = load_mission(mission_path);
  Plant plant = build_plant(config);
  return {std::move(config), std::move(plant), std::move(mission)};
}

int cmd_run(const RunArgs& a, std::size_t jobs) {
  const Objective objective{parse_cost_kind(a.cost), a.mu};
  if (objective.kind == CostKind::emissions && !(a.mu >= 0.0 && a.mu <= 1.0)) {
    throw ValidationError("--mu must lie in [0, 1]");
  }
  const Loaded in = load_inputs(a.config, a.mission, a.grid);
  Executor executor(jobs);
  RunOptions options;
  options.value_cache = a.value_cache;
  const RunReport report =
      run_architecture(in.plant, in.config, in.mission, objective, executor, options);
  if (a.verify) {
    const double mismatch = verify_run(in.plant, in.mission, report);
    if (!(mismatch <= 1e-9)) {
      std::cerr << "error: open-loop replay deviates from the logged SOC by " << mismatch << "\n";
      return kExitInfeasible;
    }
    std::cerr << "verify: open-loop replay matches (max SOC deviation " << mismatch << ")\n";
  }
  write_report_files(report, a.out);
  std::cout << kReportCsvHeader << "\n" << format_report_row(report_row(report)) << "\n";
  return kExitOk;
}

// -------------------------------------------------------------- sweep

struct SweepArgs {
  std::filesystem::path config;
  std::filesystem::path mission;
  std::vector<double> mus;
  bool mus_given = false;
  std::filesystem::path out = "out";
  GridOverrides grid;
};

int cmd_sweep(const SweepArgs& a, std::size_t jobs) {
  std::vector<double> mus = a.mus;
  if (!a.mus_given) {
    for (int i = 0; i <= 10; ++i) mus.push_back(i / 10.0);
  }
  if (mus.empty()) throw ValidationError("--mu list is empty");
  for (double mu : mus) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw ValidationError("mu values must lie in [0, 1]");
  }
  const Loaded in = load_inputs(a.config, a.mission, a.grid);
  Executor executor(jobs);

  std::ostringstream table;
  std::ostringstream plot;
  table << kReportCsvHeader << ",error\n";
  plot << "mu,nox_gph,hc_gph\n";
  bool failed = false;
  for (double mu : mus) {
    try {
      const RunReport r =
          run_architecture(in.plant, in.config, in.mission, {CostKind::emissions, mu}, executor);
      table << format_report_row(report_row(r)) << ",\n";
      plot << csv::format_number(mu) << ',' << csv::format_number(r.nox_gph) << ','
           << csv::format_number(r.hc_gph) << '\n';
    } catch (const InfeasibleError& e) {
      failed = true;
      std::string msg = e.what();
      for (char& c : msg) {
        if (c == ',' || c == '\n') c = ';';
      }
      table << to_string(in.config.architecture) << ",emissions," << csv::format_number(mu)
            << ",,,,," << msg << "\n";
      std::cerr << "error: mu=" << mu << ": " << e.what() << "\n";
    }
  }
  std::filesystem::create_directories(a.out);
  write_text(a.out / "sweep.csv", table.str());
  write_text(a.out / "sweep_plot.csv", plot.str());
  std::cout << table.str();
  return failed ? kExitSweepFailed : kExitOk;
}

// ------------------------------------------------------------ genmaps

struct GenmapsArgs {
  std::string kind = "engine";
  std::filesystem::path out;
  std::optional<double> rated_power_kw;
  std::optional<double> displacement_l;
  std::optional<double> rated_speed_rpm;
  std::optional<double> peak_torque_nm;
  std::optional<double> peak_torque_speed_rpm;
  std::optional<double> idle_speed_rpm;
  std::optional<double> max_speed_rads;
  std::optional<double> base_speed_rads;
};

int cmd_genmaps(const GenmapsArgs& a) {
  if (a.kind == "engine") {
    EngineSpec spec = EngineSpec::reference();
    if (a.rated_power_kw) spec.rated_power = *a.rated_power_kw * 1e3;
    if (a.displacement_l) spec.displacement_l = *a.displacement_l;
    if (a.rated_speed_rpm) spec.omega_rated = *a.rated_speed_rpm * kRpm;
    if (a.peak_torque_nm) spec.torque_peak = *a.peak_torque_nm;
    if (a.peak_torque_speed_rpm) spec.omega_torque_peak = *a.peak_torque_speed_rpm * kRpm;
    if (a.idle_speed_rpm) spec.omega_idle = *a.idle_speed_rpm * kRpm;
    spec.validate();
    const EngineMapSet maps = generate_engine_maps(spec);
    save_maps(maps, a.out);
    const double omega_rated = spec.omega_rated;
    std::cout << "rated_power_kw," << csv::format_number(maps.envelope_max_power() * 1e-3) << "\n"
              << "peak_torque_nm," << csv::format_number(*std::max_element(maps.torque_max.values().begin(), maps.torque_max.values().end())) << "\n"
              << "bsfc_rated_gpkwh,"
              << csv::format_number(maps.bsfc(omega_rated, maps.torque_max(omega_rated))) << "\n";
    return kExitOk;
  }
  if (a.kind == "em") {
    EmSpec spec;
    if (a.rated_power_kw) spec.rated_power = *a.rated_power_kw * 1e3;
    if (a.max_speed_rads) spec.omega_max = *a.max_speed_rads;
    if (a.base_speed_rads) spec.omega_base = *a.base_speed_rads;
    spec.validate();
    const EmMapSet maps = generate_em_map(spec);
    save_maps(maps, a.out);
    std::cout << "rated_power_kw," << csv::format_number(maps.rated_power * 1e-3) << "\n"
              << "peak_torque_nm," << csv::format_number(*std::max_element(maps.torque_sup.values().begin(), maps.torque_sup.values().end())) << "\n"
              << "max_speed_rads," << csv::format_number(maps.omega_max) << "\n";
    return kExitOk;
  }
  throw ValidationError("--kind must be engine or em");
}

// ----------------------------------------------------------- optratio

struct OptratioArgs {
  std::filesystem::path mission;
  std::filesystem::path config;
  std::filesystem::path em_map;
  double min = 3.5;
  double max = 5.0;
  double step = 0.1;
  std::filesystem::path out;
};

int cmd_optratio(const OptratioArgs& a) {
  if (!(a.step > 0.0) || !(a.min > 0.0) || !(a.max >= a.min)) {
    throw ValidationError("ratio range needs 0 < min <= max and a positive step");
  }
  require_file(a.mission, "mission file");
  const MissionProfile mission = load_mission(a.mission);
  Transmission transmission;
  EMachine motor;
  if (!a.config.empty()) {
    require_file(a.config, "plant config");
    const PlantConfig config = load_plant_config(a.config);
    if (config.architecture != Architecture::series) {
      throw ValidationError("optratio needs a series plant config (traction motor)");
    }
    transmission = config.transmission;
    motor = build_machine(config.machine);
  } else if (!a.em_map.empty()) {
    require_file(a.em_map, "e-machine map");
    motor.maps = load_em_maps(a.em_map);
  } else {
    motor.maps = generate_em_map(EmSpec{});
  }

  std::vector<double> ratios;
  const auto n = static_cast<std::size_t>(std::floor((a.max - a.min) / a.step + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) ratios.push_back(a.min + static_cast<double>(i) * a.step);

  const RatioResult res = optimize_transmission_ratio(mission, motor, transmission, ratios);
  std::ostringstream table;
  table << "ratio,feasible,mean_efficiency,violations\n";
  for (const auto& row : res.table) {
    table << csv::format_number(row.ratio) << ',' << (row.feasible ? 1 : 0) << ','
          << csv::format_number(row.mean_efficiency) << ',' << row.violations << '\n';
  }
  if (!a.out.empty()) write_text(a.out, table.str());
  std::cout << table.str() << "best_ratio," << csv::format_number(res.best_ratio) << "\n";
  return kExitOk;
}

// ------------------------------------------------------- synthmission

struct SynthArgs {
  std::uint64_t seed = DemoMissionSpec::linea1().seed;
  std::filesystem::path out;
};

int cmd_synthmission(const SynthArgs& a) {
  DemoMissionSpec spec = DemoMissionSpec::linea1();
  spec.seed = a.seed;
  const MissionProfile mission = synthesize_demo_mission(spec);
  if (a.out.has_parent_path()) std::filesystem::create_directories(a.out.parent_path());
  save_mission(mission, a.out);
  const MissionStats stats = mission_stats(mission);
  std::cout << "samples," << mission.size() << "\n"
            << "mean_power_kw," << csv::format_number(stats.mean_power * 1e-3) << "\n"
            << "max_power_kw," << csv::format_number(stats.max_power * 1e-3) << "\n";
  for (const auto& [label, p] : stats.segment_mean_power) {
    std::cout << "segment_" << label << "_mean_power_kw," << csv::format_number(p * 1e-3) << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Hybrid vessel powertrain simulation and energy-management optimisation"};
  app.require_subcommand(1);
  std::size_t jobs = 0;
  app.add_option("--jobs", jobs, "worker threads (0 = hardware concurrency)")->capture_default_str();

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "simulate or optimise one plant on a mission");
  c_run->add_option("--config", run.config, "plant config JSON")->required();
  c_run->add_option("--mission", run.mission, "mission CSV")->required();
  c_run->add_option("--cost", run.cost, "running cost")
      ->check(CLI::IsMember({"emissions", "fuel"}));
  c_run->add_option("--mu", run.mu, "NOx weight of the emissions cost");
  c_run->add_option("--out", run.out, "output directory");
  c_run->add_option("--value-cache", run.value_cache, "write the DP value field here");
  c_run->add_flag("--verify", run.verify, "replay the controls open loop and compare");
  c_run->add_option("--jobs", jobs, "worker threads");
  add_grid_flags(c_run, run.grid);

  SweepArgs sweep;
  std::string mu_list;
  auto* c_sweep = app.add_subcommand("sweep", "emissions-cost solves over a list of mu values");
  c_sweep->add_option("--config", sweep.config, "plant config JSON")->required();
  c_sweep->add_option("--mission", sweep.mission, "mission CSV")->required();
  auto* mu_opt = c_sweep->add_option("--mu", mu_list, "comma-separated mu list (default 0:0.1:1)");
  c_sweep->add_option("--out", sweep.out, "output directory");
  c_sweep->add_option("--jobs", jobs, "worker threads");
  add_grid_flags(c_sweep, sweep.grid);

  GenmapsArgs gen;
  auto* c_gen = app.add_subcommand("genmaps", "generate engine or e-machine maps");
  c_gen->add_option("--kind", gen.kind, "engine or em");
  c_gen->add_option("--out", gen.out, "output JSON")->required();
  c_gen->add_option("--rated-power-kw", gen.rated_power_kw);
  c_gen->add_option("--displacement-l", gen.displacement_l);
  c_gen->add_option("--rated-speed-rpm", gen.rated_speed_rpm);
  c_gen->add_option("--peak-torque-nm", gen.peak_torque_nm);
  c_gen->add_option("--peak-torque-speed-rpm", gen.peak_torque_speed_rpm);
  c_gen->add_option("--idle-speed-rpm", gen.idle_speed_rpm);
  c_gen->add_option("--max-speed-rads", gen.max_speed_rads);
  c_gen->add_option("--base-speed-rads", gen.base_speed_rads);

  OptratioArgs opt;
  auto* c_opt = app.add_subcommand("optratio", "motor-efficiency sweep over transmission ratios");
  c_opt->add_option("--mission", opt.mission, "mission CSV")->required();
  c_opt->add_option("--config", opt.config, "series plant config (motor and transmission)");
  c_opt->add_option("--em-map", opt.em_map, "e-machine map JSON");
  c_opt->add_option("--min", opt.min, "smallest ratio");
  c_opt->add_option("--max", opt.max, "largest ratio");
  c_opt->add_option("--step", opt.step, "ratio step");
  c_opt->add_option("--out", opt.out, "table CSV");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synthmission", "write the synthetic two-segment demo mission");
  c_synth->add_option("--seed", synth.seed, "random seed");
  c_synth->add_option("--out", synth.out, "mission CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  setup_logging();
  try {
    if (c_run->parsed()) return cmd_run(run, jobs);
    if (c_sweep->parsed()) {
      if (mu_opt->count() > 0) {
        sweep.mus_given = true;
        for (auto field : csv::split(mu_list)) {
          if (!field.empty()) sweep.mus.push_back(csv::parse_number(field));
        }
      }
      return cmd_sweep(sweep, jobs);
    }
    if (c_gen->parsed()) return cmd_genmaps(gen);
    if (c_opt->parsed()) return cmd_optratio(opt);
    if (c_synth->parsed()) return cmd_synthmission(synth);
  } catch (const InfeasibleError& e) {
    std::cerr << "error: infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace hvo
