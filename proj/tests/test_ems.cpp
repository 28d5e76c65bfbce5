#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include <json.hpp>

#include "hvo/ems.hpp"
#include "hvo/errors.hpp"
#include "support.hpp"

using namespace hvo;

namespace {

struct Setup {
  PlantConfig config;
  Plant plant;
};

const Setup& setup(const std::string& name) {
  static std::map<std::string, Setup> cache;
  auto it = cache.find(name);
  if (it == cache.end()) {
    PlantConfig c = load_plant_config(hvo::test::config_path(name));
    Plant p = build_plant(c);
    it = cache.emplace(name, Setup{std::move(c), std::move(p)}).first;
  }
  return it->second;
}

// Coarser grids keep the short-mission runs fast.
PlantConfig coarse(PlantConfig c) {
  c.dp.soc_nodes = 61;
  c.dp.omega_nodes = 13;
  c.dp.phi_nodes = 21;
  c.dp.alpha_nodes = 41;
  return c;
}

StepResult engine_step(double fuel, double nox, double hc) {
  StepResult s;
  s.feasible = true;
  s.engine_on = true;
  s.fuel_rate = fuel;
  s.nox_rate = nox;
  s.hc_rate = hc;
  return s;
}

const MissionProfile& short_mission() {
  static const MissionProfile m = hvo::test::demo_prefix(600, 200);
  return m;
}

}  // namespace

TEST_CASE("stage_cost") {
  CostSpec spec;
  spec.nox_max = 2.0;
  spec.hc_max = 0.5;
  spec.fuel_max = 10.0;
  SUBCASE("trade-off example") {
    spec.mu = 0.5;
    CHECK(stage_cost(engine_step(1.0, 0.8, 0.1), spec) == doctest::Approx(0.3).epsilon(1e-15));
  }
  SUBCASE("mu 1 ignores HC") {
    spec.mu = 1.0;
    CHECK(stage_cost(engine_step(1.0, 0.8, 0.1), spec) == stage_cost(engine_step(1.0, 0.8, 0.4), spec));
  }
  SUBCASE("fuel-only normalisation") {
    spec.kind = CostKind::fuel;
    CHECK(stage_cost(engine_step(10.0, 0.8, 0.1), spec) == 1.0);
    CHECK(stage_cost(engine_step(5.0, 2.0, 0.5), spec) == 0.5);
  }
  SUBCASE("engine off costs nothing") {
    StepResult off = engine_step(0.0, 0.0, 0.0);
    off.engine_on = false;
    CHECK(stage_cost(off, spec) == 0.0);
    spec.kind = CostKind::fuel;
    CHECK(stage_cost(off, spec) == 0.0);
  }
  SUBCASE("affine in mu") {
    const StepResult s = engine_step(1.0, 0.37, 0.21);
    for (double a : {0.0, 0.2, 0.7}) {
      spec.mu = a;
      const double c0 = stage_cost(s, spec);
      spec.mu = (a + 1.0) / 2.0;
      const double c1 = stage_cost(s, spec);
      spec.mu = 1.0;
      const double c2 = stage_cost(s, spec);
      CHECK(c1 == doctest::Approx((c0 + c2) / 2.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("cost specs") {
  const EngineMapSet& maps = std::get<SeriesPlant>(setup("series").plant).engine.maps;
  const CostSpec e = make_cost_spec({CostKind::emissions, 0.3}, maps);
  CHECK(e.nox_max == maps.m_dot_nox_max);
  CHECK(e.hc_max == maps.m_dot_hc_max);
  CHECK(e.fuel_max == maps.m_dot_f_max);
  CHECK(e.mu == 0.3);
  CHECK(make_cost_spec({CostKind::fuel, 0.3}, maps).kind == CostKind::fuel);
  CHECK_THROWS_AS(make_cost_spec({CostKind::emissions, 1.5}, maps), ValidationError);
  CostSpec bad = e;
  bad.hc_max = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK(parse_cost_kind("fuel") == CostKind::fuel);
  CHECK(parse_cost_kind("emissions") == CostKind::emissions);
  CHECK_THROWS_AS(parse_cost_kind("nox"), ValidationError);
}

TEST_CASE("conventional run") {
  const Setup& s = setup("conventional");
  Executor ex(1);
  const RunReport a = run_architecture(s.plant, s.config, short_mission(), {}, ex);
  const RunReport b = run_architecture(s.plant, s.config, short_mission(), {}, ex);
  CHECK(report_row(a) == report_row(b));
  CHECK(a.trajectory == b.trajectory);
  // Rates are mission-time averages of the logged steps.
  double fuel = 0.0, nox = 0.0, t = 0.0;
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    const double dt = short_mission().hold(k);
    fuel += a.steps[k].fuel_rate * dt;
    nox += a.steps[k].nox_rate * dt;
    t += dt;
  }
  CHECK(a.duration_s == doctest::Approx(t).epsilon(1e-12));
  CHECK(a.fuel_lph == doctest::Approx(fuel / 0.835 / (t / 3600.0)).epsilon(1e-12));
  CHECK(a.nox_gph == doctest::Approx(nox * 1000.0 / (t / 3600.0)).epsilon(1e-12));
  CHECK(a.dsoc == 0.0);
  CHECK(verify_run(s.plant, short_mission(), a) == 0.0);
}

TEST_CASE("hybrid runs on a short mission") {
  Executor ex(2);
  for (const std::string name : {"parallel", "series"}) {
    CAPTURE(name);
    const Setup& s = setup(name);
    const PlantConfig cfg = coarse(s.config);
    const RunReport r = run_architecture(s.plant, cfg, short_mission(), {CostKind::emissions, 0.5}, ex);
    CHECK(std::abs(r.dsoc) <= 0.01);
    CHECK(r.soc_initial == 0.6);
    CHECK(r.trajectory.size() == short_mission().size());
    CHECK(verify_run(s.plant, short_mission(), r) <= 1e-9);
    double worst = 0.0;
    for (const auto& st : r.steps) {
      REQUIRE(st.feasible);
      worst = std::max(worst, balance_residual(s.plant, st));
      REQUIRE(st.soc_next >= 0.4 - 1e-12);
      REQUIRE(st.soc_next <= 0.8 + 1e-12);
    }
    CHECK(worst <= 1e-9);
    // Value and rollout agree only loosely on a short horizon with a coarse
    // SOC grid; the 2% slack is checked on the full demo problem.
    CHECK(r.rollout_cost <= r.objective * 1.02);

    SUBCASE("single-mu sweep equals the run") {
      const std::vector<double> mus{0.5};
      const auto sweep = mu_sweep(s.plant, cfg, short_mission(), mus, ex);
      REQUIRE(sweep.size() == 1);
      CHECK(report_row(sweep[0]) == report_row(r));
    }
    SUBCASE("tampered trajectory is caught") {
      RunReport bad = r;
      bad.trajectory[10].soc += 0.01;
      CHECK(verify_run(s.plant, short_mission(), bad) >= 0.01 - 1e-12);
    }
  }
}

TEST_CASE("mu_sweep argument checks") {
  const Setup& s = setup("parallel");
  Executor ex(1);
  const std::vector<double> none;
  CHECK_THROWS_AS(mu_sweep(s.plant, s.config, short_mission(), none, ex), InvalidArgument);
  const std::vector<double> out_of_range{0.5, 1.2};
  CHECK_THROWS_AS(mu_sweep(s.plant, s.config, short_mission(), out_of_range, ex), InvalidArgument);
}

TEST_CASE("compare_architectures is deterministic and ordered") {
  std::vector<PlantSetup> plants;
  for (const char* name : {"conventional", "parallel", "series"}) {
    plants.push_back({coarse(setup(name).config), setup(name).plant});
  }
  Executor ex(2);
  const MissionProfile m = hvo::test::demo_prefix(240, 900);
  const auto a = compare_architectures(plants, m, {CostKind::fuel, 0.0}, ex);
  const auto b = compare_architectures(plants, m, {CostKind::fuel, 0.0}, ex);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(report_row(a[i]) == report_row(b[i]));
    CHECK(a[i].trajectory == b[i].trajectory);
  }
  CHECK(a[0].architecture == Architecture::conventional);
  CHECK(a[1].architecture == Architecture::parallel);
  CHECK(a[2].architecture == Architecture::series);
  CHECK_FALSE(report_row(a[2]).mu.has_value());
}

TEST_CASE("report artifacts round-trip") {
  const Setup& s = setup("parallel");
  Executor ex(1);
  const RunReport r = run_architecture(s.plant, coarse(s.config), short_mission(), {}, ex);
  hvo::test::TempDir dir("ems");
  write_report_files(r, dir.path());
  const auto rows = load_report_csv(dir / "report.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0] == report_row(r));
  std::vector<std::string> names;
  CHECK(load_trajectory_csv(dir / "trajectory.csv", &names) == r.trajectory);
  CHECK(names == std::vector<std::string>{"alpha"});
  const auto j = nlohmann::json::parse(hvo::test::read_text(dir / "report.json"));
  CHECK(j.at("architecture") == "parallel");
  CHECK(j.at("mu").get<double>() == 0.5);
  CHECK(j.at("nox_gph").get<double>() == r.nox_gph);
  CHECK(j.at("dsoc").get<double>() == r.dsoc);

  SUBCASE("row parsing") {
    ReportRow row{"series", "fuel", std::nullopt, 11.5, 60.25, 2.5, -1e-4};
    CHECK(parse_report_row(format_report_row(row)) == row);
    CHECK_THROWS_AS(parse_report_row("series,fuel,,1,2,3"), ParseError);
    CHECK_THROWS_AS(parse_report_row("series,fuel,,1,x,3,4"), ParseError);
    hvo::test::write_text(dir / "bad.csv", "arch,mu\n");
    CHECK_THROWS_AS(load_report_csv(dir / "bad.csv"), ParseError);
  }
}
