#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hvo/architectures.hpp"
#include "hvo/errors.hpp"
#include "support.hpp"

using namespace hvo;
using hvo::test::config_path;

namespace {

template <class P>
const P& bundled(const std::string& name) {
  static const P p = std::get<P>(build_plant(load_plant_config(config_path(name))));
  return p;
}

const ConventionalPlant& conv() { return bundled<ConventionalPlant>("conventional"); }
const ParallelPlant& par() { return bundled<ParallelPlant>("parallel"); }
const SeriesPlant& ser() { return bundled<SeriesPlant>("series"); }

EmMapSet flat_machine(double eta, double t_max, double w_max) {
  EmMapSet m;
  m.efficiency = Grid2D(Axis({0.0, w_max}), Axis({-t_max, t_max}), {eta, eta, eta, eta});
  m.torque_sup = Curve(Axis({0.0, w_max}), {t_max, t_max});
  m.torque_inf = Curve(Axis({0.0, w_max}), {-t_max, -t_max});
  m.omega_max = w_max;
  m.rated_power = t_max * w_max;
  return m;
}

// Parallel plant with lossless, inertia-free drivetrain so split arithmetic
// can be checked by hand.
ParallelPlant ideal_parallel() {
  ParallelPlant p = par();
  p.transmission = {4.0, 1.0, 0.0};
  p.engine.inertia = 0.0;
  p.emachine.inertia = 0.0;
  return p;
}

}  // namespace

TEST_CASE("bundled configs carry the reference plant values") {
  const PlantConfig c = load_plant_config(config_path("conventional"));
  CHECK(c.architecture == Architecture::conventional);
  CHECK(c.transmission.tau == 4.0);
  CHECK(c.engine.rated_power == 147e3);

  const PlantConfig p = load_plant_config(config_path("parallel"));
  CHECK(p.architecture == Architecture::parallel);
  CHECK(p.transmission.tau == 4.0);
  CHECK(p.coupling.tau == 4.0);
  CHECK(p.engine.rated_power + p.machine.spec.rated_power == doctest::Approx(147e3));
  CHECK(p.machine.spec.rated_power == 47e3);
  CHECK(p.battery.energy_kwh == 70.0);

  const PlantConfig s = load_plant_config(config_path("series"));
  CHECK(s.architecture == Architecture::series);
  CHECK(s.transmission.tau == 4.3);
  CHECK(s.machine.spec.rated_power == c.engine.rated_power);
  CHECK(s.engine.rated_power == 125e3);
  CHECK(s.generator.spec.rated_power == 125e3);
  CHECK(s.aux_power == 2e3);
  CHECK(s.soc_initial == 0.6);
}

TEST_CASE("config errors") {
  SUBCASE("malformed JSON") {
    CHECK_THROWS_AS(parse_plant_config("{\"architecture\": "), ParseError);
  }
  SUBCASE("unknown architecture") {
    CHECK_THROWS_AS(parse_plant_config(R"({"architecture": "diesel-electric"})"), ValidationError);
  }
  SUBCASE("unknown key") {
    std::string text = hvo::test::read_text(config_path("conventional"));
    text.insert(text.find('{') + 1, "\"speed_ratioo\": 4,");
    CHECK_THROWS_AS(parse_plant_config(text), ValidationError);
  }
  SUBCASE("missing block") {
    CHECK_THROWS_AS(parse_plant_config(R"({"architecture": "conventional"})"), ValidationError);
  }
  SUBCASE("negative displacement") {
    std::string text = hvo::test::read_text(config_path("conventional"));
    const auto at = text.find("\"displacement_l\"");
    REQUIRE(at != std::string::npos);
    const auto colon = text.find(':', at);
    text.insert(text.find_first_not_of(' ', colon + 1), "-");
    CHECK_THROWS_AS(parse_plant_config(text), ValidationError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_plant_config(config_path("nope")), IoError);
  }
  SUBCASE("dp grid bounds") {
    DpConfig d;
    d.soc_nodes = 1;
    CHECK_THROWS_AS(d.validate(), ValidationError);
    d = DpConfig{};
    d.alpha_min = -1.5;
    CHECK_THROWS_AS(d.validate(), ValidationError);
    d = DpConfig{};
    d.terminal_weight_per_stage = 0.0;
    CHECK_THROWS_AS(d.validate(), ValidationError);
    CHECK_NOTHROW(DpConfig{}.validate());
  }
}

TEST_CASE("conventional_step") {
  const ConventionalPlant& p = conv();
  const double idle = p.engine.maps.omega_idle;
  SUBCASE("zero torque at idle-compatible speed gives idle fuel") {
    const StepResult r = conventional_step({idle / 4.0, 0.0, 0.0, 1.0}, p);
    CHECK(r.feasible);
    CHECK(r.fuel_rate == engine_evaluate(idle, 0.0, p.engine).fuel);
    CHECK(r.fuel_rate > 0.0);
  }
  SUBCASE("torque above the envelope") {
    const double w = 150.0;
    const double t_prop = 1.05 * p.engine.maps.torque_max(w) * 4.0 * 0.97;
    const StepResult r = conventional_step({w / 4.0, t_prop, 0.0, 1.0}, p);
    CHECK_FALSE(r.feasible);
    CHECK(r.violation == Violation::engine_torque);
  }
  SUBCASE("demo mission is feasible at every step") {
    const MissionProfile m = load_mission(hvo::test::demo_mission_path());
    std::size_t bad = 0;
    for (std::size_t k = 0; k < m.size(); ++k) bad += !conventional_step(step_input(m, k), p).feasible;
    CHECK(bad == 0);
  }
}

TEST_CASE("parallel_step split arithmetic") {
  const ParallelPlant p = ideal_parallel();
  const StepInput in{150.0 / 4.0, 1600.0, 0.0, 1.0};  // T_tran = 400
  SUBCASE("alpha 0.5") {
    const StepResult r = parallel_step(in, 0.6, 0.5, p);
    REQUIRE(r.feasible);
    CHECK(r.transmission.torque == 400.0);
    CHECK(r.em.torque == 50.0);
    CHECK(r.engine.torque == 200.0);
    CHECK(r.em.omega == 600.0);
    CHECK(r.engine.torque + 4.0 * r.em.torque == 400.0);
  }
  SUBCASE("alpha 0 is pure engine") {
    const StepResult r = parallel_step(in, 0.6, 0.0, p);
    REQUIRE(r.feasible);
    CHECK(r.em.torque == 0.0);
    CHECK(r.em_power == 0.0);
    CHECK(r.battery_power == doctest::Approx(p.aux_power).epsilon(1e-12));
  }
  SUBCASE("alpha 1 leaves the engine idling along") {
    const StepResult r = parallel_step({150.0 / 4.0, 800.0, 0.0, 1.0}, 0.6, 1.0, p);
    REQUIRE(r.feasible);
    CHECK(r.engine.torque == 0.0);
    CHECK(r.em.torque == 50.0);
    CHECK(r.fuel_rate == engine_evaluate(150.0, 0.0, p.engine).fuel);
  }
  SUBCASE("negative engine share is not credited") {
    const StepInput regen{150.0 / 4.0, -800.0, 0.0, 1.0};
    const StepResult r = parallel_step(regen, 0.6, 0.0, p);
    REQUIRE(r.feasible);
    CHECK(r.engine.torque < 0.0);
    CHECK(r.fuel_rate == engine_evaluate(150.0, 0.0, p.engine).fuel);
  }
  SUBCASE("negative alpha charges the battery") {
    const StepResult r = parallel_step(in, 0.6, -0.5, p);
    REQUIRE(r.feasible);
    CHECK(r.em.torque == -50.0);
    CHECK(r.engine.torque == 600.0);
    CHECK(r.soc_next > 0.6);
  }
}

TEST_CASE("parallel torque balance and determinism on random steps") {
  const ParallelPlant& p = par();
  const double tau = p.coupling.tau;
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> w(15.0, 50.0), t(-1500.0, 4000.0), a(-1.0, 1.0),
      al(-1.0, 1.0), s(0.45, 0.75);
  std::size_t feasible = 0;
  for (int n = 0; n < 3000; ++n) {
    const StepInput in{w(rng), t(rng), a(rng), 1.0};
    const double alpha = al(rng), soc = s(rng);
    const StepResult r = parallel_step(in, soc, alpha, p);
    REQUIRE(r == parallel_step(in, soc, alpha, p));
    if (!r.feasible) continue;
    ++feasible;
    const double acc = r.omega_dot_engine;
    const double lhs = r.engine.torque + tau * (r.em.torque - p.emachine.inertia * acc * tau) -
                       p.engine.inertia * acc;
    REQUIRE(std::abs(lhs - r.transmission.torque) <= 1e-9 * std::max(1.0, std::abs(lhs)));
    REQUIRE(r.battery_power == doctest::Approx(r.em_power + p.aux_power).epsilon(1e-9));
  }
  CHECK(feasible > 1000);
}

TEST_CASE("series_step") {
  const SeriesPlant& p = ser();
  const StepInput in{20.0, 2000.0, 0.0, 1.0};
  const SeriesDemand d = series_demand(in, p);
  REQUIRE(d.violation == Violation::none);
  CHECK(d.bus_power == d.motor_power + 2e3);

  SUBCASE("engine off is pure electric") {
    const StepResult r = series_step(in, {0.6, 0.0}, 0.3, 0.0, p);
    REQUIRE(r.feasible);
    CHECK_FALSE(r.engine_on);
    CHECK(r.fuel_rate == 0.0);
    CHECK(r.nox_rate == 0.0);
    CHECK(r.hc_rate == 0.0);
    CHECK(r.battery_power == doctest::Approx(d.bus_power).epsilon(1e-9));
    CHECK(r.soc_next < 0.6);
  }
  SUBCASE("phi 0 leaves the bus to the gen-set") {
    const double we = 150.0;
    const StepResult r = series_step(in, {0.6, we}, 0.0, we, p);
    REQUIRE(r.feasible);
    CHECK(r.battery_power == 0.0);
    CHECK(r.generator_power == d.bus_power);
    CHECK(r.generator.omega == we * 4.0);
    CHECK(r.engine.torque == doctest::Approx(4.0 * r.generator.torque).epsilon(1e-12));
    CHECK(r.fuel_rate > 0.0);
  }
  SUBCASE("engine off at the lower SOC bound runs out of charge") {
    const StepResult r = series_step(in, {0.4, 0.0}, 0.0, 0.0, p);
    CHECK_FALSE(r.feasible);
    CHECK(r.violation == Violation::soc_window);
  }
  SUBCASE("power balance and determinism on random controls") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> phi(-1.0, 1.0), we(p.engine.maps.omega_idle,
                                                              p.engine.maps.omega_max);
    std::size_t feasible = 0;
    for (int n = 0; n < 2000; ++n) {
      const double f = phi(rng), w = we(rng);
      const PlantState st{0.6, w};
      const StepResult r = series_step(in, st, f, w, p);
      REQUIRE(r == series_step(in, st, f, w, p));
      if (!r.feasible) continue;
      ++feasible;
      const double res = r.generator_power + r.battery_power - d.bus_power;
      REQUIRE(std::abs(res) <= 1e-9 * std::abs(d.bus_power));
    }
    CHECK(feasible > 100);
  }
}

TEST_CASE("series gen-set arithmetic") {
  SUBCASE("generator torque from the bus balance") {
    const Generator g{flat_machine(0.92, 400.0, 1000.0), 0.3};
    const double p_gen = 50e3 - 20e3;
    const GeneratorTorque t = generator_evaluate(p_gen, 800.0, g);
    REQUIRE(t.feasible());
    CHECK(t.torque == doctest::Approx(30e3 / (0.92 * 800.0)).epsilon(1e-15));
    CHECK(t.torque == doctest::Approx(40.76).epsilon(1e-4));
  }
  SUBCASE("engine torque reflects generator torque and both inertias") {
    SeriesPlant p = ser();
    p.coupling.tau = 4.0;
    p.generator.inertia = 0.3;
    p.engine.inertia = 1.5;
    // 4·40 + (16·0.3 + 1.5)·(10 / 0.5)
    CHECK(series_engine_torque(40.0, 110.0, 100.0, 0.5, p) == doctest::Approx(286.0));
    // Energy view: shaft power equals generator shaft power plus the rate of
    // change of rotating kinetic energy, evaluated at the end speed.
    const double w1 = 110.0, w0 = 100.0, dt = 0.5;
    const double dke = 0.5 * (1.5 + 0.3 * 16.0) * (w1 * w1 - w0 * w0) / dt;
    const double mean_w = 0.5 * (w0 + w1);
    CHECK(series_inertia_torque(w1, w0, dt, p) * mean_w == doctest::Approx(dke).epsilon(1e-12));
  }
}

TEST_CASE("optimize_transmission_ratio") {
  const EMachine& motor = ser().motor;
  const Transmission tr = ser().transmission;
  const MissionProfile m = load_mission(hvo::test::demo_mission_path());
  SUBCASE("single candidate") {
    const std::vector<double> one{4.3};
    CHECK(optimize_transmission_ratio(m, motor, tr, one).best_ratio == 4.3);
  }
  SUBCASE("speed-limited candidate loses") {
    double w_max = 0.0;
    for (const auto& s : m.samples()) w_max = std::max(w_max, s.omega_prop);
    const double too_fast = 1.05 * motor.maps.omega_max / w_max;
    const std::vector<double> two{too_fast, 4.0};
    const RatioResult r = optimize_transmission_ratio(m, motor, tr, two);
    CHECK(r.best_ratio == 4.0);
    CHECK_FALSE(r.table[0].feasible);
    CHECK(r.table[0].violations > 0);
  }
  SUBCASE("nothing feasible") {
    const std::vector<double> bad{50.0, 60.0};
    CHECK_THROWS_AS(optimize_transmission_ratio(m, motor, tr, bad), NoFeasibleRatio);
  }
  SUBCASE("demo sweep has a unique interior argmax") {
    std::vector<double> ratios;
    for (int i = 0; i <= 15; ++i) ratios.push_back(3.5 + 0.1 * i);
    const RatioResult r = optimize_transmission_ratio(m, motor, tr, ratios);
    CHECK(r.best_ratio > ratios.front());
    CHECK(r.best_ratio < ratios.back());
    double best = 0.0;
    int ties = 0;
    for (const auto& row : r.table) {
      REQUIRE(row.feasible);
      best = std::max(best, row.mean_efficiency);
    }
    for (const auto& row : r.table) ties += row.mean_efficiency == best;
    CHECK(ties == 1);
    MESSAGE("best ratio " << r.best_ratio << ", mean efficiency " << best);
  }
}
