#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "hvo/csv.hpp"
#include "hvo/ems.hpp"
#include "hvo/maps.hpp"
#include "support.hpp"

using namespace hvo;
using hvo::test::read_text;
using hvo::test::TempDir;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome hvo_cli(const TempDir& dir, const std::string& args, const std::string& env = "") {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = env + " '" + std::string(HVO_CLI_PATH) + "' " + args + " >'" +
                          out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = read_text(out);
  o.err = read_text(err);
  return o;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

std::string config(const std::string& name) { return q(hvo::test::config_path(name)); }

// A short mission keeps the hybrid solves quick.
std::filesystem::path short_mission(const TempDir& dir) {
  const auto p = dir / "short.csv";
  save_mission(hvo::test::demo_prefix(300, 100), p);
  return p;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  TempDir dir("cli");
  CHECK(hvo_cli(dir, "").code == 1);
  CHECK(hvo_cli(dir, "frobnicate").code == 1);
  CHECK(hvo_cli(dir, "run --config " + config("conventional")).code == 1);
  CHECK(hvo_cli(dir, "run --config " + config("conventional") + " --mission " +
                         q(hvo::test::demo_mission_path()) + " --cost cheap")
            .code == 1);
  CHECK(hvo_cli(dir, "--help").code == 0);
}

TEST_CASE("run") {
  TempDir dir("cli");
  const std::string mission = q(hvo::test::demo_mission_path());
  SUBCASE("conventional happy path writes three artifacts") {
    const Outcome o = hvo_cli(dir, "run --config " + config("conventional") + " --mission " +
                                       mission + " --out " + q(dir / "a"));
    REQUIRE(o.code == 0);
    CHECK(std::filesystem::is_regular_file(dir / "a" / "report.json"));
    CHECK(std::filesystem::is_regular_file(dir / "a" / "report.csv"));
    CHECK(std::filesystem::is_regular_file(dir / "a" / "trajectory.csv"));
    CHECK(o.out.find(kReportCsvHeader) == 0);
    // Artifacts parse back through the library loaders.
    const auto rows = load_report_csv(dir / "a" / "report.csv");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].arch == "conventional");
    CHECK(load_trajectory_csv(dir / "a" / "trajectory.csv").size() == 3600);
    // Identical inputs give byte-identical artifacts.
    REQUIRE(hvo_cli(dir, "run --config " + config("conventional") + " --mission " + mission +
                             " --out " + q(dir / "b"))
                .code == 0);
    for (const char* f : {"report.json", "report.csv", "trajectory.csv"}) {
      CHECK(read_text(dir / "a" / f) == read_text(dir / "b" / f));
    }
  }
  SUBCASE("missing mission names the path") {
    const Outcome o = hvo_cli(dir, "run --config " + config("conventional") + " --mission " +
                                       q(dir / "absent.csv") + " --out " + q(dir / "a"));
    CHECK(o.code == 1);
    CHECK(o.err.find("absent.csv") != std::string::npos);
  }
  SUBCASE("mu out of range") {
    CHECK(hvo_cli(dir, "run --config " + config("parallel") + " --mission " + mission +
                           " --mu 1.5 --out " + q(dir / "a"))
              .code == 1);
  }
  SUBCASE("bad config") {
    hvo::test::write_text(dir / "bad.json", "{\"architecture\": \"series\", \"oops\": 1}");
    CHECK(hvo_cli(dir, "run --config " + q(dir / "bad.json") + " --mission " + mission).code == 1);
  }
  SUBCASE("mission the conventional engine cannot follow exits 2") {
    save_mission(MissionProfile({{0, 40, 30000}, {1, 40, 30000}}), dir / "heavy.csv");
    const Outcome o = hvo_cli(dir, "run --config " + config("conventional") + " --mission " +
                                       q(dir / "heavy.csv") + " --out " + q(dir / "a"));
    CHECK(o.code == 2);
    CHECK(o.err.find("infeasible") != std::string::npos);
  }
  SUBCASE("series with a two-node SOC grid runs with a warning") {
    const Outcome o = hvo_cli(dir, "run --config " + config("series") + " --mission " +
                                       q(short_mission(dir)) + " --soc-nodes 2 --out " + q(dir / "a"));
    CHECK(o.code == 0);
    CHECK(o.err.find("warning") != std::string::npos);
  }
  SUBCASE("verify replays the controls") {
    const Outcome o = hvo_cli(dir, "run --config " + config("parallel") + " --mission " +
                                       q(short_mission(dir)) + " --soc-nodes 81 --verify --out " +
                                       q(dir / "a"));
    CHECK(o.code == 0);
    CHECK(o.err.find("verify: open-loop replay matches") != std::string::npos);
  }
  SUBCASE("HVO_LOG raises verbosity") {
    const Outcome o = hvo_cli(dir, "run --config " + config("parallel") + " --mission " +
                                       q(short_mission(dir)) + " --soc-nodes 41 --out " + q(dir / "a"),
                              "HVO_LOG=info");
    CHECK(o.code == 0);
    CHECK(o.err.find("parallel solve") != std::string::npos);
  }
}

TEST_CASE("sweep") {
  TempDir dir("cli");
  const std::string base = "--config " + config("parallel") + " --mission " +
                           q(short_mission(dir)) + " --soc-nodes 61";
  SUBCASE("empty mu list") {
    CHECK(hvo_cli(dir, "sweep " + base + " --mu '' --out " + q(dir / "s")).code == 1);
  }
  SUBCASE("mu out of range") {
    CHECK(hvo_cli(dir, "sweep " + base + " --mu 0.2,2 --out " + q(dir / "s")).code == 1);
  }
  SUBCASE("single mu equals the run row") {
    REQUIRE(hvo_cli(dir, "sweep " + base + " --mu 0.3 --out " + q(dir / "s")).code == 0);
    REQUIRE(hvo_cli(dir, "run " + base + " --mu 0.3 --out " + q(dir / "r")).code == 0);
    const std::string sweep = read_text(dir / "s" / "sweep.csv");
    const std::string run = read_text(dir / "r" / "report.csv");
    CHECK(sweep.substr(0, sweep.find('\n')) == std::string(kReportCsvHeader) + ",error");
    const std::string sweep_row = sweep.substr(sweep.find('\n') + 1);
    const std::string run_row = run.substr(run.find('\n') + 1);
    CHECK(sweep_row == run_row.substr(0, run_row.size() - 1) + ",\n");
    CHECK(parse_report_row(run_row.substr(0, run_row.size() - 1)) == load_report_csv(dir / "r" / "report.csv")[0]);
    const std::string plot = read_text(dir / "s" / "sweep_plot.csv");
    CHECK(plot.substr(0, plot.find('\n')) == "mu,nox_gph,hc_gph");
  }
  SUBCASE("rows follow the mu list") {
    REQUIRE(hvo_cli(dir, "sweep " + base + " --mu 1,0 --out " + q(dir / "s")).code == 0);
    const std::string plot = read_text(dir / "s" / "sweep_plot.csv");
    CHECK(plot.find("\n1,") < plot.find("\n0,"));
  }
}

TEST_CASE("genmaps") {
  TempDir dir("cli");
  SUBCASE("reference engine summary") {
    const Outcome o = hvo_cli(dir, "genmaps --kind engine --out " + q(dir / "e.json"));
    REQUIRE(o.code == 0);
    const auto at = o.out.find("rated_power_kw,");
    REQUIRE(at != std::string::npos);
    const double kw = std::stod(o.out.substr(at + 15));
    CHECK(std::abs(kw - 147.0) <= 0.01 * 147.0);
    CHECK(load_engine_maps(dir / "e.json") == generate_engine_maps(EngineSpec::reference()));
    REQUIRE(hvo_cli(dir, "genmaps --kind engine --out " + q(dir / "e2.json")).code == 0);
    CHECK(read_text(dir / "e.json") == read_text(dir / "e2.json"));
  }
  SUBCASE("e-machine") {
    CHECK(hvo_cli(dir, "genmaps --kind em --rated-power-kw 47 --max-speed-rads 960 "
                       "--base-speed-rads 320 --out " + q(dir / "m.json"))
              .code == 0);
    CHECK(load_em_maps(dir / "m.json").rated_power == 47e3);
  }
  SUBCASE("negative displacement") {
    CHECK(hvo_cli(dir, "genmaps --kind engine --displacement-l -1 --out " + q(dir / "e.json"))
              .code == 1);
    CHECK_FALSE(std::filesystem::exists(dir / "e.json"));
  }
  SUBCASE("unknown kind") {
    CHECK(hvo_cli(dir, "genmaps --kind turbine --out " + q(dir / "e.json")).code == 1);
  }
}

TEST_CASE("optratio") {
  TempDir dir("cli");
  const std::string base =
      "optratio --config " + config("series") + " --mission " + q(hvo::test::demo_mission_path());
  SUBCASE("demo range has a unique argmax") {
    const Outcome o = hvo_cli(dir, base + " --min 3.5 --max 5.0 --step 0.1 --out " + q(dir / "r.csv"));
    REQUIRE(o.code == 0);
    CHECK(o.out.find("best_ratio,") != std::string::npos);
    const std::string table = read_text(dir / "r.csv");
    std::size_t rows = 0;
    for (char c : table) rows += c == '\n';
    CHECK(rows == 17);
  }
  SUBCASE("single ratio") {
    const Outcome o = hvo_cli(dir, base + " --min 4.3 --max 4.3");
    REQUIRE(o.code == 0);
    CHECK(o.out.find("best_ratio,4.3\n") != std::string::npos);
  }
  SUBCASE("no feasible ratio exits 2") {
    CHECK(hvo_cli(dir, base + " --min 40 --max 50 --step 5").code == 2);
  }
  SUBCASE("bad range exits 1") {
    CHECK(hvo_cli(dir, base + " --min 5 --max 4").code == 1);
  }
}

TEST_CASE("synthmission") {
  TempDir dir("cli");
  REQUIRE(hvo_cli(dir, "synthmission --out " + q(dir / "m.csv")).code == 0);
  CHECK(read_text(dir / "m.csv") == read_text(hvo::test::demo_mission_path()));
  REQUIRE(hvo_cli(dir, "synthmission --seed 7 --out " + q(dir / "a.csv")).code == 0);
  REQUIRE(hvo_cli(dir, "synthmission --seed 7 --out " + q(dir / "b.csv")).code == 0);
  CHECK(read_text(dir / "a.csv") == read_text(dir / "b.csv"));
  CHECK(read_text(dir / "a.csv") != read_text(dir / "m.csv"));
  CHECK(load_mission(dir / "a.csv").size() == 3600);
}
