#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "carhmm/model.hpp"
#include "carhmm/track_io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "carhmm_cli_test.log";
  const std::string cmd = std::string(CARHMM_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = carhmm::read_file(log);
  return r;
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "carhmm_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json load_json(const fs::path& p) { return json::parse(carhmm::read_file(p)); }

}  // namespace

TEST_CASE("version and usage errors") {
  const auto v = cli("--version");
  CHECK(v.code == 0);
  CHECK(v.out == "carhmm 1.0.0\n");
  CHECK(cli("").code == 2);
  CHECK(cli("nonsense").code == 2);
  CHECK(cli("fit --k 0 --seed 1 " CARHMM_FIXTURE " -o /tmp/x").code == 2);
  CHECK(cli("fit --k 2 " CARHMM_FIXTURE " -o /tmp/x").code == 2);
  CHECK(cli("fit --k 2 --seed 1 --family weibull " CARHMM_FIXTURE " -o /tmp/x").code == 2);
  const auto help = cli("fit --help");
  CHECK(help.code == 0);
  for (const char* flag : {"--k", "--family", "--restarts", "--seed", "--fix-phi-zero", "--out"}) {
    CHECK(help.out.find(flag) != std::string::npos);
  }
}

TEST_CASE("domain errors exit 1 with a named message") {
  const auto dir = scratch();
  std::ofstream(dir / "bad.csv") << "time,lat,lon\n0,1,1\n60,1,1\n60,1,1\n";
  const auto r = cli("preprocess " + (dir / "bad.csv").string() + " -o " + (dir / "o").string());
  CHECK(r.code == 1);
  CHECK(r.out.find("NonMonotonicTime") != std::string::npos);
  CHECK(r.out.find("line 3") != std::string::npos);
}

TEST_CASE("pipeline on the bundled track") {
  const auto dir = scratch();
  const std::string d = dir.string();
  REQUIRE(cli("grid-search " CARHMM_FIXTURE " --steps 60:72:6 -o " + d + "/gs").code == 0);
  const auto best = load_json(dir / "gs/best.json");
  CHECK(best["time_step"] == 66.0);
  CHECK(best["group_cutoff"] == 132.0);
  const auto grid = carhmm::read_file(dir / "gs/grid.csv");
  CHECK(std::count(grid.begin(), grid.end(), '\n') == 1 + 3 * 21);

  REQUIRE(cli("preprocess " CARHMM_FIXTURE " --time-step 66 --cutoff 132 -o " + d + "/pre").code ==
          0);
  const auto side = load_json(dir / "pre/series.json");
  CHECK(side["n_raw_groups"] == 251);
  CHECK(side["n_interp_locations"] == 3129);

  REQUIRE(cli("fit " + d + "/pre/series.csv --k 2 --seed 3 --restarts 4 -o " + d + "/fit").code ==
          0);
  const auto report = load_json(dir / "fit/fit_report.json");
  CHECK(report["k"] == 2);
  CHECK(report["n_observations"] == 2627);
  const auto params = carhmm::load_params(dir / "fit/params.json");
  CHECK(params.model.k() == 2);
  CHECK(params.time_step_min == 66.0);
  REQUIRE(params.mean_step_km);
  CHECK(std::abs(*params.mean_step_km - 2.10) < 1e-3);

  REQUIRE(cli("decode " + d + "/fit/params.json " + d + "/pre/series.csv -o " + d + "/dec").code ==
          0);
  const auto path = carhmm::read_file(dir / "dec/path.csv");
  CHECK(std::count(path.begin(), path.end(), '\n') == 1 + 2627);

  const auto in = cli("interpret " + d + "/fit/params.json -o " + d + "/int");
  REQUIRE(in.code == 0);
  const auto interp = load_json(dir / "int/interpretation.json");
  REQUIRE(interp["states"].size() == 2);
  const double total = interp["states"][0]["delta"].get<double>() +
                       interp["states"][1]["delta"].get<double>();
  CHECK(total == doctest::Approx(1.0));

  REQUIRE(cli("diagnose " + d + "/fit/params.json " + d + "/pre/series.csv --grid 32 -o " + d +
              "/diag")
              .code == 0);
  for (const char* f : {"residuals.csv", "acf.csv", "qq.csv", "lag_density.csv",
                        "diagnostics.json", "manifest.json"}) {
    CHECK(fs::exists(dir / "diag" / f));
  }
  const auto lag = carhmm::read_file(dir / "diag/lag_density.csv");
  CHECK(std::count(lag.begin(), lag.end(), '\n') == 1 + 32 * 32);

  for (const char* sub : {"gs", "pre", "fit", "dec", "int", "diag"}) {
    const auto m = load_json(dir / sub / "manifest.json");
    CHECK(m["schema"] == "carhmm-manifest/1");
    CHECK(m["tool_version"] == "1.0.0");
    CHECK_FALSE(m["inputs"].empty());
  }
  const auto fm = load_json(dir / "fit/manifest.json");
  CHECK(fm["seed"] == 3);
  CHECK(fm["flags"]["k"] == 2);
}

TEST_CASE("reruns reproduce numeric outputs") {
  const auto dir = scratch();
  const std::string d = dir.string();
  carhmm::save_params(dir / "truth.json", {carhmm::presets::elk_two_state(0.1, 0.85), 1.0, 60.0});
  REQUIRE(cli("simulate " + d + "/truth.json --n 300 --seed 9 -o " + d + "/a").code == 0);
  REQUIRE(cli("simulate " + d + "/truth.json --n 300 --seed 9 -o " + d + "/b").code == 0);
  for (const char* f : {"series.csv", "series.json", "states.csv", "planar.csv"}) {
    CHECK(carhmm::read_file(dir / "a" / f) == carhmm::read_file(dir / "b" / f));
  }
  CHECK(cli("simulate " + d + "/truth.json --n 300 -o " + d + "/c").code == 2);

  REQUIRE(cli("fit " + d + "/a/series.csv --k 2 --seed 1 --restarts 3 -o " + d + "/fa").code == 0);
  REQUIRE(cli("fit " + d + "/a/series.csv --k 2 --seed 1 --restarts 3 -o " + d + "/fb").code == 0);
  CHECK(carhmm::read_file(dir / "fa/params.json") == carhmm::read_file(dir / "fb/params.json"));
}

TEST_CASE("study output does not depend on jobs") {
  const auto dir = scratch();
  const std::string d = dir.string();
  json truth = json::parse(
      carhmm::write_params({carhmm::presets::elk_two_state(0.1, 0.85), std::nullopt, 60.0}));
  json sc = {{"name", "small"}, {"truth", truth}, {"track_length", 200},
             {"n_sims", 4},     {"seed", 5},      {"max_restarts", 3}};
  std::ofstream(dir / "sc.json") << sc.dump();
  REQUIRE(cli("study " + d + "/sc.json --jobs 1 -o " + d + "/j1").code == 0);
  REQUIRE(cli("study " + d + "/sc.json --jobs 3 -o " + d + "/j3").code == 0);
  CHECK(carhmm::read_file(dir / "j1/study.json") == carhmm::read_file(dir / "j3/study.json"));
  CHECK(carhmm::read_file(dir / "j1/replicates.csv") ==
        carhmm::read_file(dir / "j3/replicates.csv"));
  const auto st = load_json(dir / "j1/study.json");
  CHECK(st["replicates"] == 4);
  CHECK(st["bias"].size() == 12);

  sc.erase("seed");
  std::ofstream(dir / "noseed.json") << sc.dump();
  CHECK(cli("study " + d + "/noseed.json -o " + d + "/ns").code == 1);
}
