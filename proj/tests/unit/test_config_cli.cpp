#include "epifield/commands.hpp"
#include "epifield/config.hpp"
#include "epifield/errors.hpp"

#include "synthetic.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace epifield;
using epifield::testing::scratch_dir;
using epifield::testing::write_fixture;
namespace fs = std::filesystem;

namespace {

const std::string base_ini = "[data]\ncases = cases.csv\npopulations = pop.csv\nadjacency = adj.csv\nregions = a, b\n"
                             "[window]\ncalibration_start = 2020-06-01\ncalibration_end = 2020-07-31\n";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EPIFIELD_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

} // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(base_ini + "horizon = 7\nsmoothing = false\n[mcmc]\nn_steps = 1000\nburn_in = 100\n"
                                         "[detect]\ndetector = glr_poisson\n[output]\ndir = results\n",
                              "/data/run");
  CHECK(c.cases == fs::path("/data/run/cases.csv"));
  CHECK(c.regions == std::vector<std::string>{"a", "b"});
  CHECK(c.window.forecast_horizon == 7);
  CHECK_FALSE(c.smoothing);
  CHECK(c.mcmc.n_steps == 1000);
  CHECK(c.detector == DetectorId::glr_poisson);
  CHECK(c.output_dir == fs::path("/data/run/results"));
  CHECK(c.window.calibration_end == parse_date("2020-07-31"));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config(base_ini + "colour = red\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config(base_ini + "[mcmc]\nn_steps = many\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config(base_ini + "smoothing = maybe\n", "/"), ConfigError);
  CHECK_THROWS_AS(parse_config("[data\n", "/"), ConfigError);
  auto c = parse_config(base_ini + "horizon = 15\n", "/");
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = parse_config(base_ini + "[mcmc]\nn_steps = 100\nburn_in = 200\n", "/");
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = parse_config(base_ini, "/nonexistent-dir");
  CHECK_THROWS_AS(c.validate(), NotFoundError);
  CHECK_THROWS_AS(load_config("/nonexistent-dir/x.ini"), NotFoundError);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ConfigError("x")) == 1);
  CHECK(exit_code_for(NumericalError("x")) == 2);
  CHECK(exit_code_for(InvalidInput("x")) == 3);
  CHECK(exit_code_for(NotFoundError("x")) == 3);
  CHECK(exit_code_for(ParseError("x", 3)) == 3);
  CHECK(exit_code_for(std::runtime_error("x")) == 2);
  CHECK(run_guarded([] { throw NumericalError("boom"); }) == 2);
  CHECK(run_guarded([] {}) == 0);
}

TEST_CASE("sha256") {
  CHECK(sha256_text("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("end-to-end through the command line") {
  const fs::path dir = scratch_dir("cli");
  const fs::path cfg = write_fixture(dir, 6000, 3);
  const std::string conf = "--quiet --config " + cfg.string();

  REQUIRE(run_cli("fit " + conf) == 0);
  const fs::path out = dir / "out";
  CHECK(fs::exists(out / "chain.bin"));
  const auto summary = read_json(out / "summary.json");
  CHECK(summary["n_parameters"] == 16);

  SUBCASE("same seed gives a byte-identical chain") {
    REQUIRE(run_cli("fit " + conf + " --output " + (dir / "again").string()) == 0);
    CHECK(slurp(out / "chain.bin") == slurp(dir / "again" / "chain.bin"));
    REQUIRE(run_cli("fit " + conf + " --seed 99 --output " + (dir / "other").string()) == 0);
    CHECK(slurp(out / "chain.bin") != slurp(dir / "other" / "chain.bin"));
  }
  SUBCASE("downstream commands") {
    REQUIRE(run_cli("forecast " + conf) == 0);
    const std::string band = slurp(out / "forecast_band.csv");
    CHECK(band.rfind("date,region,median,q05,q25,q75,q95\n", 0) == 0);
    CHECK(fs::exists(out / "crps.csv"));

    REQUIRE(run_cli("detect " + conf) == 0);
    auto det = read_json(out / "detection.json");
    REQUIRE(det.is_array());
    CHECK(det.size() == 3);
    CHECK(det[0]["detector"] == "infection_rate");
    CHECK(fs::exists(out / "boundary_a.csv"));

    REQUIRE(run_cli("detect --detector glr_poisson " + conf) == 0);
    det = read_json(out / "detection.json");
    CHECK(det[0]["detector"] == "glr_poisson");

    REQUIRE(run_cli("diagnose " + conf) == 0);
    CHECK(slurp(out / "moran.csv").rfind("weighting,I,expected,variance,z,method,n\n", 0) == 0);
    CHECK(fs::exists(out / "dcor_individual.csv"));
    CHECK(fs::exists(out / "dcor_grouped_rounded.csv"));

    const auto manifest = read_json(out / "manifest.json");
    for (const char* cmd : {"fit", "forecast", "detect_infection_rate", "detect_glr_poisson", "diagnose"}) {
      REQUIRE(manifest["runs"].contains(cmd));
      CHECK(manifest["runs"][cmd]["config_sha256"] == sha256_file(cfg));
    }
  }
  SUBCASE("a chain from a different problem is refused") {
    CHECK(run_cli("forecast " + conf + " --regions a,b") == 3);
  }
}

TEST_CASE("single region drops the spatial block") {
  const fs::path dir = scratch_dir("cli1");
  const fs::path cfg = write_fixture(dir, 3000, 4);
  REQUIRE(run_cli("fit --quiet --regions a --config " + cfg.string()) == 0);
  CHECK(read_json(dir / "out" / "summary.json")["n_parameters"] == 6);
}

TEST_CASE("command-line usage errors") {
  const fs::path dir = scratch_dir("cli2");
  const fs::path cfg = write_fixture(dir, 3000, 4);
  CHECK(run_cli("fit --bogus --config " + cfg.string()) == 1);
  CHECK(run_cli("fit") == 1);
  CHECK(run_cli("fit --config " + (dir / "missing.ini").string()) == 1);
  std::ofstream(dir / "bad.ini") << "[mcmc]\nwhatever = 1\n";
  CHECK(run_cli("fit --config " + (dir / "bad.ini").string()) == 1);
  CHECK(run_cli("detect --detector nope --config " + cfg.string()) == 1);
}
