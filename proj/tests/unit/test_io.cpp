#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "polygene/config.hpp"
#include "polygene/experiment.hpp"
#include "polygene/output.hpp"
#include "polygene/rng.hpp"

using namespace polygene;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string body(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    out += line + "\n";
  }
  return out;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("polygene_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_sim(const fs::path& out) {
  auto kv = KeyValues::parse(
      "mode = simulate\n"
      "seed = 99\n"
      "sim.N = 40\n"
      "sim.L = 12   # trailing comment\n"
      "sim.generations = 20\n"
      "sim.stride = 5\n"
      "recomb.kind = poisson\n"
      "recomb.lambda = 1.5\n"
      "recomb.rho = 20\n"
      "fitness.kappa = 3\n"
      "mutation.theta = 0.5\n");
  kv.set("out", out.string());
  return resolve_config(kv);
}

}  // namespace

TEST_SUITE("cli-io") {

TEST_CASE("number formatting and hashing") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(-2.0) == "-2");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("key-value parsing") {
  const auto kv = KeyValues::parse("# header\n a.b = 1.5 \n\nc = x # note\nlist = 1, 2,3\nc = y\n");
  CHECK(kv.number("a.b", 0.0) == 1.5);
  CHECK(kv.text("c", "") == "y");
  CHECK(kv.numbers("list") == std::vector<double>{1, 2, 3});
  CHECK(kv.number("missing", 4.0) == 4.0);
  CHECK_THROWS_AS(kv.integer("a.b", 0), ConfigError);
}

TEST_CASE("config errors name the key") {
  auto expect_key = [](const std::string& text, const std::string& key) {
    try {
      resolve_config(KeyValues::parse(text));
      FAIL("expected a ConfigError for " << key);
    } catch (const ConfigError& e) {
      CHECK(e.key() == key);
    }
  };
  expect_key("mode = simulate\nsim.N = many\n", "sim.N");
  expect_key("mode = simulate\nsim.N = 10\nrecomb.rho = 20\n", "recomb.rho");
  expect_key("mode = simulate\nsim.typo = 1\n", "sim.typo");
  expect_key("mode = simulate\nrecomb.kind = triple\n", "recomb.kind");
  expect_key("mode = simulate\nrecomb.kind = single\nrecomb.density = /no/such/file\n", "recomb.density");
  expect_key("mode = meanfield\nmeanfield.dt = -1\n", "meanfield.dt");
  expect_key("mode = bifurcation\nbifurcation.steps = 0\n", "bifurcation.steps");
  expect_key("mode = wander\n", "mode");
  expect_key("mode = simulate\nseed = -3\n", "seed");
  CHECK_THROWS_AS(KeyValues::parse("no equals sign\n"), ConfigError);
}

TEST_CASE("keys of other modes are ignored, the seed is echoed verbatim") {
  const auto cfg = resolve_config(KeyValues::parse(
      "mode = stationary\nseed = 18446744073709551615\nsim.N = 7\nstationary.kappa = -2\n"));
  CHECK(cfg.mode == Mode::stationary);
  CHECK(cfg.seed == 18446744073709551615ULL);
  CHECK(cfg.echo.at("seed") == "18446744073709551615");
  CHECK(cfg.echo.count("sim.N") == 0);
  CHECK(cfg.stationary.selection.kappa == -2.0);
}

TEST_CASE("checksum depends on the resolved values only") {
  const auto a = resolve_config(KeyValues::parse("mode = bifurcation\nbifurcation.kappa_min = -3\n"));
  const auto b = resolve_config(KeyValues::parse("mode=bifurcation\nbifurcation.kappa_min=-3.0\nout=/elsewhere\n"));
  const auto c = resolve_config(KeyValues::parse("mode = bifurcation\nbifurcation.kappa_min = -2\n"));
  CHECK(a.checksum() == b.checksum());
  CHECK(a.checksum() != c.checksum());
}

TEST_CASE("simulate writes headed, reproducible outputs with a consistent manifest") {
  const auto dir1 = scratch("sim1");
  const auto dir2 = scratch("sim2");
  const auto m1 = run_experiment(small_sim(dir1));
  run_experiment(small_sim(dir2));

  for (const char* name : {"trajectory.csv", "freqs.csv"}) {
    const auto text = slurp(dir1 / name);
    CHECK(text.rfind("# polygene " + std::string(toolkit_version()), 0) == 0);
    CHECK(text.find("# config_sha256 " + small_sim(dir1).checksum()) != std::string::npos);
    CHECK(text.find("# seed 99\n") != std::string::npos);
    CHECK(text == slurp(dir2 / name));
  }
  const auto traj = body(slurp(dir1 / "trajectory.csv"));
  CHECK(traj.rfind("gen,t,trait_mean,trait_var,L_trait_var,mean_p,het,sigma2,mean_abs_D,mean_le_dev\n", 0) == 0);
  CHECK(std::count(traj.begin(), traj.end(), '\n') == 1 + 5);  // gen 0, 5, 10, 15, 20

  const auto manifest = nlohmann::json::parse(slurp(dir1 / "manifest.json"));
  CHECK(manifest["rng"]["generator"] == "philox4x32-10");
  CHECK(manifest["root_seed"] == 99);
  CHECK(manifest["replicates"][0]["seed"] == derive_seed(99, 0));
  for (const auto& f : manifest["files"]) {
    CHECK(file_sha256(dir1 / f["path"].get<std::string>()) == f["sha256"]);
  }
  CHECK(m1.files.size() == 3);  // config echo, trajectory, freqs
  for (const auto& e : fs::directory_iterator(dir1)) {
    CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
  }
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("replicates use derived seeds and separate directories") {
  const auto dir = scratch("reps");
  auto cfg = small_sim(dir);
  cfg.replicates = 3;
  const auto m = run_experiment(cfg);
  REQUIRE(m.replicates.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(m.replicates[i].seed == derive_seed(99, i));
    CHECK(fs::exists(dir / ("rep_00" + std::to_string(i)) / "trajectory.csv"));
  }
  CHECK(body(slurp(dir / "rep_000/freqs.csv")) != body(slurp(dir / "rep_001/freqs.csv")));
  fs::remove_all(dir);
}

TEST_CASE("a failing run leaves no outputs") {
  const auto dir = scratch("fail");
  auto cfg = small_sim(dir);
  cfg.sim.population = 0;  // bypasses resolve_config; the simulator rejects it
  CHECK_THROWS(run_experiment(cfg));
  CHECK(!fs::exists(dir / "trajectory.csv"));
  CHECK(!fs::exists(dir / "manifest.json"));
  fs::remove_all(dir);
}

TEST_CASE("bifurcation output shows the pitchfork") {
  const auto dir = scratch("bif");
  auto kv = KeyValues::parse("mode = bifurcation\nbifurcation.theta = 0.6\nbifurcation.steps = 31\n");
  kv.set("out", dir.string());
  run_experiment(resolve_config(kv));
  std::istringstream in(body(slurp(dir / "bifurcation.csv")));
  std::string line;
  std::getline(in, line);
  CHECK(line == "kappa,roots,branch_low,branch_mid,branch_high,y_low,y_mid,y_high");
  double last_three = NAN, first_one = NAN;
  while (std::getline(in, line)) {
    const double kappa = std::stod(line.substr(0, line.find(',')));
    const int roots = std::stoi(line.substr(line.find(',') + 1));
    if (roots == 3) last_three = kappa;
    if (roots == 1 && std::isnan(first_one)) first_one = kappa;
  }
  CHECK(last_three == doctest::Approx(-1.8));
  CHECK(first_one == doctest::Approx(-1.7));
  fs::remove_all(dir);
}

TEST_CASE("verify runs the selected suites") {
  const auto report = run_verify("free-recomb,kappa_c");
  CHECK(report.suites == std::vector<std::string>{"free-recomb", "kappa_c"});
  CHECK(report.passed());
  CHECK(run_verify("no-such-suite").entries.empty());
  const auto text = render_verify_report(report);
  CHECK(text.find("0 failed") != std::string::npos);
}

TEST_CASE("meanfield writes the Lande residual column") {
  const auto dir = scratch("mf");
  auto kv = KeyValues::parse(
      "mode = meanfield\nmeanfield.solver = grid\nmeanfield.K = 100\nmeanfield.T = 0.05\n"
      "meanfield.snapshot_every = 250\nfitness.kind = linear\nfitness.beta = 1\nmutation.theta = 0.5\n");
  kv.set("out", dir.string());
  const auto m = run_experiment(resolve_config(kv));
  const auto text = body(slurp(dir / "meanfield.csv"));
  CHECK(text.rfind("t,mean_trait,sbar,sigma2,lande_residual\n", 0) == 0);
  CHECK(fs::exists(dir / "density_t0.000000.csv"));
  CHECK(fs::exists(dir / "density_t0.050000.csv"));
  CHECK(m.replicates[0].summary.at("lande_relative_l2") < 0.05);
  fs::remove_all(dir);
}

}
