// polygene command-line front end.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "polygene/config.hpp"
#include "polygene/experiment.hpp"
#include "polygene/output.hpp"

using namespace polygene;

namespace {

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--seed", o.seed, "root seed (overrides the config)");
  sub->add_option("--replicates", o.replicates, "replicate count (overrides the config)");
  sub->add_option("--set", o.overrides, "extra key=value assignment, repeatable");
}

int run(const std::string& mode, const CommonOptions& o,
        const std::vector<std::pair<std::string, std::string>>& flags) {
  KeyValues kv;
  std::filesystem::path base = ".";
  if (!o.config.empty()) {
    kv = KeyValues::load(o.config);
    base = std::filesystem::path(o.config).parent_path();
    if (base.empty()) base = ".";
  }
  if (kv.has("mode") && kv.text("mode", "") != mode) {
    throw ConfigError("mode", "config file is for '" + kv.text("mode", "") + "', not '" + mode + "'");
  }
  kv.set("mode", mode);
  for (const auto& [k, v] : flags) kv.set(k, v);
  for (const auto& a : o.overrides) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError(a, "--set expects key=value");
    kv.set(a.substr(0, eq), a.substr(eq + 1));
  }
  if (o.seed) kv.set("seed", std::to_string(*o.seed));
  if (o.replicates) kv.set("replicates", std::to_string(*o.replicates));
  if (!o.out.empty()) kv.set("out", o.out);
  if (!kv.has("out")) kv.set("out", "polygene_" + mode);

  const auto cfg = resolve_config(kv, base);
  const auto manifest = run_experiment(cfg, &std::cout);
  std::cout << "wrote " << manifest.files.size() + 1 << " files to " << cfg.output.string() << '\n';
  return manifest.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polygene: polygenic adaptation simulator and mean-field toolkit"};
  app.set_version_flag("--version", std::string(toolkit_version()));
  app.require_subcommand(1);

  CommonOptions sim_o, mf_o, st_o, bif_o, ver_o;
  auto* simulate = app.add_subcommand("simulate", "Wright-Fisher forward simulation");
  add_common(simulate, sim_o);
  auto* meanfield = app.add_subcommand("meanfield", "mean-field solver (particles or grid)");
  add_common(meanfield, mf_o);

  auto* stationary = app.add_subcommand("stationary", "fixed points of the self-consistency map");
  add_common(stationary, st_o);
  std::optional<double> st_theta, st_kappa, st_optimum;
  stationary->add_option("--theta", st_theta, "symmetric mutation rate");
  stationary->add_option("--kappa", st_kappa, "selection strength, sbar = -2 kappa (m - z*)");
  stationary->add_option("--optimum", st_optimum, "trait optimum z*");

  auto* bifurcation = app.add_subcommand("bifurcation", "kappa scan of the stationary branches");
  add_common(bifurcation, bif_o);
  std::optional<double> bif_theta, kappa_min, kappa_max;
  std::optional<int> steps;
  bifurcation->add_option("--theta", bif_theta, "symmetric mutation rate");
  bifurcation->add_option("--kappa-min", kappa_min, "lower end of the scan");
  bifurcation->add_option("--kappa-max", kappa_max, "upper end of the scan");
  bifurcation->add_option("--steps", steps, "number of kappa values");

  auto* verify = app.add_subcommand("verify", "run the property suites");
  add_common(verify, ver_o);
  std::optional<std::string> filter;
  verify->add_option("--filter", filter, "comma-separated suite name fragments");
  verify->add_flag_callback("--list", [] {
    for (const auto& s : verify_suites()) std::cout << s << '\n';
    std::exit(0);
  }, "list suite names and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  auto num = [](double v) { return format_number(v); };
  try {
    if (simulate->parsed()) return run("simulate", sim_o, {});
    if (meanfield->parsed()) return run("meanfield", mf_o, {});
    if (stationary->parsed()) {
      std::vector<std::pair<std::string, std::string>> f;
      if (st_theta) f.emplace_back("stationary.theta", num(*st_theta));
      if (st_kappa) f.emplace_back("stationary.kappa", num(*st_kappa));
      if (st_optimum) f.emplace_back("stationary.optimum", num(*st_optimum));
      return run("stationary", st_o, f);
    }
    if (bifurcation->parsed()) {
      std::vector<std::pair<std::string, std::string>> f;
      if (bif_theta) f.emplace_back("bifurcation.theta", num(*bif_theta));
      if (kappa_min) f.emplace_back("bifurcation.kappa_min", num(*kappa_min));
      if (kappa_max) f.emplace_back("bifurcation.kappa_max", num(*kappa_max));
      if (steps) f.emplace_back("bifurcation.steps", std::to_string(*steps));
      return run("bifurcation", bif_o, f);
    }
    if (verify->parsed()) {
      std::vector<std::pair<std::string, std::string>> f;
      if (filter) f.emplace_back("verify.filter", *filter);
      return run("verify", ver_o, f);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
