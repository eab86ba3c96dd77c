#include "polygene/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "polygene/forward_sim.hpp"
#include "polygene/log.hpp"
#include "polygene/meanfield.hpp"
#include "polygene/output.hpp"
#include "polygene/parallel.hpp"
#include "polygene/rng.hpp"
#include "polygene/stationary.hpp"

namespace polygene {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct PendingFile {
  std::string path;
  std::string content;
};

struct ReplicateOutput {
  ReplicateRecord record;
  std::vector<PendingFile> files;
};

std::string replicate_prefix(const ExperimentConfig& cfg, int index) {
  if (cfg.replicates == 1) return "";
  char buf[16];
  std::snprintf(buf, sizeof buf, "rep_%03d/", index);
  return buf;
}

OutputHeader header_for(const ExperimentConfig& cfg, const std::string& kind,
                        std::optional<std::uint64_t> replicate_seed = std::nullopt) {
  return {kind, cfg.checksum(), cfg.seed, replicate_seed};
}

// --- simulate ----------------------------------------------------------------

void run_simulate(const ExperimentConfig& cfg, ReplicateOutput& out, const std::string& prefix) {
  SimConfig sim = cfg.sim;
  sim.seed = out.record.seed;
  const auto record = run_simulation(sim);

  CsvTable traj({"gen", "t", "trait_mean", "trait_var", "L_trait_var", "mean_p", "het", "sigma2",
                 "mean_abs_D", "mean_le_dev"});
  std::vector<std::string> freq_cols{"gen", "t"};
  for (int l = 0; l < sim.loci; ++l) freq_cols.push_back("p" + std::to_string(l));
  CsvTable freqs(freq_cols);

  for (const auto& pt : record.points) {
    const auto& s = pt.stats;
    double le = NAN;
    if (!s.triples.empty()) {
      le = 0.0;
      for (const auto& t : s.triples) le += t.le_deviation;
      le /= static_cast<double>(s.triples.size());
    }
    traj.add_row({static_cast<double>(pt.generation), pt.time, s.trait_mean, s.trait_variance,
                  sim.loci * s.trait_variance, s.mean_frequency, s.heterozygosity, s.genetic_variance,
                  s.mean_abs_ld, le});
    std::vector<double> row{static_cast<double>(pt.generation), pt.time};
    row.insert(row.end(), s.frequencies.begin(), s.frequencies.end());
    freqs.add_row(row);
  }
  const auto header = header_for(cfg, "trajectory", sim.seed);
  out.files.push_back({prefix + "trajectory.csv", traj.render(header)});
  auto fh = header;
  fh.kind = "allele frequencies";
  out.files.push_back({prefix + "freqs.csv", freqs.render(fh)});

  const auto& last = record.points.back().stats;
  out.record.summary["final_trait_mean"] = last.trait_mean;
  out.record.summary["final_mean_p"] = last.mean_frequency;
  out.record.summary["final_sigma2"] = last.genetic_variance;
  if (sim.rho > 1.0) {
    out.record.summary["strong_recombination_ratio"] = sim.recombination.strong_recombination_ratio(sim.rho);
  }
}

// --- meanfield ---------------------------------------------------------------

void run_meanfield(const ExperimentConfig& cfg, ReplicateOutput& out, const std::string& prefix) {
  MeanFieldConfig mf = cfg.meanfield;
  mf.seed = out.record.seed;
  const bool grid = cfg.meanfield_solver == "grid";
  MeanFieldSeries series;
  std::vector<GridDensity> snapshots;
  if (grid) {
    auto run = evolve_density(mf);
    series = std::move(run.series);
    snapshots = std::move(run.snapshots);
    out.record.summary["max_mass_drift"] = run.max_mass_drift;
  } else {
    auto run = evolve_particles(mf);
    series = std::move(run.series);
    out.record.summary["excursion_fraction"] = run.excursion_fraction;
  }

  // Residual at interior samples with t >= t_min; blank elsewhere.
  std::vector<double> residual(series.samples.size(), NAN);
  double num = 0.0, den = 0.0;
  if (series.samples.size() >= 3) {
    const auto lr = lande_residual(series, mf.fitness, mf.mutation);
    for (std::size_t k = 0; k < lr.residual.size(); ++k) {
      if (lr.time[k] < cfg.t_min) continue;
      residual[k + 1] = lr.residual[k];
      num += lr.residual[k] * lr.residual[k];
      den += lr.derivative[k] * lr.derivative[k];
    }
  }
  out.record.summary["lande_relative_l2"] = den > 0.0 ? std::sqrt(num / den) : NAN;

  CsvTable table({"t", "mean_trait", "sbar", "sigma2", "lande_residual"});
  for (std::size_t k = 0; k < series.samples.size(); ++k) {
    const auto& s = series.samples[k];
    table.add_row({s.time, s.trait_mean, s.sbar, s.sigma2, residual[k]});
  }
  out.files.push_back({prefix + "meanfield.csv", table.render(header_for(cfg, "meanfield", mf.seed))});

  for (const auto& snap : snapshots) {
    CsvTable d({"x", "density"});
    for (int i = 0; i < snap.cells(); ++i) d.add_row({snap.center(i), snap.values()[i]});
    char name[64];
    std::snprintf(name, sizeof name, "density_t%.6f.csv", snap.time());
    out.files.push_back({prefix + name, d.render(header_for(cfg, "density", mf.seed))});
  }
  if (!series.samples.empty()) {
    out.record.summary["final_mean_trait"] = series.samples.back().trait_mean;
    out.record.summary["final_sigma2"] = series.samples.back().sigma2;
  }
}

// --- stationary / bifurcation ------------------------------------------------

void run_stationary(const ExperimentConfig& cfg, ReplicateOutput& out, std::ostream* log) {
  const auto& p = cfg.stationary;
  const auto roots = fixed_points(p.selection, p.theta, p.options);
  const double kc = p.theta.plus == p.theta.minus ? kappa_c(p.theta.plus) : NAN;
  CsvTable table({"y", "branch", "slope"});
  for (const auto& r : roots) table.add_row({r.y, r.branch, r.slope});
  auto header = header_for(cfg, "stationary");
  out.files.push_back({"stationary.csv", table.render(header)});
  out.record.summary["roots"] = static_cast<double>(roots.size());
  out.record.summary["kappa_c"] = kc;
  if (log) {
    *log << "kappa = " << format_number(p.selection.kappa) << ", theta = (" << format_number(p.theta.plus)
         << ", " << format_number(p.theta.minus) << "), kappa_c = " << format_number(kc) << '\n';
    *log << roots.size() << (roots.size() == 1 ? " root" : " roots") << '\n';
    for (const auto& r : roots) {
      *log << "  y* = " << format_number(r.y) << "  branch <Pi_y*, 2Id-1> = " << format_number(r.branch)
           << "  chi'(y*) = " << format_number(r.slope) << '\n';
    }
  }
}

void run_bifurcation(const ExperimentConfig& cfg, ReplicateOutput& out, std::ostream* log) {
  const auto& b = cfg.bifurcation;
  const auto scan = bifurcation_scan(b.theta, b.kappa_min, b.kappa_max, b.steps, b.optimum, b.options);
  CsvTable table({"kappa", "roots", "branch_low", "branch_mid", "branch_high", "y_low", "y_mid", "y_high"});
  for (const auto& pt : scan) {
    double branch[3] = {NAN, NAN, NAN}, y[3] = {NAN, NAN, NAN};
    const auto& r = pt.roots;
    if (!r.empty()) {
      const std::size_t hi = r.size() - 1;
      if (r.size() == 1) {
        branch[1] = r[0].branch;
        y[1] = r[0].y;
      } else {
        branch[0] = r[0].branch;
        y[0] = r[0].y;
        branch[2] = r[hi].branch;
        y[2] = r[hi].y;
        if (r.size() % 2 == 1) {
          branch[1] = r[hi / 2].branch;
          y[1] = r[hi / 2].y;
        }
      }
    }
    table.add_row({pt.kappa, static_cast<double>(r.size()), branch[0], branch[1], branch[2], y[0], y[1], y[2]});
  }
  out.files.push_back({"bifurcation.csv", table.render(header_for(cfg, "bifurcation"))});
  const auto window = multiplicity_window(scan);
  out.record.summary["window_lower"] = window.lower;
  out.record.summary["window_upper"] = window.upper;
  if (b.theta.plus == b.theta.minus) out.record.summary["kappa_c"] = kappa_c(b.theta.plus);
  if (log) {
    *log << "scanned " << scan.size() << " kappa values in [" << format_number(b.kappa_min) << ", "
         << format_number(b.kappa_max) << "]\n";
    if (std::isnan(window.lower)) {
      *log << "no multi-root window found\n";
    } else {
      *log << "three or more roots for kappa in [" << format_number(window.lower) << ", "
           << format_number(window.upper) << "]\n";
    }
  }
}

void run_verify_mode(const ExperimentConfig& cfg, ReplicateOutput& out, bool& passed, std::ostream* log) {
  const auto report = run_verify(cfg.verify_filter, cfg.seed);
  CsvTable table({"suite", "check", "observed", "expected", "tolerance", "verdict"});
  for (const auto& e : report.entries) {
    std::string check = e.check;
    for (char& c : check) {
      if (c == ',') c = ';';
    }
    table.add_text_row({e.suite, check, format_number(e.observed), format_number(e.expected),
                        format_number(e.tolerance), e.pass ? "pass" : "FAIL"});
  }
  out.files.push_back({"verify.csv", table.render(header_for(cfg, "verify report"))});
  passed = report.passed() && !report.entries.empty();
  int failures = 0;
  for (const auto& e : report.entries) failures += e.pass ? 0 : 1;
  out.record.summary["checks"] = static_cast<double>(report.entries.size());
  out.record.summary["failures"] = failures;
  if (log) *log << render_verify_report(report);
}

}  // namespace

std::string render_verify_report(const VerifyReport& report) {
  std::string out;
  int failures = 0;
  for (const auto& e : report.entries) {
    char line[512];
    std::snprintf(line, sizeof line, "%-5s %-14s %-62s observed=%-12.6g tol=%.3g\n", e.pass ? "pass" : "FAIL",
                  e.suite.c_str(), e.check.c_str(), e.observed, e.tolerance);
    out += line;
    failures += e.pass ? 0 : 1;
  }
  out += std::to_string(report.entries.size()) + " checks in " + std::to_string(report.suites.size()) +
         " suites, " + std::to_string(failures) + " failed\n";
  return out;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["toolkit"] = "polygene";
  j["version"] = version;
  j["mode"] = mode;
  j["rng"] = {{"generator", rng}, {"seed_rule", seed_rule}};
  j["root_seed"] = root_seed;
  j["config_sha256"] = config_checksum;
  j["config"] = config;
  auto reps = nlohmann::ordered_json::array();
  for (const auto& r : replicates) {
    nlohmann::ordered_json e;
    e["index"] = r.index;
    e["seed"] = r.seed;
    e["wall_seconds"] = r.wall_seconds;
    nlohmann::ordered_json s = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.summary) {
      if (std::isfinite(v)) s[k] = v;
      else s[k] = nullptr;
    }
    e["summary"] = s;
    reps.push_back(e);
  }
  j["replicates"] = reps;
  auto files_json = nlohmann::ordered_json::array();
  for (const auto& f : this->files) files_json.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["files"] = files_json;
  j["wall_seconds"] = wall_seconds;
  j["passed"] = passed;
  return j.dump(2) + "\n";
}

RunManifest run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  const auto start = Clock::now();
  RunManifest manifest;
  manifest.version = toolkit_version();
  manifest.mode = mode_name(cfg.mode);
  manifest.rng = Philox4x32::kName;
  manifest.seed_rule = "seed_i = splitmix64(root ^ splitmix64(i)); stream 0 dynamics, stream 1 statistics";
  manifest.root_seed = cfg.seed;
  manifest.config_checksum = cfg.checksum();
  manifest.config = cfg.echo;

  const bool stochastic = cfg.mode == Mode::simulate || cfg.mode == Mode::meanfield;
  const int replicates = stochastic ? cfg.replicates : 1;
  if (!stochastic && cfg.replicates > 1) {
    warn(std::string(mode_name(cfg.mode)) + " is deterministic; running a single replicate");
  }

  std::vector<ReplicateOutput> results(static_cast<std::size_t>(replicates));
  bool passed = true;
  auto run_one = [&](std::size_t i) {
    const auto t0 = Clock::now();
    auto& out = results[i];
    out.record.index = static_cast<int>(i);
    out.record.seed = derive_seed(cfg.seed, i);
    const auto prefix = replicate_prefix(cfg, static_cast<int>(i));
    switch (cfg.mode) {
      case Mode::simulate: run_simulate(cfg, out, prefix); break;
      case Mode::meanfield: run_meanfield(cfg, out, prefix); break;
      case Mode::stationary: run_stationary(cfg, out, log); break;
      case Mode::bifurcation: run_bifurcation(cfg, out, log); break;
      case Mode::verify: run_verify_mode(cfg, out, passed, log); break;
    }
    out.record.wall_seconds = seconds_since(t0);
  };
  // The particle solver parallelizes internally; forward-sim replicates are
  // independent single-threaded runs.
  if (cfg.mode == Mode::simulate) {
    parallel_for(results.size(), run_one);
  } else {
    for (std::size_t i = 0; i < results.size(); ++i) run_one(i);
  }

  std::vector<PendingFile> files;
  if (cfg.mode == Mode::simulate || cfg.mode == Mode::meanfield) {
    nlohmann::ordered_json echo;
    echo["toolkit"] = "polygene";
    echo["version"] = manifest.version;
    echo["mode"] = manifest.mode;
    echo["seed"] = cfg.seed;
    echo["config_sha256"] = manifest.config_checksum;
    echo["config"] = cfg.echo;
    files.push_back({"config.echo.json", echo.dump(2) + "\n"});
  }
  for (auto& r : results) {
    manifest.replicates.push_back(r.record);
    for (auto& f : r.files) files.push_back(std::move(f));
  }

  // Commit: every file is written atomically; on failure the files already
  // placed by this run are removed again.
  std::vector<std::filesystem::path> written;
  try {
    std::filesystem::create_directories(cfg.output);
    for (const auto& f : files) {
      const auto path = cfg.output / f.path;
      write_file_atomic(path, f.content);
      written.push_back(path);
      manifest.files.push_back({f.path, sha256_hex(f.content), f.content.size()});
    }
    manifest.passed = passed;
    manifest.wall_seconds = seconds_since(start);
    write_file_atomic(cfg.output / "manifest.json", manifest.to_json());
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) std::filesystem::remove(p, ec);
    throw;
  }
  return manifest;
}

}  // namespace polygene
