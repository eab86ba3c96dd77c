#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "polygene/config.hpp"
#include "polygene/verify.hpp"

namespace polygene {

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct ReplicateRecord {
  int index = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::map<std::string, double> summary;
};

struct RunManifest {
  std::string version;
  std::string mode;
  std::string rng;
  std::string seed_rule;
  std::uint64_t root_seed = 0;
  std::string config_checksum;
  std::map<std::string, std::string> config;
  std::vector<ReplicateRecord> replicates;
  std::vector<OutputFile> files;
  double wall_seconds = 0.0;
  bool passed = true;  // false only when a verify suite fails

  std::string to_json() const;
};

/// Run `cfg` and write its outputs plus manifest.json under cfg.output.
/// Replicate i runs with seed derive_seed(cfg.seed, i); with more than one
/// replicate its files go to rep_XXX/. Outputs are assembled in memory and
/// written atomically at the end, so a failed run leaves nothing behind.
/// A short human-readable summary goes to `log` when given.
RunManifest run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Report table of a verify run, as written to verify.csv.
std::string render_verify_report(const VerifyReport& report);

}  // namespace polygene
