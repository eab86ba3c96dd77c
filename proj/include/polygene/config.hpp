#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "polygene/forward_sim.hpp"
#include "polygene/meanfield.hpp"
#include "polygene/stationary.hpp"

namespace polygene {

/// Invalid configuration; `key()` is the dotted key at fault.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Flat `key = value` text. `#` starts a comment, blank lines are ignored,
/// later assignments override earlier ones.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& origin = "<config>");
  static KeyValues load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const;

  /// Keys that were never read; used to reject typos.
  std::vector<std::string> unread() const;

  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> read_;
};

enum class Mode { simulate, meanfield, stationary, bifurcation, verify };
const char* mode_name(Mode mode) noexcept;
Mode parse_mode(const std::string& name);

struct StationaryParams {
  MutationRates theta{0.6, 0.6};
  SymmetricSelection selection;
  FixedPointOptions options;
};

struct BifurcationParams {
  MutationRates theta{0.6, 0.6};
  double kappa_min = -3.0;
  double kappa_max = 0.0;
  int steps = 31;
  double optimum = 0.0;
  FixedPointOptions options;
};

struct ExperimentConfig {
  Mode mode = Mode::simulate;
  std::uint64_t seed = 1;
  int replicates = 1;
  std::filesystem::path output = "polygene_out";
  SimConfig sim;
  MeanFieldConfig meanfield;
  std::string meanfield_solver = "particles";  // particles | grid
  double t_min = 0.0;                          // start of the Lande residual window
  StationaryParams stationary;
  BifurcationParams bifurcation;
  std::string verify_filter;

  /// Resolved key/value pairs, the basis of the config echo and checksum.
  std::map<std::string, std::string> echo;
  /// sha256 of the canonical `key=value` lines of `echo`.
  std::string checksum() const;
};

/// Resolve a full configuration. Relative file paths inside the config are
/// taken relative to `base`. Throws ConfigError.
ExperimentConfig resolve_config(const KeyValues& kv, const std::filesystem::path& base = ".");

}  // namespace polygene
