#include "polygene/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string_view>

#include "polygene/output.hpp"

namespace polygene {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
    throw ConfigError(key, "expected a number, got '" + raw + "'");
  }
  return x;
}

std::int64_t parse_integer(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  std::int64_t x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec == std::errc() && ptr == v.data() + v.size()) return x;
  // Accept integral values written in floating notation, e.g. 1e5.
  const double d = parse_double(key, raw);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) {
    throw ConfigError(key, "expected an integer, got '" + raw + "'");
  }
  return static_cast<std::int64_t>(d);
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number), "expected key = value");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(number), "empty key");
    kv.values_[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

std::string KeyValues::text(const std::string& key, const std::string& fallback) const {
  read_.insert(key);
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValues::number(const std::string& key, double fallback) const {
  read_.insert(key);
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(key, it->second);
}

std::int64_t KeyValues::integer(const std::string& key, std::int64_t fallback) const {
  read_.insert(key);
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_integer(key, it->second);
}

std::uint64_t KeyValues::unsigned_integer(const std::string& key, std::uint64_t fallback) const {
  read_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string v = trim(it->second);
  std::uint64_t x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key, "expected an unsigned 64-bit integer, got '" + it->second + "'");
  }
  return x;
}

bool KeyValues::boolean(const std::string& key, bool fallback) const {
  read_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string v = trim(it->second);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + it->second + "'");
}

std::vector<double> KeyValues::numbers(const std::string& key) const {
  read_.insert(key);
  std::vector<double> out;
  auto it = values_.find(key);
  if (it == values_.end()) return out;
  std::string item;
  std::istringstream in(it->second);
  while (std::getline(in, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_double(key, item));
  }
  return out;
}

std::vector<std::string> KeyValues::unread() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!read_.count(k)) out.push_back(k);
  }
  return out;
}

const char* mode_name(Mode mode) noexcept {
  switch (mode) {
    case Mode::simulate: return "simulate";
    case Mode::meanfield: return "meanfield";
    case Mode::stationary: return "stationary";
    case Mode::bifurcation: return "bifurcation";
    case Mode::verify: return "verify";
  }
  return "unknown";
}

Mode parse_mode(const std::string& name) {
  for (Mode m : {Mode::simulate, Mode::meanfield, Mode::stationary, Mode::bifurcation, Mode::verify}) {
    if (name == mode_name(m)) return m;
  }
  throw ConfigError("mode", "unknown mode '" + name + "'");
}

std::string ExperimentConfig::checksum() const {
  std::string canonical;
  for (const auto& [k, v] : echo) canonical += k + "=" + v + "\n";
  return sha256_hex(canonical);
}

namespace {

// Reads keys through `kv` and records the effective value of each in `echo`.
class Resolver {
 public:
  Resolver(const KeyValues& kv, std::map<std::string, std::string>& echo) : kv_(kv), echo_(echo) {}

  double number(const std::string& key, double fallback) {
    const double v = kv_.number(key, fallback);
    echo_[key] = format_number(v);
    return v;
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const auto v = kv_.integer(key, fallback);
    echo_[key] = std::to_string(v);
    return v;
  }
  int small_integer(const std::string& key, int fallback) {
    const auto v = integer(key, fallback);
    if (v < -2147483647LL || v > 2147483647LL) throw ConfigError(key, "out of range");
    return static_cast<int>(v);
  }
  std::string text(const std::string& key, const std::string& fallback) {
    auto v = kv_.text(key, fallback);
    echo_[key] = v;
    return v;
  }
  bool boolean(const std::string& key, bool fallback) {
    const bool v = kv_.boolean(key, fallback);
    echo_[key] = v ? "true" : "false";
    return v;
  }
  std::vector<double> numbers(const std::string& key) {
    auto v = kv_.numbers(key);
    if (kv_.has(key)) {
      std::string joined;
      for (std::size_t i = 0; i < v.size(); ++i) joined += (i ? "," : "") + format_number(v[i]);
      echo_[key] = joined;
    }
    return v;
  }
  bool has(const std::string& key) const { return kv_.has(key); }

 private:
  const KeyValues& kv_;
  std::map<std::string, std::string>& echo_;
};

FitnessSpec read_fitness(Resolver& r) {
  const auto kind = r.text("fitness.kind", "quadratic");
  if (kind == "linear") return FitnessSpec::linear(r.number("fitness.beta", 0.0));
  if (kind == "quadratic") {
    const double kappa = r.number("fitness.kappa", 0.0);
    return FitnessSpec::quadratic(kappa, r.number("fitness.optimum", 0.0));
  }
  throw ConfigError("fitness.kind", "expected linear or quadratic, got '" + kind + "'");
}

MutationRates read_mutation(Resolver& r, const std::string& prefix, double fallback) {
  double plus = fallback, minus = fallback;
  if (r.has(prefix + "theta")) plus = minus = r.number(prefix + "theta", fallback);
  plus = r.number(prefix + "theta_plus", plus);
  minus = r.number(prefix + "theta_minus", minus);
  try {
    return MutationRates(plus, minus);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(prefix + "theta", e.what());
  }
}

RecombinationModel read_recombination(Resolver& r, int loci, const std::filesystem::path& base) {
  const auto kind = r.text("recomb.kind", "free");
  TabulatedDensity density = TabulatedDensity::uniform();
  const auto file = r.text("recomb.density", "uniform");
  if (file != "uniform") {
    std::filesystem::path p(file);
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p)) throw ConfigError("recomb.density", "file not found: " + p.string());
    try {
      density = TabulatedDensity::from_file(p);
    } catch (const std::exception& e) {
      throw ConfigError("recomb.density", e.what());
    }
  }
  if (kind == "free") return RecombinationModel::free(loci);
  if (kind == "single") return RecombinationModel::single_crossover(loci, density);
  if (kind == "poisson") {
    const double lambda = r.number("recomb.lambda", 1.0);
    if (!(lambda > 0.0)) throw ConfigError("recomb.lambda", "must be > 0");
    return RecombinationModel::poisson_crossover(loci, lambda, density);
  }
  throw ConfigError("recomb.kind", "expected free, single or poisson, got '" + kind + "'");
}

InitialCondition read_initial(Resolver& r) {
  const auto kind = r.text("sim.init", "all_plus");
  if (kind == "all_plus") return InitialCondition::all_plus();
  if (kind == "all_minus") return InitialCondition::all_minus();
  if (kind == "neutral" || kind == "neutral_equilibrium") return InitialCondition::neutral_equilibrium();
  if (kind == "frequencies") {
    return InitialCondition::explicit_frequencies(r.numbers("sim.frequencies"));
  }
  throw ConfigError("sim.init", "expected all_plus, all_minus, neutral or frequencies, got '" + kind + "'");
}

InitialLaw read_initial_law(Resolver& r) {
  const auto kind = r.text("meanfield.init", "point");
  if (kind == "point") return InitialLaw::at(r.number("meanfield.init.x", 0.5));
  if (kind == "stationary") return InitialLaw::stationary(r.number("meanfield.init.y", 0.0));
  if (kind == "histogram") return InitialLaw::from_histogram(r.numbers("meanfield.init.histogram"));
  throw ConfigError("meanfield.init", "expected point, stationary or histogram, got '" + kind + "'");
}

// Maps std::invalid_argument("key: why") from module validators to ConfigError.
template <class F>
void validated(F&& check) {
  try {
    check();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const auto colon = what.find(": ");
    if (colon != std::string::npos && what.find(' ') > colon) {
      throw ConfigError(what.substr(0, colon), what.substr(colon + 2));
    }
    throw ConfigError("config", what);
  }
}

FixedPointOptions read_roots(Resolver& r, const std::string& prefix) {
  FixedPointOptions o;
  o.y_max = r.number(prefix + "y_max", o.y_max);
  o.grid_n = r.small_integer(prefix + "grid", o.grid_n);
  if (!(o.y_max > 0.0)) throw ConfigError(prefix + "y_max", "must be > 0");
  if (o.grid_n < 8) throw ConfigError(prefix + "grid", "must be >= 8");
  return o;
}

constexpr std::string_view kKnownKeys[] = {
    "mode", "seed", "replicates", "out",
    "sim.N", "sim.L", "sim.generations", "sim.stride", "sim.init", "sim.frequencies",
    "recomb.kind", "recomb.rho", "recomb.lambda", "recomb.density",
    "fitness.kind", "fitness.beta", "fitness.kappa", "fitness.optimum",
    "mutation.theta", "mutation.theta_plus", "mutation.theta_minus",
    "stats.bins", "stats.ld_pairs", "stats.le_triples", "stats.full_ld",
    "meanfield.solver", "meanfield.dt", "meanfield.T", "meanfield.M", "meanfield.K",
    "meanfield.init", "meanfield.init.x", "meanfield.init.y", "meanfield.init.histogram",
    "meanfield.record_every", "meanfield.snapshot_every", "meanfield.t_min",
    "stationary.theta", "stationary.theta_plus", "stationary.theta_minus", "stationary.kappa",
    "stationary.optimum", "stationary.y_max", "stationary.grid",
    "bifurcation.theta", "bifurcation.theta_plus", "bifurcation.theta_minus",
    "bifurcation.kappa_min", "bifurcation.kappa_max", "bifurcation.steps", "bifurcation.optimum",
    "bifurcation.y_max", "bifurcation.grid",
    "verify.filter",
};

}  // namespace

ExperimentConfig resolve_config(const KeyValues& kv, const std::filesystem::path& base) {
  ExperimentConfig cfg;
  Resolver r(kv, cfg.echo);
  cfg.mode = parse_mode(r.text("mode", "simulate"));
  cfg.seed = kv.unsigned_integer("seed", 1);
  cfg.echo["seed"] = std::to_string(cfg.seed);
  cfg.replicates = r.small_integer("replicates", 1);
  if (cfg.replicates < 1) throw ConfigError("replicates", "must be >= 1");
  cfg.output = kv.text("out", cfg.output.string());  // not part of the checksum

  switch (cfg.mode) {
    case Mode::simulate: {
      SimConfig& s = cfg.sim;
      s.population = r.small_integer("sim.N", s.population);
      s.loci = r.small_integer("sim.L", s.loci);
      s.generations = r.integer("sim.generations", s.generations);
      s.stride = r.integer("sim.stride", s.stride);
      if (s.loci < 1) throw ConfigError("sim.L", "must be >= 1");
      s.initial = read_initial(r);
      s.fitness = read_fitness(r);
      s.mutation = read_mutation(r, "mutation.", 0.0);
      s.recombination = read_recombination(r, s.loci, base);
      s.rho = r.number("recomb.rho", 0.0);
      s.stats.histogram_bins = r.small_integer("stats.bins", s.stats.histogram_bins);
      s.stats.ld_pairs = r.small_integer("stats.ld_pairs", s.stats.ld_pairs);
      s.stats.le_triples = r.small_integer("stats.le_triples", s.stats.le_triples);
      s.stats.full_ld_scan = r.boolean("stats.full_ld", s.stats.full_ld_scan);
      s.seed = cfg.seed;
      validated([&] { s.validate(); });
      break;
    }
    case Mode::meanfield: {
      MeanFieldConfig& m = cfg.meanfield;
      cfg.meanfield_solver = r.text("meanfield.solver", "particles");
      if (cfg.meanfield_solver != "particles" && cfg.meanfield_solver != "grid") {
        throw ConfigError("meanfield.solver", "expected particles or grid");
      }
      const bool grid = cfg.meanfield_solver == "grid";
      m.fitness = read_fitness(r);
      m.mutation = read_mutation(r, "mutation.", 0.0);
      m.dt = r.number("meanfield.dt", grid ? 1e-4 : 1e-3);
      m.horizon = r.number("meanfield.T", 1.0);
      m.particles = r.small_integer("meanfield.M", m.particles);
      m.cells = r.small_integer("meanfield.K", m.cells);
      m.initial = read_initial_law(r);
      m.record_every = r.small_integer("meanfield.record_every", grid ? 100 : 10);
      m.snapshot_every = r.small_integer("meanfield.snapshot_every", 0);
      cfg.t_min = r.number("meanfield.t_min", 0.0);
      if (!(cfg.t_min >= 0.0)) throw ConfigError("meanfield.t_min", "must be >= 0");
      m.seed = cfg.seed;
      validated([&] { m.validate(); });
      break;
    }
    case Mode::stationary: {
      StationaryParams& p = cfg.stationary;
      p.theta = read_mutation(r, "stationary.", 0.6);
      p.selection.kappa = r.number("stationary.kappa", 0.0);
      p.selection.optimum = r.number("stationary.optimum", 0.0);
      p.options = read_roots(r, "stationary.");
      if (!(p.theta.plus > 0.0 && p.theta.minus > 0.0)) {
        throw ConfigError("stationary.theta", "needs theta+ > 0 and theta- > 0");
      }
      break;
    }
    case Mode::bifurcation: {
      BifurcationParams& b = cfg.bifurcation;
      b.theta = read_mutation(r, "bifurcation.", 0.6);
      b.kappa_min = r.number("bifurcation.kappa_min", b.kappa_min);
      b.kappa_max = r.number("bifurcation.kappa_max", b.kappa_max);
      b.steps = r.small_integer("bifurcation.steps", b.steps);
      b.optimum = r.number("bifurcation.optimum", b.optimum);
      b.options = read_roots(r, "bifurcation.");
      if (!(b.theta.plus > 0.0 && b.theta.minus > 0.0)) {
        throw ConfigError("bifurcation.theta", "needs theta+ > 0 and theta- > 0");
      }
      if (b.steps < 1) throw ConfigError("bifurcation.steps", "must be >= 1");
      if (!(b.kappa_min <= b.kappa_max)) throw ConfigError("bifurcation.kappa_min", "must not exceed kappa_max");
      break;
    }
    case Mode::verify:
      cfg.verify_filter = r.text("verify.filter", "");
      break;
  }

  // Keys belonging to other modes are ignored, anything else is a typo.
  for (const auto& key : kv.unread()) {
    if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) == std::end(kKnownKeys)) {
      throw ConfigError(key, "unknown key");
    }
  }
  return cfg;
}

}  // namespace polygene
