#include "polygene/forward_sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>

#include "polygene/genotype.hpp"
#include "polygene/hypercube.hpp"

namespace polygene {

namespace {

std::uint64_t tail_mask(int loci) {
  const int tail = loci % 64;
  return tail == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << tail) - 1;
}

void fill_bernoulli(PopulationState& state, std::span<const double> p, Philox4x32& rng) {
  for (int i = 0; i < state.population(); ++i) {
    auto g = state.genome(i);
    std::fill(g.begin(), g.end(), 0);
    for (int l = 0; l < state.loci(); ++l) {
      if (rng.uniform() < p[l]) g[l / 64] |= std::uint64_t{1} << (l % 64);
    }
  }
}

}  // namespace

// --- PopulationState ---------------------------------------------------------

PopulationState::PopulationState(int population, int loci)
    : population_(population), loci_(loci), words_(words_for(loci)) {
  if (population < 1) throw std::invalid_argument("population size must be >= 1");
  if (loci < 1) throw std::invalid_argument("locus count must be >= 1");
  genomes_.assign(static_cast<std::size_t>(population) * words_, 0);
}

void PopulationState::set_allele(int i, int locus, int value) {
  if (i < 0 || i >= population_) throw std::out_of_range("genome index");
  if (locus < 0 || locus >= loci_) throw std::out_of_range("locus");
  if (value != 1 && value != -1) throw std::invalid_argument("allele must be -1 or +1");
  auto& w = genome(i)[locus / 64];
  const std::uint64_t bit = std::uint64_t{1} << (locus % 64);
  w = value == 1 ? (w | bit) : (w & ~bit);
}

std::vector<double> PopulationState::allele_frequencies() const {
  std::vector<std::int64_t> counts(loci_, 0);
  for (int i = 0; i < population_; ++i) {
    auto g = genome(i);
    for (int w = 0; w < words_; ++w) {
      for (std::uint64_t bits = g[w]; bits != 0; bits &= bits - 1) {
        ++counts[64 * w + std::countr_zero(bits)];
      }
    }
  }
  std::vector<double> p(loci_);
  for (int l = 0; l < loci_; ++l) p[l] = static_cast<double>(counts[l]) / population_;
  return p;
}

const char* InitialCondition::kind_name(Kind kind) noexcept {
  switch (kind) {
    case Kind::all_plus: return "all_plus";
    case Kind::all_minus: return "all_minus";
    case Kind::neutral_equilibrium: return "neutral_equilibrium";
    case Kind::explicit_frequencies: return "frequencies";
  }
  return "unknown";
}

void SimConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument(key + ": " + why);
  };
  if (population < 1) fail("sim.N", "must be >= 1");
  if (loci < 1) fail("sim.L", "must be >= 1");
  if (generations < 0) fail("sim.generations", "must be >= 0");
  if (stride < 1) fail("sim.stride", "must be >= 1");
  if (recombination.loci() != loci) fail("recomb", "model built for a different locus count");
  if (!(rho >= 0.0) || rho > population) fail("recomb.rho", "rho / N must lie in [0, 1]");
  if (mutation.plus > population || mutation.minus > population) {
    fail("mutation", "theta / N must not exceed 1");
  }
  if (initial.kind == InitialCondition::Kind::explicit_frequencies) {
    if (static_cast<int>(initial.frequencies.size()) != loci) {
      fail("sim.frequencies", "needs one frequency per locus");
    }
    for (double p : initial.frequencies) {
      if (!(p >= 0.0 && p <= 1.0)) fail("sim.frequencies", "values must lie in [0, 1]");
    }
  }
  if (initial.kind == InitialCondition::Kind::neutral_equilibrium && mutation.total() <= 0.0) {
    fail("sim.init", "neutral_equilibrium needs a positive mutation rate");
  }
  if (stats.histogram_bins < 1) fail("stats.bins", "must be >= 1");
  if (stats.ld_pairs < 0 || stats.le_triples < 0) fail("stats", "sample counts must be >= 0");
}

// --- statistics --------------------------------------------------------------

PopulationStats population_stats(const PopulationState& state, const StatOptions& options,
                                 Philox4x32& rng) {
  const int n = state.population();
  const int loci = state.loci();
  PopulationStats s;
  s.frequencies = state.allele_frequencies();

  s.histogram.assign(std::max(options.histogram_bins, 1), 0.0);
  const int bins = static_cast<int>(s.histogram.size());
  double het = 0.0;
  double mean_p = 0.0;
  for (double p : s.frequencies) {
    const int b = std::min(static_cast<int>(p * bins), bins - 1);
    s.histogram[b] += 1.0 / loci;
    mean_p += p;
    het += p * (1.0 - p);
  }
  s.mean_frequency = mean_p / loci;
  s.heterozygosity = 2.0 * het / loci;
  s.genetic_variance = 4.0 * het / loci;

  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = trait_of(state.genome(i), loci);
    sum += z;
    sum_sq += z * z;
  }
  s.trait_mean = sum / n;
  s.trait_variance = std::max(sum_sq / n - s.trait_mean * s.trait_mean, 0.0);

  auto plus = [&state](int i, int l) { return (state.genome(i)[l / 64] >> (l % 64)) & 1U; };

  if (loci >= 2 && (options.ld_pairs > 0 || options.full_ld_scan)) {
    std::vector<std::pair<int, int>> pairs;
    const std::int64_t total = static_cast<std::int64_t>(loci) * (loci - 1) / 2;
    if (options.full_ld_scan || total <= options.ld_pairs) {
      for (int a = 0; a < loci; ++a) {
        for (int b = a + 1; b < loci; ++b) pairs.emplace_back(a, b);
      }
    } else {
      std::set<std::pair<int, int>> seen;
      while (static_cast<int>(pairs.size()) < options.ld_pairs) {
        int a = static_cast<int>(rng.below(loci));
        int b = static_cast<int>(rng.below(loci - 1));
        if (b >= a) ++b;
        if (a > b) std::swap(a, b);
        if (seen.emplace(a, b).second) pairs.emplace_back(a, b);
      }
    }
    double abs_sum = 0.0;
    for (auto [a, b] : pairs) {
      std::int64_t both = 0;
      for (int i = 0; i < n; ++i) both += plus(i, a) & plus(i, b);
      const double d = static_cast<double>(both) / n - s.frequencies[a] * s.frequencies[b];
      s.ld.push_back({a, b, d});
      abs_sum += std::abs(d);
    }
    s.mean_abs_ld = abs_sum / static_cast<double>(pairs.size());
  }

  if (loci >= 3 && options.le_triples > 0) {
    const std::int64_t total = static_cast<std::int64_t>(loci) * (loci - 1) * (loci - 2) / 6;
    std::vector<std::tuple<int, int, int>> triples;
    if (total <= options.le_triples) {
      for (int a = 0; a < loci; ++a)
        for (int b = a + 1; b < loci; ++b)
          for (int c = b + 1; c < loci; ++c) triples.emplace_back(a, b, c);
    } else {
      std::set<std::tuple<int, int, int>> seen;
      while (static_cast<int>(triples.size()) < options.le_triples) {
        int t[3] = {static_cast<int>(rng.below(loci)), static_cast<int>(rng.below(loci)),
                    static_cast<int>(rng.below(loci))};
        std::sort(t, t + 3);
        if (t[0] == t[1] || t[1] == t[2]) continue;
        if (seen.emplace(t[0], t[1], t[2]).second) triples.emplace_back(t[0], t[1], t[2]);
      }
    }
    for (auto [a, b, c] : triples) {
      std::vector<double> table(8, 0.0);
      for (int i = 0; i < n; ++i) {
        table[plus(i, a) | (plus(i, b) << 1) | (plus(i, c) << 2)] += 1.0 / n;
      }
      double mass = 0.0;
      for (double v : table) mass += v;
      for (double& v : table) v /= mass;
      s.triples.push_back({a, b, c, le_deviation(HypercubeDistribution(3, std::move(table)))});
    }
  }
  return s;
}

// --- Simulator ---------------------------------------------------------------

Simulator::Simulator(SimConfig config)
    : config_(std::move(config)),
      state_(std::max(config_.population, 1), std::max(config_.loci, 1)),
      rng_(config_.seed, 0),
      stats_rng_(config_.seed, 1) {
  config_.validate();
  initialize();
}

Simulator::Simulator(SimConfig config, PopulationState initial)
    : config_(std::move(config)),
      state_(std::move(initial)),
      rng_(config_.seed, 0),
      stats_rng_(config_.seed, 1) {
  config_.validate();
  if (state_.population() != config_.population || state_.loci() != config_.loci) {
    throw std::invalid_argument("initial state does not match sim.N / sim.L");
  }
}

void Simulator::initialize() {
  auto& data = state_.data();
  switch (config_.initial.kind) {
    case InitialCondition::Kind::all_plus:
      for (int i = 0; i < state_.population(); ++i) {
        auto g = state_.genome(i);
        std::fill(g.begin(), g.end(), ~std::uint64_t{0});
        g.back() &= tail_mask(state_.loci());
      }
      break;
    case InitialCondition::Kind::all_minus:
      std::fill(data.begin(), data.end(), 0);
      break;
    case InitialCondition::Kind::explicit_frequencies:
      fill_bernoulli(state_, config_.initial.frequencies, rng_);
      break;
    case InitialCondition::Kind::neutral_equilibrium: {
      const std::vector<double> p(state_.loci(), config_.mutation.law_plus());
      fill_bernoulli(state_, p, rng_);
      const FitnessSpec neutral = FitnessSpec::linear(0.0);
      const std::int64_t burn_in = 10 * static_cast<std::int64_t>(config_.population);
      for (std::int64_t k = 0; k < burn_in; ++k) reproduce(neutral, rng_);
      break;
    }
  }
  state_.set_generation(0);
}

void Simulator::build_parent_sampler(const FitnessSpec& fitness) {
  const int n = state_.population();
  const int loci = state_.loci();
  weights_.resize(n);
  double max_w = -INFINITY;
  for (int i = 0; i < n; ++i) {
    weights_[i] = fitness(trait_of(state_.genome(i), loci));
    max_w = std::max(max_w, weights_[i]);
  }
  if (!std::isfinite(max_w)) throw std::runtime_error("non-finite fitness value");
  const double scale = static_cast<double>(loci) / n;
  uniform_parents_ = true;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (weights_[i] != max_w) uniform_parents_ = false;
    weights_[i] = std::exp(scale * (weights_[i] - max_w));
    total += weights_[i];
  }
  if (!std::isfinite(total) || !(total > 0.0)) throw std::runtime_error("non-finite fitness weights");
  if (uniform_parents_) return;

  // Vose alias table.
  alias_prob_.resize(n);
  alias_index_.assign(n, 0);
  std::vector<std::uint32_t> small, large;
  small.reserve(n);
  large.reserve(n);
  for (int i = 0; i < n; ++i) {
    alias_prob_[i] = weights_[i] * n / total;
    (alias_prob_[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    alias_index_[s] = l;
    alias_prob_[l] -= 1.0 - alias_prob_[s];
    if (alias_prob_[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (auto i : small) alias_prob_[i] = 1.0;
  for (auto i : large) alias_prob_[i] = 1.0;
}

int Simulator::draw_parent(Philox4x32& rng) {
  const auto i = static_cast<int>(rng.below(static_cast<std::uint64_t>(state_.population())));
  if (uniform_parents_) return i;
  return rng.uniform() < alias_prob_[i] ? i : static_cast<int>(alias_index_[i]);
}

void Simulator::mutate(Philox4x32& rng) {
  const double n = state_.population();
  const double q_plus = config_.mutation.plus / n;    // -1 -> +1
  const double q_minus = config_.mutation.minus / n;  // +1 -> -1
  const double q_max = std::max(q_plus, q_minus);
  if (q_max <= 0.0) return;
  const int loci = state_.loci();
  const int words = state_.words();
  const auto sites = static_cast<std::uint64_t>(state_.population()) * loci;
  // Candidate sites at rate q_max by geometric skipping, thinned to the
  // allele-specific rate.
  for (std::uint64_t site = rng.geometric(q_max); site < sites; site += 1 + rng.geometric(q_max)) {
    const auto i = site / loci;
    const auto l = static_cast<int>(site % loci);
    auto& w = next_[i * words + l / 64];
    const std::uint64_t bit = std::uint64_t{1} << (l % 64);
    const double q = (w & bit) ? q_minus : q_plus;
    if (q == q_max || rng.uniform() * q_max < q) w ^= bit;
  }
}

void Simulator::reproduce(const FitnessSpec& fitness, Philox4x32& rng) {
  const int n = state_.population();
  const int words = state_.words();
  const double recomb_prob = config_.rho / n;
  build_parent_sampler(fitness);
  next_.resize(state_.data().size());
  mask_.resize(words);
  const auto& current = state_.data();
  for (int k = 0; k < n; ++k) {
    std::uint64_t* child = next_.data() + static_cast<std::size_t>(k) * words;
    if (recomb_prob > 0.0 && rng.uniform() < recomb_prob) {
      const std::uint64_t* g1 = current.data() + static_cast<std::size_t>(draw_parent(rng)) * words;
      const std::uint64_t* g2 = current.data() + static_cast<std::size_t>(draw_parent(rng)) * words;
      config_.recombination.sample_mask(rng, mask_);
      for (int w = 0; w < words; ++w) child[w] = (g1[w] & mask_[w]) | (g2[w] & ~mask_[w]);
    } else {
      // Copying one of two fitness-drawn parents is the same as drawing one.
      const std::uint64_t* g = current.data() + static_cast<std::size_t>(draw_parent(rng)) * words;
      std::copy(g, g + words, child);
    }
  }
  mutate(rng);
  state_.data().swap(next_);
  state_.set_generation(state_.generation() + 1);
}

void Simulator::step(Philox4x32& rng) { reproduce(config_.fitness, rng); }

void Simulator::run(std::int64_t generations) {
  for (std::int64_t k = 0; k < generations; ++k) step();
}

PopulationState step_generation(const PopulationState& state, const SimConfig& config,
                                Philox4x32& rng) {
  Simulator sim(config, state);
  sim.step(rng);
  return sim.state();
}

TrajectoryRecord run_simulation(const SimConfig& config) {
  Simulator sim(config);
  TrajectoryRecord record;
  record.population = config.population;
  record.loci = config.loci;
  record.seed = config.seed;
  const double n = config.population;
  auto snapshot = [&] {
    const auto g = sim.state().generation();
    record.points.push_back({g, static_cast<double>(g) / n, sim.stats()});
  };
  snapshot();
  for (std::int64_t k = 1; k <= config.generations; ++k) {
    sim.step();
    if (k % config.stride == 0 || k == config.generations) snapshot();
  }
  return record;
}

}  // namespace polygene
