#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "polygene/fitness.hpp"
#include "polygene/recombination.hpp"
#include "polygene/rng.hpp"

namespace polygene {

/// N packed haploid genomes of L loci, stored contiguously.
class PopulationState {
 public:
  PopulationState(int population, int loci);

  int population() const noexcept { return population_; }
  int loci() const noexcept { return loci_; }
  int words() const noexcept { return words_; }
  std::int64_t generation() const noexcept { return generation_; }
  void set_generation(std::int64_t g) noexcept { generation_ = g; }

  std::span<std::uint64_t> genome(int i) noexcept {
    return {genomes_.data() + static_cast<std::size_t>(i) * words_, static_cast<std::size_t>(words_)};
  }
  std::span<const std::uint64_t> genome(int i) const noexcept {
    return {genomes_.data() + static_cast<std::size_t>(i) * words_, static_cast<std::size_t>(words_)};
  }
  int allele(int i, int locus) const noexcept {
    return ((genome(i)[locus / 64] >> (locus % 64)) & 1U) ? 1 : -1;
  }
  void set_allele(int i, int locus, int value);

  std::vector<std::uint64_t>& data() noexcept { return genomes_; }
  const std::vector<std::uint64_t>& data() const noexcept { return genomes_; }

  std::vector<double> allele_frequencies() const;

  bool operator==(const PopulationState&) const = default;

 private:
  int population_;
  int loci_;
  int words_;
  std::int64_t generation_ = 0;
  std::vector<std::uint64_t> genomes_;
};

struct InitialCondition {
  enum class Kind { all_plus, all_minus, neutral_equilibrium, explicit_frequencies };
  Kind kind = Kind::all_plus;
  std::vector<double> frequencies;  // explicit_frequencies only

  static InitialCondition all_plus() { return {Kind::all_plus, {}}; }
  static InitialCondition all_minus() { return {Kind::all_minus, {}}; }
  static InitialCondition neutral_equilibrium() { return {Kind::neutral_equilibrium, {}}; }
  static InitialCondition explicit_frequencies(std::vector<double> p) {
    return {Kind::explicit_frequencies, std::move(p)};
  }
  static const char* kind_name(Kind kind) noexcept;
};

struct StatOptions {
  int histogram_bins = 20;
  int ld_pairs = 200;       // sampled pairs; every pair if the genome has fewer
  int le_triples = 100;     // sampled triples for LE-deviation norms; 0 disables
  bool full_ld_scan = false;
};

struct SimConfig {
  int population = 100;
  int loci = 10;
  std::int64_t generations = 100;
  FitnessSpec fitness;
  MutationRates mutation;
  RecombinationModel recombination = RecombinationModel::free(10);
  double rho = 0.0;
  InitialCondition initial;
  std::uint64_t seed = 1;
  std::int64_t stride = 1;
  StatOptions stats;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct LdSample {
  int locus1, locus2;
  double d;
};

struct TripleSample {
  int locus1, locus2, locus3;
  double le_deviation;  // ||x^A - pi(x^A)||_2 of the empirical 3-locus table
};

struct PopulationStats {
  std::vector<double> frequencies;  // p^l
  std::vector<double> histogram;    // allelic measure mu_x on equal bins of [0,1], sums to 1
  double trait_mean = 0.0;
  double trait_variance = 0.0;      // population variance of Z over the N genomes
  double mean_frequency = 0.0;
  double heterozygosity = 0.0;      // mean of 2 p (1 - p)
  double genetic_variance = 0.0;    // 4 mean of p (1 - p)
  double mean_abs_ld = 0.0;
  std::vector<LdSample> ld;
  std::vector<TripleSample> triples;
};

/// `rng` drives pair/triple sampling only; the bundle is invariant under
/// permutations of the genomes.
PopulationStats population_stats(const PopulationState& state, const StatOptions& options,
                                 Philox4x32& rng);

struct TrajectoryPoint {
  std::int64_t generation;
  double time;  // generation / N
  PopulationStats stats;
};

struct TrajectoryRecord {
  int population = 0;
  int loci = 0;
  std::uint64_t seed = 0;
  std::vector<TrajectoryPoint> points;
};

/// One Wright-Fisher replicate. Stream 0 of the seed drives reproduction,
/// recombination and mutation; stream 1 drives statistics sampling.
class Simulator {
 public:
  explicit Simulator(SimConfig config);
  Simulator(SimConfig config, PopulationState initial);

  const PopulationState& state() const noexcept { return state_; }
  const SimConfig& config() const noexcept { return config_; }

  void step() { step(rng_); }
  /// Advance one generation drawing randomness from `rng` instead of the owned stream.
  void step(Philox4x32& rng);
  void run(std::int64_t generations);

  PopulationStats stats() { return population_stats(state_, config_.stats, stats_rng_); }

 private:
  void initialize();
  void build_parent_sampler(const FitnessSpec& fitness);
  int draw_parent(Philox4x32& rng);
  void mutate(Philox4x32& rng);
  void reproduce(const FitnessSpec& fitness, Philox4x32& rng);

  SimConfig config_;
  PopulationState state_;
  Philox4x32 rng_;
  Philox4x32 stats_rng_;
  std::vector<std::uint64_t> next_;
  std::vector<std::uint64_t> mask_;
  std::vector<double> weights_;
  std::vector<double> alias_prob_;
  std::vector<std::uint32_t> alias_index_;
  bool uniform_parents_ = true;
};

/// step_generation as a free function on an explicit state.
PopulationState step_generation(const PopulationState& state, const SimConfig& config,
                                Philox4x32& rng);

TrajectoryRecord run_simulation(const SimConfig& config);

}  // namespace polygene
