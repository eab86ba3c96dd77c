#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "polygene/fitness.hpp"
#include "polygene/rng.hpp"

namespace polygene {

/// sbar = 2 U'(m) with m = <measure, 2Id - 1>.
double sbar_from_trait(double trait_mean, const FitnessSpec& spec) noexcept;
/// sbar of the empirical measure of `particles`.
double sbar(std::span<const double> particles, const FitnessSpec& spec) noexcept;

/// 4 <measure, Id (1 - Id)> of the empirical measure.
double genetic_variance(std::span<const double> particles) noexcept;

/// Cell-averaged density on K equal cells of [0, 1].
class GridDensity {
 public:
  GridDensity(std::vector<double> cell_averages, double time = 0.0);

  /// Cell averages of the law with distribution function `cdf`.
  template <class Cdf>
  static GridDensity from_cdf(int cells, Cdf&& cdf) {
    std::vector<double> v(cells);
    double prev = cdf(0.0);
    for (int i = 0; i < cells; ++i) {
      const double next = cdf(static_cast<double>(i + 1) / cells);
      v[i] = (next - prev) * cells;
      prev = next;
    }
    return GridDensity(std::move(v));
  }
  static GridDensity point_mass(int cells, double x);

  int cells() const noexcept { return static_cast<int>(values_.size()); }
  double width() const noexcept { return 1.0 / values_.size(); }
  double center(int i) const noexcept { return (i + 0.5) * width(); }
  double time() const noexcept { return time_; }
  void set_time(double t) noexcept { time_ = t; }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& data() noexcept { return values_; }

  double mass() const noexcept;
  double mean() const noexcept;
  double trait_mean() const noexcept { return 2.0 * mean() - 1.0; }
  double genetic_variance() const noexcept;
  /// Integral of |u - v| between two grids of equal size.
  double l1_distance(const GridDensity& other) const;

 private:
  std::vector<double> values_;
  double time_;
};

struct InitialLaw {
  enum class Kind { point_mass, stationary, histogram };
  Kind kind = Kind::point_mass;
  double point = 0.5;                 // point_mass
  double y = 0.0;                     // stationary: Pi_y with the run's mutation rates
  std::vector<double> histogram;      // equal bins on [0, 1], any positive scale

  static InitialLaw at(double x) { return {Kind::point_mass, x, 0.0, {}}; }
  static InitialLaw stationary(double y) { return {Kind::stationary, 0.5, y, {}}; }
  static InitialLaw from_histogram(std::vector<double> h) {
    return {Kind::histogram, 0.5, 0.0, std::move(h)};
  }
};

struct MeanFieldConfig {
  FitnessSpec fitness;
  MutationRates mutation;
  double dt = 1e-3;
  double horizon = 1.0;
  int particles = 100000;
  int cells = 400;
  InitialLaw initial;
  std::uint64_t seed = 1;
  int record_every = 1;    // steps between recorded samples
  int snapshot_every = 0;  // grid density snapshots, in steps; 0 disables

  void validate() const;
};

struct MeanFieldSample {
  double time;
  double trait_mean;  // <law, 2Id - 1>
  double mean;        // <law, Id>
  double sbar;
  double sigma2;      // 4 <law, Id (1 - Id)>
};

struct MeanFieldSeries {
  std::vector<MeanFieldSample> samples;
};

struct ParticleRun {
  MeanFieldSeries series;
  std::vector<double> particles;  // final ensemble
  double excursion_fraction = 0.0;  // steps with a pre-clamp value outside [-0.1, 1.1]
};

struct GridRun {
  MeanFieldSeries series;
  GridDensity density{std::vector<double>{1.0}};
  std::vector<GridDensity> snapshots;
  double max_mass_drift = 0.0;  // largest per-step |mass - 1| before renormalizing
};

/// Initial ensemble of `count` particles drawn from the law (seeded substream).
std::vector<double> sample_initial_law(const InitialLaw& law, const MutationRates& mutation,
                                       int count, std::uint64_t seed);
GridDensity project_initial_law(const InitialLaw& law, const MutationRates& mutation, int cells);

/// Interacting-particle Euler-Maruyama scheme. Step k uses a Philox stream
/// derived from (seed, k) and fixed-size particle blocks, so results do not
/// depend on the thread count.
ParticleRun evolve_particles(const MeanFieldConfig& config);
ParticleRun evolve_particles(const MeanFieldConfig& config, std::vector<double> initial);

/// Conservative finite-volume scheme, backward Euler in time with the
/// selection coefficient lagged one step.
GridRun evolve_density(const MeanFieldConfig& config);
GridRun evolve_density(const MeanFieldConfig& config, GridDensity initial);

struct LandeResidual {
  std::vector<double> time;
  std::vector<double> derivative;     // d/dt <law, 2Id - 1>
  std::vector<double> prediction;     // U'(m) sigma2
  std::vector<double> mutation_term;  // 2 (theta+ - |theta| <law, Id>)
  std::vector<double> residual;       // derivative - prediction - mutation_term
  double relative_l2 = 0.0;           // ||residual|| / ||derivative||
};

/// Central differences on the recorded mean trait; needs >= 3 samples.
LandeResidual lande_residual(const MeanFieldSeries& series, const FitnessSpec& spec,
                             const MutationRates& mutation = {});

}  // namespace polygene
