#include <doctest.h>

#include <cmath>
#include <vector>

#include "polygene/meanfield.hpp"
#include "polygene/oracles.hpp"
#include "polygene/stationary.hpp"

using namespace polygene;

TEST_SUITE("meanfield-solver") {

TEST_CASE("selection coefficient of a law") {
  const std::vector<double> any{0.1, 0.9, 0.3};
  CHECK(sbar(any, FitnessSpec::linear(1.5)) == 3.0);
  const std::vector<double> symmetric{0.2, 0.8, 0.5, 0.35, 0.65};
  CHECK(std::abs(sbar(symmetric, FitnessSpec::quadratic(4.0, 0.0))) < 1e-14);
  const std::vector<double> half{0.5};
  CHECK(sbar(half, FitnessSpec::quadratic(1.0, 0.5)) == 2.0);
  const auto grid = GridDensity::point_mass(101, 0.5);
  CHECK(sbar_from_trait(grid.trait_mean(), FitnessSpec::quadratic(1.0, 0.5)) == doctest::Approx(2.0));
}

TEST_CASE("genetic variance") {
  const std::vector<double> zero{0.0, 0.0}, one{1.0}, mid{0.5, 0.5};
  CHECK(genetic_variance(zero) == 0.0);
  CHECK(genetic_variance(one) == 0.0);
  CHECK(genetic_variance(mid) == 1.0);
  const StationaryDensity pi(0.0, MutationRates(0.6, 0.6));
  // 4 E[x(1-x)] = 4 (E x - Var - (E x)^2) for Beta(1.2, 1.2)
  const double expected = 4.0 * (0.5 - oracle::beta_variance(1.2, 1.2) - 0.25);
  CHECK(pi.genetic_variance() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("absorbing boundary without mutation") {
  MeanFieldConfig c;
  c.fitness = FitnessSpec::quadratic(3.0);
  c.particles = 1000;
  c.horizon = 0.5;
  c.initial = InitialLaw::at(0.0);
  const auto run = evolve_particles(c);
  for (double f : run.particles) CHECK(f == 0.0);
  for (const auto& s : run.series.samples) CHECK(s.sigma2 == 0.0);
}

TEST_CASE("config validation") {
  MeanFieldConfig c;
  c.dt = 0.0;
  CHECK_THROWS_WITH(c.validate(), doctest::Contains("meanfield.dt"));
  c.dt = 1e-3;
  c.initial = InitialLaw::stationary(0.0);
  CHECK_THROWS_WITH(c.validate(), doctest::Contains("meanfield.init"));
}

TEST_CASE("grid solver conserves mass and keeps Pi_0 stationary") {
  MeanFieldConfig c;
  c.mutation = MutationRates(1.1, 3.3);
  c.fitness = FitnessSpec::quadratic(0.0);
  c.dt = 1e-4;
  c.horizon = 1.0;
  c.cells = 400;
  c.initial = InitialLaw::stationary(0.0);
  c.record_every = 100;
  c.snapshot_every = 2000;
  const auto start = project_initial_law(c.initial, c.mutation, c.cells);
  CHECK(start.mass() == doctest::Approx(1.0).epsilon(1e-12));
  const auto run = evolve_density(c);
  CHECK(run.max_mass_drift < 1e-10);
  CHECK(run.density.mass() == doctest::Approx(1.0).epsilon(1e-10));
  double worst = 0.0;
  for (const auto& snap : run.snapshots) worst = std::max(worst, snap.l1_distance(start));
  MESSAGE("max L1 distance to Pi_0: " << worst);
  CHECK(worst < 0.02);
  for (double v : run.density.values()) CHECK(v >= 0.0);
}

TEST_CASE("particle ensemble stays at Pi_0 under neutrality") {
  MeanFieldConfig c;
  c.mutation = MutationRates(1.1, 3.3);
  c.fitness = FitnessSpec::linear(0.0);
  c.particles = 20000;
  c.horizon = 1.0;
  c.initial = InitialLaw::stationary(0.0);
  c.seed = 3;
  const auto run = evolve_particles(c);
  const double d = oracle::ks_distance(run.particles, [](double x) { return oracle::beta_cdf(2.2, 6.6, x); });
  MESSAGE("KS distance after t=1: " << d);
  CHECK(d < 0.03);
  for (double f : run.particles) {
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
}

TEST_CASE("linear selection leaves the coefficient constant") {
  MeanFieldConfig c;
  c.fitness = FitnessSpec::linear(0.7);
  c.mutation = MutationRates(0.5, 0.5);
  c.particles = 2000;
  c.cells = 100;
  c.dt = 1e-3;
  c.horizon = 0.3;
  const auto p = evolve_particles(c);
  const auto g = evolve_density(c);
  for (const auto& s : p.series.samples) CHECK(s.sbar == 1.4);
  for (const auto& s : g.series.samples) CHECK(s.sbar == 1.4);
}

TEST_CASE("particles and grid agree") {
  MeanFieldConfig c;
  c.mutation = MutationRates(1.1, 3.3);
  c.fitness = FitnessSpec::quadratic(15.0, 0.0);
  c.particles = 100000;
  c.cells = 400;
  c.horizon = 1.0;
  c.initial = InitialLaw::stationary(0.0);
  c.dt = 1e-3;
  c.record_every = 10;
  const auto p = evolve_particles(c);
  c.dt = 1e-4;
  c.record_every = 100;
  const auto g = evolve_density(c);
  REQUIRE(p.series.samples.size() == g.series.samples.size());
  double sup = 0.0, sup_sigma = 0.0;
  for (std::size_t i = 0; i < p.series.samples.size(); ++i) {
    sup = std::max(sup, std::abs(p.series.samples[i].trait_mean - g.series.samples[i].trait_mean));
    sup_sigma = std::max(sup_sigma, std::abs(p.series.samples[i].sigma2 - g.series.samples[i].sigma2));
  }
  MESSAGE("sup |mean trait difference| = " << sup << ", sup |sigma2 difference| = " << sup_sigma);
  CHECK(sup < 0.02);
  CHECK(sup_sigma < 0.02);
}

TEST_CASE("Lande residual") {
  MeanFieldSeries fixed;
  for (int i = 0; i < 5; ++i) fixed.samples.push_back({0.1 * i, 1.0, 1.0, 2.0, 0.0});
  const auto r0 = lande_residual(fixed, FitnessSpec::linear(1.0));
  for (double v : r0.residual) CHECK(v == 0.0);
  MeanFieldSeries short_series;
  short_series.samples.resize(2);
  CHECK_THROWS(lande_residual(short_series, FitnessSpec::linear(1.0)));

  MeanFieldConfig c;
  c.fitness = FitnessSpec::linear(1.0);
  c.particles = 20000;
  c.horizon = 1.0;
  c.initial = InitialLaw::from_histogram(std::vector<double>(10, 1.0));
  c.record_every = 20;
  const auto run = evolve_particles(c);
  const auto res = lande_residual(run.series, c.fitness);
  MESSAGE("relative L2 residual: " << res.relative_l2);
  CHECK(res.relative_l2 < 0.1);
}

}
