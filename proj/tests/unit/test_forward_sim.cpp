#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "polygene/forward_sim.hpp"
#include "polygene/oracles.hpp"
#include "polygene/stationary.hpp"

using namespace polygene;

namespace {

SimConfig base_config(int n, int loci) {
  SimConfig c;
  c.population = n;
  c.loci = loci;
  c.recombination = RecombinationModel::free(loci);
  return c;
}

PopulationState random_population(int n, int loci, std::uint64_t seed) {
  PopulationState s(n, loci);
  Philox4x32 rng(seed);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < loci; ++l) s.set_allele(i, l, rng.bernoulli(0.3 + 0.4 * l / loci) ? 1 : -1);
  return s;
}

}  // namespace

TEST_SUITE("forward-sim") {

TEST_CASE("monomorphic population is absorbing without mutation") {
  auto c = base_config(50, 70);
  c.rho = 25.0;
  c.fitness = FitnessSpec::quadratic(5.0, 0.3);
  PopulationState s(50, 70);
  for (int i = 0; i < 50; ++i)
    for (int l = 0; l < 70; l += 3) s.set_allele(i, l, 1);
  Philox4x32 rng(1);
  const auto next = step_generation(s, c, rng);
  CHECK(next.data() == s.data());
  CHECK(next.generation() == 1);
  CHECK(next.population() == 50);
}

TEST_CASE("config validation names the field") {
  auto c = base_config(10, 5);
  c.rho = 11.0;
  CHECK_THROWS_WITH(c.validate(), doctest::Contains("recomb.rho"));
  c.rho = 1.0;
  c.recombination = RecombinationModel::free(4);
  CHECK_THROWS_WITH(c.validate(), doctest::Contains("recomb"));
}

TEST_CASE("deterministic replay") {
  auto c = base_config(60, 30);
  c.generations = 40;
  c.stride = 7;
  c.rho = 30.0;
  c.recombination = RecombinationModel::single_crossover(30);
  c.mutation = MutationRates(1.1, 3.3);
  c.fitness = FitnessSpec::quadratic(15.0);
  c.initial = InitialCondition::explicit_frequencies(std::vector<double>(30, 0.4));
  c.seed = 99;
  const auto a = run_simulation(c);
  const auto b = run_simulation(c);
  REQUIRE(a.points.size() == b.points.size());
  CHECK(a.points.size() == 1 + 5 + 1);
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].generation == b.points[i].generation);
    CHECK(a.points[i].stats.frequencies == b.points[i].stats.frequencies);
    CHECK(a.points[i].stats.trait_variance == b.points[i].stats.trait_variance);
    CHECK(a.points[i].time == doctest::Approx(a.points[i].generation / 60.0));
  }
  for (const auto& pt : a.points) {
    for (double p : pt.stats.frequencies) {
      const double scaled = p * 60.0;
      CHECK(scaled == doctest::Approx(std::round(scaled)));
    }
    CHECK(std::abs(pt.stats.trait_mean) <= 1.0);
  }
}

TEST_CASE("population statistics") {
  PopulationState mono(20, 8);
  for (int i = 0; i < 20; ++i)
    for (int l = 0; l < 8; ++l) mono.set_allele(i, l, 1);
  Philox4x32 rng(2);
  StatOptions full;
  full.full_ld_scan = true;
  const auto s = population_stats(mono, full, rng);
  for (double p : s.frequencies) CHECK(p == 1.0);
  CHECK(s.trait_variance == 0.0);
  for (const auto& d : s.ld) CHECK(d.d == 0.0);

  PopulationState two(10, 2);
  for (int i = 0; i < 5; ++i) {
    two.set_allele(i, 0, 1);
    two.set_allele(i, 1, 1);
  }
  const auto t = population_stats(two, full, rng);
  REQUIRE(t.ld.size() == 1);
  CHECK(t.ld[0].d == 0.25);

  // L Var[Z] = 4 mean p(1-p) + (4/L) sum_{l != l'} D
  for (std::uint64_t seed = 3; seed < 8; ++seed) {
    const auto pop = random_population(40, 12, seed);
    const auto st = population_stats(pop, full, rng);
    double ld_sum = 0.0;
    for (const auto& d : st.ld) ld_sum += 2.0 * d.d;
    const double lhs = 12.0 * st.trait_variance;
    CHECK(std::abs(lhs - st.genetic_variance) <= 4.0 / 12.0 * std::abs(ld_sum) + 1e-12);
    CHECK(lhs == doctest::Approx(st.genetic_variance + 4.0 / 12.0 * ld_sum).epsilon(1e-10));
  }
}

TEST_CASE("statistics are invariant under genome permutation") {
  auto pop = random_population(30, 40, 11);
  auto shuffled = pop;
  const int words = pop.words();
  for (int i = 0; i < 30; ++i) {
    const int j = 29 - i;
    std::copy(pop.genome(i).begin(), pop.genome(i).end(), shuffled.genome(j).begin());
  }
  (void)words;
  StatOptions opts;
  opts.ld_pairs = 50;
  opts.le_triples = 20;
  Philox4x32 r1(5), r2(5);
  const auto a = population_stats(pop, opts, r1);
  const auto b = population_stats(shuffled, opts, r2);
  CHECK(a.frequencies == b.frequencies);
  CHECK(a.trait_mean == doctest::Approx(b.trait_mean).epsilon(1e-14));
  CHECK(a.trait_variance == doctest::Approx(b.trait_variance).epsilon(1e-12));
  REQUIRE(a.ld.size() == b.ld.size());
  for (std::size_t i = 0; i < a.ld.size(); ++i) CHECK(a.ld[i].d == doctest::Approx(b.ld[i].d));
  REQUIRE(a.triples.size() == b.triples.size());
  for (std::size_t i = 0; i < a.triples.size(); ++i)
    CHECK(a.triples[i].le_deviation == doctest::Approx(b.triples[i].le_deviation));
}

TEST_CASE("heterozygosity decays under pure drift") {
  const int n = 50, loci = 20, gens = 50, reps = 200;
  double h_end = 0.0, h_sq = 0.0, h0 = 0.0;
  for (int r = 0; r < reps; ++r) {
    auto c = base_config(n, loci);
    c.initial = InitialCondition::explicit_frequencies(std::vector<double>(loci, 0.5));
    c.seed = derive_seed(17, r);
    Simulator sim(c);
    double h = 0.0;
    for (double p : sim.state().allele_frequencies()) h += 2 * p * (1 - p);
    h0 += h / loci;
    sim.run(gens);
    h = 0.0;
    for (double p : sim.state().allele_frequencies()) h += 2 * p * (1 - p);
    h /= loci;
    h_end += h;
    h_sq += h * h;
  }
  h0 /= reps;
  const double mean = h_end / reps;
  const double se = std::sqrt((h_sq / reps - mean * mean) / reps);
  const double expected = h0 * std::pow(1.0 - 1.0 / n, gens);
  CHECK(std::abs(mean - expected) < 3.0 * se);
}

TEST_CASE("directional selection raises the mean trait") {
  int increases = 0;
  const int reps = 40;
  for (int r = 0; r < reps; ++r) {
    auto c = base_config(100, 20);
    c.fitness = FitnessSpec::linear(2.0);
    c.rho = 50.0;
    c.initial = InitialCondition::explicit_frequencies(std::vector<double>(20, 0.5));
    c.seed = derive_seed(23, r);
    Simulator sim(c);
    const double before = sim.stats().trait_mean;
    sim.run(20);
    if (sim.stats().trait_mean > before) ++increases;
  }
  // Sign test: P(>= 27 of 40 | fair coin) < 0.02.
  CHECK(increases >= 27);
}

TEST_CASE("neutral frequencies follow the stationary Beta law") {
  const MutationRates theta(1.1, 3.3);
  auto c = base_config(200, 50);
  c.mutation = theta;
  c.rho = 200.0;
  c.initial = InitialCondition::neutral_equilibrium();
  c.seed = 31;
  Simulator sim(c);
  std::vector<double> pooled;
  for (int k = 0; k < 40; ++k) {
    sim.run(100);
    for (double p : sim.state().allele_frequencies()) pooled.push_back(p);
  }
  const double d = oracle::ks_distance(pooled, [&](double x) {
    return oracle::beta_cdf(2 * theta.plus, 2 * theta.minus, x);
  });
  MESSAGE("KS distance to Pi_0: " << d);
  CHECK(d < 0.06);
}

}
