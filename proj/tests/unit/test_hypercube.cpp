#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "polygene/genotype.hpp"
#include "polygene/hypercube.hpp"
#include "polygene/oracles.hpp"

using namespace polygene;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  REQUIRE(a.size() == b.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

TEST_SUITE("hypercube") {

TEST_CASE("trait value and fitness") {
  const std::vector<int> plus{1, 1, 1, 1}, minus{-1, -1, -1, -1}, half{1, 1, -1, -1};
  CHECK(trait_value(Genotype::from_alleles(plus)) == 1.0);
  CHECK(trait_value(Genotype::from_alleles(minus)) == -1.0);
  CHECK(trait_value(Genotype::from_alleles(half)) == 0.0);

  const auto q = FitnessSpec::quadratic(15.0, 0.0);
  CHECK(fitness(Genotype::from_alleles(plus), q) == -15.0);
  CHECK(q(1.0) == -15.0);
  CHECK(fitness(Genotype::from_alleles(half), FitnessSpec::quadratic(3.7, 0.0)) == 0.0);
  CHECK(FitnessSpec::linear(2.0)(0.5) == 1.0);
}

TEST_CASE("genotype packing follows the canonical index") {
  const std::vector<int> a{1, -1, 1};
  const auto g = Genotype::from_alleles(a);
  CHECK(g.index() == 0b101);
  CHECK(Genotype::from_index(3, 5) == g);
  CHECK_THROWS(Genotype::from_index(3, 8));
  Genotype h(3);
  CHECK_THROWS(h.set_allele(0, 0));
}

TEST_CASE("distribution validation") {
  CHECK_THROWS(HypercubeDistribution(2, {0.5, 0.5, 0.1, -0.1}));
  CHECK_THROWS(HypercubeDistribution(2, {0.5, 0.5, 0.1, 0.0}));
  CHECK_THROWS(HypercubeDistribution(13, std::vector<double>(std::size_t{1} << 13, 1.0 / 8192)));
  CHECK_NOTHROW(HypercubeDistribution::uniform(12));
}

TEST_CASE("marginals") {
  Philox4x32 rng(1);
  const auto x = oracle::random_distribution(4, rng);
  CHECK(max_abs_diff(marginal(x, full_set(4)).weights(), x.weights()) == 0.0);
  CHECK_THROWS(marginal(x, 0));

  const std::vector<double> p{0.2, 0.7, 0.4, 0.9};
  const auto prod = HypercubeDistribution::product(p);
  const std::vector<double> sel{0.7, 0.9};
  const auto expected = HypercubeDistribution::product(sel);
  CHECK(max_abs_diff(marginal(prod, 0b1010).weights(), expected.weights()) < 1e-15);

  const auto u = marginal(HypercubeDistribution::uniform(5), 0b10101);
  for (double w : u.weights()) CHECK(w == doctest::Approx(1.0 / 8).epsilon(1e-14));
}

TEST_CASE("LE projection") {
  const std::vector<double> p{0.3, 0.6, 0.8};
  const auto prod = HypercubeDistribution::product(p);
  CHECK(max_abs_diff(le_projection(prod).weights(), prod.weights()) < 1e-15);

  Philox4x32 rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const auto x = oracle::random_distribution(4, rng);
    const auto px = le_projection(x);
    CHECK(max_abs_diff(le_projection(px).weights(), px.weights()) < 1e-15);
    for (int l = 0; l < 4; ++l) CHECK(px.allele_frequency(l) == doctest::Approx(x.allele_frequency(l)));
  }

  // p1 = p2 = 1/2 with D = 0.1
  const HypercubeDistribution x(2, {0.35, 0.15, 0.15, 0.35});
  CHECK(ld(x, 0, 1) == doctest::Approx(0.1));
  const auto projected = le_projection(x);
  for (double w : projected.weights()) CHECK(w == doctest::Approx(0.25));
}

TEST_CASE("selector") {
  Philox4x32 rng(3);
  const auto x = oracle::random_distribution(5, rng);
  const auto zero = selector(x, FitnessSpec::quadratic(0.0));
  for (double v : zero) CHECK(v == 0.0);

  const auto spec = FitnessSpec::quadratic(2.5, 0.3);
  const auto full = selector(x, spec);
  CHECK(std::abs(sum(full)) < 1e-12);
  for (LocusSet a : {0b00011u, 0b10100u, 0b01001u}) {
    const auto direct = selector_marginal(x, a, spec);
    const auto via_full = marginal_vector(full, 5, a);
    CHECK(max_abs_diff(direct, via_full) < 1e-14);
    CHECK(std::abs(sum(direct)) < 1e-12);
  }
}

TEST_CASE("selector error decays like 1/L on product measures") {
  const double kappa = 2.0;
  const auto spec = FitnessSpec::quadratic(kappa, 0.0);
  for (int loci = 4; loci <= 12; ++loci) {
    std::vector<double> p(loci);
    for (int l = 0; l < loci; ++l) p[l] = 0.15 + 0.7 * l / (loci - 1);
    const auto x = HypercubeDistribution::product(p);
    double m = 0.0;
    for (double v : p) m += 2.0 * v - 1.0;
    m /= loci;
    const double s_bar = 2.0 * spec.derivative(m);
    for (int l = 0; l < loci; ++l) {
      const double lhs = loci * selector_marginal(x, singleton(l), spec)[1];
      const double err = lhs - p[l] * (1.0 - p[l]) * s_bar;
      CHECK(err == doctest::Approx(oracle::lemma_selector_error(kappa, p[l], loci)).epsilon(1e-9));
      CHECK(std::abs(err) * loci <= 4.0 * kappa * 0.25);
    }
  }
}

TEST_CASE("recombinator") {
  Philox4x32 rng(4);
  const auto nu = oracle::random_subset_law(5, rng);
  const std::vector<double> p{0.1, 0.5, 0.3, 0.8, 0.6};
  for (double v : recombinator(HypercubeDistribution::product(p), nu)) CHECK(std::abs(v) < 1e-15);

  const auto x = oracle::random_distribution(5, rng);
  const auto r = recombinator(x, nu);
  CHECK(std::abs(sum(r)) < 1e-12);
  // Marginal consistency on A = {0, 2, 3}.
  const LocusSet a = 0b01101;
  const auto lhs = marginal_vector(r, 5, a);
  const auto rhs = recombinator(marginal(x, a), nu.marginal(a));
  CHECK(max_abs_diff(lhs, rhs) < 1e-14);

  // Two loci, free recombination: R(x) = -D/2 * (+1, -1, -1, +1).
  const HypercubeDistribution x2(2, {0.4, 0.1, 0.2, 0.3});
  const double d = ld(x2, 0, 1);
  const auto r2 = recombinator(x2, SubsetLaw::free_recombination(2));
  CHECK(r2[0] == doctest::Approx(-0.5 * d));
  CHECK(r2[3] == doctest::Approx(-0.5 * d));
  CHECK(r2[1] == doctest::Approx(0.5 * d));
  CHECK(r2[2] == doctest::Approx(0.5 * d));
}

TEST_CASE("recombination drives to the LE projection and preserves frequencies") {
  Philox4x32 rng(5);
  const auto nu = oracle::random_subset_law(4, rng);
  const auto x0 = oracle::random_distribution(4, rng);
  const auto target = le_projection(x0);
  std::vector<double> x(x0.weights().begin(), x0.weights().end());
  for (int it = 0; it < 2000; ++it) {
    const auto r = recombinator(x, 4, nu);
    for (std::size_t g = 0; g < x.size(); ++g) x[g] += 0.1 * r[g];
    // Total mass 1 is a repelling fixed point of the Euler map off the simplex,
    // so rounding drift is removed each step.
    const double mass = sum(x);
    for (double& v : x) v /= mass;
    if (it == 0) {
      const HypercubeDistribution x1(4, x);
      for (int l = 0; l < 4; ++l) CHECK(std::abs(x1.allele_frequency(l) - x0.allele_frequency(l)) < 1e-12);
    }
  }
  double dist = 0.0;
  for (std::size_t g = 0; g < x.size(); ++g) dist += (x[g] - target[g]) * (x[g] - target[g]);
  CHECK(std::sqrt(dist) < 1e-8);
}

TEST_CASE("degenerate mask law warns and gives the zero operator") {
  std::vector<double> m(8, 0.0);
  m[0] = 0.5;
  m[7] = 0.5;
  const SubsetLaw nu(3, m);
  CHECK(nu.proper_mass() == 0.0);
  Philox4x32 rng(6);
  for (double v : recombinator(oracle::random_distribution(3, rng), nu)) CHECK(v == 0.0);
}

TEST_CASE("mutator") {
  const MutationRates theta(1.1, 3.3);
  const std::vector<double> p(4, theta.law_plus());
  for (double v : mutator(HypercubeDistribution::product(p), theta)) CHECK(std::abs(v) < 1e-14);

  Philox4x32 rng(7);
  CHECK(std::abs(sum(mutator(oracle::random_distribution(4, rng), theta))) < 1e-12);

  const auto one = mutator(HypercubeDistribution::point_mass(1, 0), MutationRates(1.0, 1.0));
  CHECK(one[1] == doctest::Approx(1.0));
  CHECK(one[0] == doctest::Approx(-1.0));

  for (double v : mutator(oracle::random_distribution(3, rng), MutationRates(0.0, 0.0))) CHECK(v == 0.0);
  CHECK_THROWS(MutationRates(-1.0, 1.0));

  // Marginal consistency of the mutator.
  const auto x = oracle::random_distribution(5, rng);
  const LocusSet a = 0b10110;
  CHECK(max_abs_diff(marginal_vector(mutator(x, theta), 5, a), mutator(marginal(x, a), theta)) < 1e-14);
}

TEST_CASE("linkage disequilibrium") {
  const std::vector<double> p{0.2, 0.9, 0.5};
  CHECK(std::abs(ld(HypercubeDistribution::product(p), 0, 2)) < 1e-15);
  const HypercubeDistribution x(2, {0.5, 0.0, 0.0, 0.5});
  CHECK(ld(x, 0, 1) == 0.25);
  CHECK_THROWS(ld(x, 1, 1));

  Philox4x32 rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    const auto y = oracle::random_distribution(4, rng);
    const double dev = le_deviation(marginal(y, 0b0101));
    CHECK(std::abs(ld(y, 0, 2)) <= dev + 1e-15);
  }
}

TEST_CASE("linkage vectors are orthonormal") {
  for (int loci = 1; loci <= 6; ++loci) {
    const LocusSet full = full_set(loci);
    for (LocusSet i = 0; i <= full; ++i) {
      const auto wi = linkage_vector(loci, i);
      for (LocusSet j = 0; j <= full; ++j) {
        const double expected = i == j ? 1.0 : 0.0;
        CHECK(std::abs(dot(wi, linkage_vector(loci, j)) - expected) < 1e-12);
      }
    }
  }
}

TEST_CASE("analytic recombinator Jacobian") {
  Philox4x32 rng(9);
  const int loci = 3;
  const auto nu = oracle::random_subset_law(loci, rng);
  const auto x = oracle::random_distribution(loci, rng);
  const auto jac = oracle::fd_jacobian(
      [&](std::span<const double> v) { return recombinator(v, loci, nu); }, x.weights());
  const std::size_t n = x.size();
  for (LocusSet i = 0; i < n; ++i) {
    const auto wi = linkage_vector(loci, i);
    for (LocusSet j = 0; j < n; ++j) {
      const auto wj = linkage_vector(loci, j);
      std::vector<double> jw(n, 0.0);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) jw[r] += jac[r * n + c] * wj[c];
      const double analytic = recomb_jacobian_entry(x, nu, i, j);
      CHECK(std::abs(analytic - dot(wi, jw)) < 1e-6);
      if (i == j) CHECK(analytic == -nu.beta(i));
      if ((j & i) != j) CHECK(analytic == 0.0);
    }
  }
  // Exact directional derivative agrees with the FD Jacobian too.
  const auto exact = recombinator_jacobian(x.weights(), loci, nu);
  CHECK(max_abs_diff(exact, jac) < 1e-8);
}

TEST_CASE("cubic identity on three loci") {
  Philox4x32 rng(10);
  for (int rep = 0; rep < 5; ++rep) {
    const auto nu = oracle::random_subset_law(3, rng);
    const auto x = oracle::random_distribution(3, rng);
    const auto px = le_projection(x);
    std::vector<double> diff(x.size());
    for (std::size_t g = 0; g < x.size(); ++g) diff[g] = x[g] - px[g];
    const auto lhs = recombinator(x, nu);
    const auto rhs = recombinator_derivative(x.weights(), 3, nu, diff);
    CHECK(max_abs_diff(lhs, rhs) < 1e-10);
  }
}

TEST_CASE("selector bound holds with the derived constant") {
  Philox4x32 rng(11);
  const auto spec = FitnessSpec::quadratic(3.0, 0.2);
  const auto poly = spec.polynomial();
  const double c = oracle::selector_bound_constant(poly.c1, poly.c2);
  for (int loci = 4; loci <= 8; ++loci) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto x = oracle::random_distribution(loci, rng);
      const auto b = oracle::selector_bound_terms(x, static_cast<int>(rng.below(loci)), spec);
      CHECK(b.lhs <= c * b.rhs + 1e-15);
    }
  }
}

TEST_CASE("drift covariance rows sum to zero") {
  Philox4x32 rng(12);
  const auto x = oracle::random_distribution(3, rng);
  const auto cov = drift_covariance(x);
  for (std::size_t i = 0; i < 8; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 8; ++j) s += cov[i * 8 + j];
    CHECK(std::abs(s) < 1e-15);
  }
}

}
