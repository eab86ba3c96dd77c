#include <doctest.h>

#include <cmath>
#include <vector>

#include "polygene/oracles.hpp"
#include "polygene/quadrature.hpp"
#include "polygene/stationary.hpp"

using namespace polygene;

TEST_SUITE("stationary-analysis") {

TEST_CASE("Gauss-Jacobi integrates weighted polynomials exactly") {
  // int_{-1}^{1} (1-t)^a (1+t)^b dt = 2^{a+b+1} B(a+1, b+1)
  for (auto [a, b] : {std::pair{0.0, 0.0}, {-0.5, 0.7}, {0.2, -0.4}, {-0.6, -0.4}, {1.2, 5.6}}) {
    const auto rule = gauss_jacobi(30, a, b);
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      s0 += rule.weights[i];
      s1 += rule.weights[i] * rule.nodes[i];
    }
    const double mass = std::exp((a + b + 1) * std::log(2.0) + std::lgamma(a + 1) + std::lgamma(b + 1) -
                                 std::lgamma(a + b + 2));
    CHECK(s0 == doctest::Approx(mass).epsilon(1e-12));
    CHECK(s1 / s0 == doctest::Approx((b - a) / (a + b + 2)).epsilon(1e-12));
  }
  const auto gl = gauss_legendre(5);
  double s = 0.0;
  for (std::size_t i = 0; i < 5; ++i) s += gl.weights[i] * std::pow(gl.nodes[i], 8);
  CHECK(s == doctest::Approx(2.0 / 9.0).epsilon(1e-13));
}

TEST_CASE("moments of Pi_0") {
  const auto sym = pi_y_moments(0.0, MutationRates(0.6, 0.6));
  CHECK(sym.mean == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sym.variance == doctest::Approx(1.0 / 13.6).epsilon(1e-10));
  CHECK(std::abs(sym.third_cumulant) < 1e-14);

  const MutationRates asym(1.1, 3.3);
  const auto m = pi_y_moments(0.0, asym);
  CHECK(m.mean == doctest::Approx(1.1 / 4.4).epsilon(1e-13));
  CHECK(m.variance == doctest::Approx(oracle::beta_variance(2.2, 6.6)).epsilon(1e-12));
  CHECK(m.fourth_cumulant == doctest::Approx(oracle::beta_fourth_cumulant(2.2, 6.6)).epsilon(1e-9));

  for (double th : {0.3, 0.6, 1.0, 2.0}) {
    const auto t = pi_y_moments(0.0, MutationRates(th, th));
    CHECK(t.variance == doctest::Approx(1.0 / (4.0 * (4.0 * th + 1.0))).epsilon(1e-10));
    CHECK(t.fourth_cumulant < 0.0);
    CHECK(t.fourth_cumulant == doctest::Approx(oracle::beta_fourth_cumulant(2 * th, 2 * th)).epsilon(1e-9));
  }
  CHECK_THROWS(pi_y_moments(0.0, MutationRates(0.0, 1.0)));
}

TEST_CASE("tilted density normalization, cdf and node-count check") {
  const MutationRates theta(0.3, 0.8);
  const StationaryDensity d(2.5, theta);
  const StationaryDensity d400(2.5, theta, 400);
  CHECK(d.mean() == doctest::Approx(d400.mean()).epsilon(1e-12));
  CHECK(d.log_normalization() == doctest::Approx(d400.log_normalization()).epsilon(1e-12));
  // Density integrates to one (Gauss-Legendre away from the singular ends plus the cdf tails).
  const auto gl = gauss_legendre(200);
  double mid = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double x = 0.1 + 0.4 * (1.0 + gl.nodes[i]);
    mid += 0.4 * gl.weights[i] * d.density(x);
  }
  CHECK(mid == doctest::Approx(d.cdf(0.9) - d.cdf(0.1)).epsilon(1e-10));
  CHECK(d.cdf(0.0) == 0.0);
  CHECK(d.cdf(1.0) == 1.0);
  CHECK(d.cdf(0.5) < d.cdf(0.6));

  const StationaryDensity flat(0.0, MutationRates(0.6, 1.7));
  for (double x : {0.01, 0.2, 0.5, 0.8, 0.99}) {
    CHECK(flat.cdf(x) == doctest::Approx(oracle::beta_cdf(1.2, 3.4, x)).epsilon(1e-10));
  }
}

TEST_CASE("sampler matches the distribution function") {
  const StationaryDensity d(1.9, MutationRates(0.6, 0.6));
  Philox4x32 rng(77);
  std::vector<double> xs(20000);
  for (double& x : xs) x = d.sample(rng);
  // 1.63 / sqrt(n) is the 1% critical value.
  CHECK(oracle::ks_distance(xs, [&](double x) { return d.cdf(x); }) < 1.63 / std::sqrt(20000.0));
}

TEST_CASE("the self-consistency map") {
  const MutationRates theta(0.6, 0.6);
  CHECK(std::abs(chi(0.0, SymmetricSelection{-2.0, 0.0}, theta)) < 1e-14);

  const double kc = kappa_c(0.6);
  const double h = 1e-4;
  const SymmetricSelection at_c{kc, 0.0};
  const double fd = (chi(h, at_c, theta) - chi(-h, at_c, theta)) / (2 * h);
  CHECK(fd == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(chi_derivative(0.0, at_c, theta) == doctest::Approx(1.0).epsilon(1e-12));
  const SymmetricSelection other{-0.9, 0.0};
  CHECK(chi_derivative(0.0, other, theta) == doctest::Approx(-0.9 / kc).epsilon(1e-12));

  const SymmetricSelection stabilizing{2.0, 0.0};
  double prev = chi(-10.0, stabilizing, theta);
  for (double y = -9.5; y <= 10.0; y += 0.5) {
    const double v = chi(y, stabilizing, theta);
    CHECK(v <= prev);
    prev = v;
  }

  // The fitness form of chi is the Cor. parameterization at twice the kappa.
  const auto fit = FitnessSpec::quadratic(-1.3, 0.1);
  const auto sym = SymmetricSelection::from_fitness(fit);
  CHECK(sym.kappa == -2.6);
  for (double y : {-3.0, 0.4, 2.0}) CHECK(chi(y, fit, theta) == doctest::Approx(chi(y, sym, theta)));
}

TEST_CASE("fixed points") {
  const MutationRates theta(0.6, 0.6);
  for (double kappa : {0.0, 0.5, 3.0}) {
    const auto roots = fixed_points(SymmetricSelection{kappa, 0.0}, theta);
    REQUIRE(roots.size() == 1);
    CHECK(std::abs(roots[0].y) < 1e-9);
  }
  const auto three = fixed_points(SymmetricSelection{-2.0, 0.0}, theta);
  REQUIRE(three.size() == 3);
  CHECK(three[0].y == doctest::Approx(-three[2].y).epsilon(1e-8));
  CHECK(std::abs(three[1].y) < 1e-9);
  CHECK(three[2].y > 0.0);
  CHECK(three[2].branch == doctest::Approx(-three[0].branch).epsilon(1e-8));

  // Damped iteration from the right converges to the same outer root.
  double y = 3.0;
  for (int it = 0; it < 2000; ++it) y = 0.5 * y + 0.5 * chi(y, SymmetricSelection{-2.0, 0.0}, theta);
  CHECK(y == doctest::Approx(three[2].y).epsilon(1e-7));

  const auto asym = fixed_points(FitnessSpec::quadratic(1.0, 0.4), MutationRates(1.1, 3.3));
  REQUIRE(asym.size() == 1);
  CHECK(chi(asym[0].y, FitnessSpec::quadratic(1.0, 0.4), MutationRates(1.1, 3.3)) ==
        doctest::Approx(asym[0].y).epsilon(1e-8));

  FixedPointOptions bad;
  bad.grid_n = 50;
  CHECK_THROWS(fixed_points(SymmetricSelection{1.0, 0.0}, theta, bad));
}

TEST_CASE("kappa_c") {
  CHECK(kappa_c(0.6) == -1.7);
  CHECK(kappa_c(0.0) == -0.5);
  CHECK_THROWS(kappa_c(MutationRates(0.5, 0.6)));
  for (double th : {0.3, 0.6, 1.0}) {
    const MutationRates theta(th, th);
    // Root of kappa -> chi'(0; kappa) - 1 by bisection.
    double lo = -10.0, hi = 0.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (chi_derivative(0.0, SymmetricSelection{mid, 0.0}, theta) > 1.0) lo = mid;
      else hi = mid;
    }
    CHECK(std::abs(0.5 * (lo + hi) - kappa_c(th)) < 1e-3);
  }
}

TEST_CASE("bifurcation scan") {
  const MutationRates theta(0.6, 0.6);
  const auto scan = bifurcation_scan(theta, -3.0, 0.0, 31);
  REQUIRE(scan.size() == 31);
  for (const auto& p : scan) {
    if (p.kappa > kappa_c(0.6) + 1e-9) CHECK(p.roots.size() == 1);
  }
  const auto window = multiplicity_window(scan);
  CHECK(window.lower == doctest::Approx(-3.0));
  CHECK(window.upper < kappa_c(0.6));
  // Outer branches grow as kappa decreases.
  double prev = 0.0;
  for (auto it = scan.rbegin(); it != scan.rend(); ++it) {
    if (it->roots.size() < 3) continue;
    CHECK(it->roots.back().branch >= prev);
    prev = it->roots.back().branch;
  }
}

}
