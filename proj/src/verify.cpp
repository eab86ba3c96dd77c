#include "polygene/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "polygene/forward_sim.hpp"
#include "polygene/hypercube.hpp"
#include "polygene/meanfield.hpp"
#include "polygene/oracles.hpp"
#include "polygene/recombination.hpp"
#include "polygene/stationary.hpp"

namespace polygene {

namespace {

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double uniform_in(Philox4x32& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

FitnessSpec random_spec(Philox4x32& rng) {
  if (rng.bernoulli(0.25)) return FitnessSpec::linear(uniform_in(rng, -3.0, 3.0));
  return FitnessSpec::quadratic(uniform_in(rng, -5.0, 5.0), uniform_in(rng, -1.0, 1.0));
}

LocusSet random_proper_subset(int loci, Philox4x32& rng) {
  const auto full = full_set(loci);
  for (;;) {
    const auto a = static_cast<LocusSet>(rng.below(full + 1));
    if (a != 0 && a != full) return a;
  }
}

}  // namespace

JacobianCheck recombinator_jacobian_check(int loci, int instances, std::uint64_t seed) {
  JacobianCheck out;
  Philox4x32 rng(seed);
  const std::size_t n = std::size_t{1} << loci;
  std::vector<std::vector<double>> w(n);
  for (LocusSet i = 0; i < n; ++i) w[i] = linkage_vector(loci, i);
  for (int rep = 0; rep < instances; ++rep) {
    const auto nu = oracle::random_subset_law(loci, rng);
    const auto x = oracle::random_distribution(loci, rng);
    const auto jac = oracle::fd_jacobian(
        [&](std::span<const double> v) { return recombinator(v, loci, nu); }, x.weights());
    for (LocusSet j = 0; j < n; ++j) {
      std::vector<double> jw(n, 0.0);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) jw[r] += jac[r * n + c] * w[j][c];
      for (LocusSet i = 0; i < n; ++i) {
        const double analytic = recomb_jacobian_entry(x, nu, i, j);
        out.max_fd_error = std::max(out.max_fd_error, std::abs(analytic - dot(w[i], jw)));
        if (i == j) out.max_diagonal_error = std::max(out.max_diagonal_error, std::abs(analytic + nu.beta(i)));
        if ((j & i) != j) out.max_outside_pattern = std::max(out.max_outside_pattern, std::abs(analytic));
      }
    }
    const auto dense = recombinator_jacobian(x.weights(), loci, nu);
    out.max_dense_error = std::max(out.max_dense_error, max_abs_diff(dense, jac));
  }
  return out;
}

ConsistencyCheck marginal_consistency_check(int instances, std::uint64_t seed) {
  ConsistencyCheck out;
  out.instances = instances;
  Philox4x32 rng(seed);
  for (int rep = 0; rep < instances; ++rep) {
    const int loci = 3 + static_cast<int>(rng.below(4));
    const auto x = oracle::random_distribution(loci, rng);
    const auto nu = oracle::random_subset_law(loci, rng);
    const auto spec = random_spec(rng);
    const MutationRates theta(uniform_in(rng, 0.0, 3.0), uniform_in(rng, 0.0, 3.0));
    const LocusSet a = random_proper_subset(loci, rng);
    const auto xa = marginal(x, a);

    out.selector = std::max(out.selector, max_abs_diff(marginal_vector(selector(x, spec), loci, a),
                                                       selector_marginal(x, a, spec)));
    out.recombinator = std::max(
        out.recombinator, max_abs_diff(marginal_vector(recombinator(x, nu), loci, a),
                                       recombinator(xa, nu.marginal(a))));
    out.mutator = std::max(out.mutator, max_abs_diff(marginal_vector(mutator(x, theta), loci, a),
                                                     mutator(xa, theta)));
  }
  return out;
}

SelectorDecayCheck selector_decay_check(int min_loci, int max_loci, int instances,
                                        std::uint64_t seed) {
  SelectorDecayCheck out;
  out.instances = instances;
  for (int l = min_loci; l <= max_loci; ++l) out.loci.push_back(l);
  out.max_error.assign(out.loci.size(), 0.0);
  Philox4x32 rng(seed);
  for (int rep = 0; rep < instances; ++rep) {
    const int k = rep % static_cast<int>(out.loci.size());
    const int loci = out.loci[k];
    const double kappa = uniform_in(rng, -5.0, 5.0);
    const auto spec = FitnessSpec::quadratic(kappa, uniform_in(rng, -1.0, 1.0));
    std::vector<double> p(loci);
    for (double& v : p) v = rng.uniform();
    const auto x = HypercubeDistribution::product(p);
    double m = 0.0;
    for (double v : p) m += 2.0 * v - 1.0;
    m /= loci;
    const double s_bar = 2.0 * spec.derivative(m);
    const double bound = 2.0 * std::abs(kappa) / (3.0 * std::sqrt(3.0));
    const auto l0 = static_cast<int>(rng.below(loci));
    const double lhs = loci * selector_marginal(x, singleton(l0), spec)[1];
    const double err = lhs - p[l0] * (1.0 - p[l0]) * s_bar;
    out.max_error[k] = std::max(out.max_error[k], std::abs(err));
    const double closed = oracle::lemma_selector_error(kappa, p[l0], loci);
    out.max_closed_form_error = std::max(out.max_closed_form_error, std::abs(err - closed));
    if (std::abs(err) * loci > bound + 1e-10) ++out.violations;
  }
  return out;
}

SelectorBoundCheck selector_bound_check(int instances, std::uint64_t seed) {
  SelectorBoundCheck out;
  out.instances = instances;
  Philox4x32 rng(seed);
  for (int rep = 0; rep < instances; ++rep) {
    const int loci = 3 + static_cast<int>(rng.below(6));
    const auto x = oracle::random_distribution(loci, rng);
    const auto spec = random_spec(rng);
    const auto poly = spec.polynomial();
    const double c = oracle::selector_bound_constant(poly.c1, poly.c2);
    const auto b = oracle::selector_bound_terms(x, static_cast<int>(rng.below(loci)), spec);
    if (b.lhs > c * b.rhs + 1e-13) ++out.violations;
    if (c * b.rhs > 0.0) out.max_ratio = std::max(out.max_ratio, b.lhs / (c * b.rhs));
  }
  return out;
}

bool VerifyReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const VerifyEntry& e) { return e.pass; });
}

namespace {

class Recorder {
 public:
  Recorder(std::string suite, std::vector<VerifyEntry>& out) : suite_(std::move(suite)), out_(out) {}

  // |observed - expected| <= tolerance
  void near(const std::string& check, double observed, double expected, double tolerance) {
    const bool ok = std::isfinite(observed) && std::abs(observed - expected) <= tolerance;
    out_.push_back({suite_, check, observed, expected, tolerance, ok});
  }
  // observed <= tolerance, for error magnitudes and counts
  void below(const std::string& check, double observed, double tolerance) {
    const bool ok = std::isfinite(observed) && observed <= tolerance;
    out_.push_back({suite_, check, observed, 0.0, tolerance, ok});
  }
  void fail(const std::string& check) {
    out_.push_back({suite_, check, NAN, 0.0, 0.0, false});
  }

 private:
  std::string suite_;
  std::vector<VerifyEntry>& out_;
};

void suite_jacobian(Recorder& r, std::uint64_t seed) {
  const auto j = recombinator_jacobian_check(3, 20, seed);
  r.below("max |analytic - finite difference| (L=3, 20 instances)", j.max_fd_error, 1e-6);
  r.below("max |diagonal + beta_I|", j.max_diagonal_error, 1e-10);
  r.below("max |entry| outside the triangular pattern", j.max_outside_pattern, 0.0);
  r.below("dense Jacobian vs finite difference", j.max_dense_error, 1e-6);
}

void suite_consistency(Recorder& r, std::uint64_t seed) {
  const auto c = marginal_consistency_check(200, seed);
  r.below("selector marginal consistency", c.selector, 1e-12);
  r.below("recombinator marginal consistency", c.recombinator, 1e-12);
  r.below("mutator marginal consistency", c.mutator, 1e-12);
}

void suite_le_projection(Recorder& r, std::uint64_t seed) {
  Philox4x32 rng(seed);
  double idempotence = 0.0, frequencies = 0.0, cubic = 0.0, convergence = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int loci = 2 + static_cast<int>(rng.below(4));
    const auto x = oracle::random_distribution(loci, rng);
    const auto px = le_projection(x);
    idempotence = std::max(idempotence, max_abs_diff(le_projection(px).weights(), px.weights()));
    for (int l = 0; l < loci; ++l) {
      frequencies = std::max(frequencies, std::abs(px.allele_frequency(l) - x.allele_frequency(l)));
    }
    const auto nu = oracle::random_subset_law(loci, rng);
    if (loci == 3) {
      std::vector<double> diff(x.size());
      for (std::size_t g = 0; g < x.size(); ++g) diff[g] = x[g] - px[g];
      cubic = std::max(cubic, max_abs_diff(recombinator(x, nu),
                                           recombinator_derivative(x.weights(), 3, nu, diff)));
    }
    // Euler iteration of dx/dt = R(x); mass is renormalized each step because
    // unit mass is a repelling fixed point of the map off the simplex.
    std::vector<double> v(x.weights().begin(), x.weights().end());
    for (int it = 0; it < 3000; ++it) {
      const auto step = recombinator(v, loci, nu);
      double mass = 0.0;
      for (std::size_t g = 0; g < v.size(); ++g) mass += (v[g] += 0.1 * step[g]);
      for (double& w : v) w /= mass;
    }
    convergence = std::max(convergence, max_abs_diff(v, px.weights()));
  }
  r.below("pi(pi(x)) = pi(x)", idempotence, 1e-15);
  r.below("pi preserves allele frequencies", frequencies, 1e-14);
  r.below("R(x) = grad R(x)(x - pi(x)) on three loci", cubic, 1e-12);
  r.below("recombination flow converges to pi(x)", convergence, 1e-8);
}

void suite_selector(Recorder& r, std::uint64_t seed) {
  const auto d = selector_decay_check(4, 12, 500, seed);
  r.below("O(1/L) selector error bound violations (L=4..12, 500 instances)", d.violations, 0);
  r.below("selector error vs closed form", d.max_closed_form_error, 1e-9);
  const auto b = selector_bound_check(500, seed + 1);
  r.below("selector bound violations (500 instances)", b.violations, 0);
}

void suite_free_recomb(Recorder& r, std::uint64_t) {
  for (int loci : {2, 10, 100}) {
    const auto h = RecombinationModel::free(loci).harmonic_stats();
    double worst = 0.0;
    for (double v : h.per_locus) worst = std::max(worst, std::abs(v - 0.5));
    r.near("r** (L=" + std::to_string(loci) + ")", h.genome, 0.5, 0.0);
    r.below("max |r*_l - 1/2| (L=" + std::to_string(loci) + ")", worst, 0.0);
  }
}

void suite_recomb_stats(Recorder& r, std::uint64_t seed) {
  const std::int64_t draws = 200000;
  double worst_z = 0.0;
  const std::vector<RecombinationModel> models{
      RecombinationModel::single_crossover(20),
      RecombinationModel::poisson_crossover(20, 1.5),
      RecombinationModel::single_crossover(
          20, TabulatedDensity::from_function([](double x) { return 0.2 + 3.0 * x * x; })),
  };
  std::uint64_t s = seed;
  for (const auto& m : models) {
    for (auto [a, b] : {std::pair{0, 1}, {3, 9}, {0, 19}}) {
      const auto est = oracle::mc_pairwise_r(m, a, b, draws, ++s);
      worst_z = std::max(worst_z, std::abs(est.value - m.pairwise_r(a, b)) / est.standard_error);
    }
    const std::vector<int> subset{2, 7, 11};
    const auto est = oracle::mc_beta(m, subset, draws, ++s);
    worst_z = std::max(worst_z, std::abs(est.value - m.beta_subset(subset)) / est.standard_error);
  }
  r.below("max |z| of sampled rates against closed forms", worst_z, 5.0);

  const auto m = RecombinationModel::poisson_crossover(6, 2.0);
  const auto exact = m.subset_law();
  const auto freq = oracle::mc_subset_frequencies(m, draws, ++s);
  double worst = 0.0;
  const LocusSet full = full_set(6);
  for (LocusSet i = 0; i <= full; ++i) {
    // The exact law is symmetrized under complement, so compare against the
    // symmetrized frequencies.
    const double sym = 0.5 * (freq[i] + freq[full & ~i]);
    const double p = exact[i];
    const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / draws);
    worst = std::max(worst, std::abs(sym - p) / se);
  }
  r.below("max |z| of mask law against the exact law (poisson, L=6)", worst, 5.0);
}

void suite_forward_sim(Recorder& r, std::uint64_t seed) {
  SimConfig c;
  c.population = 60;
  c.loci = 30;
  c.recombination = RecombinationModel::single_crossover(30);
  c.rho = 30.0;
  c.fitness = FitnessSpec::quadratic(4.0, 0.2);
  c.mutation = MutationRates(0.5, 0.7);
  c.generations = 50;
  c.stride = 10;
  c.seed = seed;
  const auto a = run_simulation(c);
  const auto b = run_simulation(c);
  double diff = a.points.size() == b.points.size() ? 0.0 : 1.0;
  for (std::size_t i = 0; diff == 0.0 && i < a.points.size(); ++i) {
    diff = max_abs_diff(a.points[i].stats.frequencies, b.points[i].stats.frequencies);
  }
  r.below("replay with the same seed is identical", diff, 0.0);

  SimConfig m = c;
  m.mutation = MutationRates(0.0, 0.0);
  PopulationState mono(60, 30);
  for (int i = 0; i < 60; ++i)
    for (int l = 0; l < 30; l += 2) mono.set_allele(i, l, 1);
  Philox4x32 rng(seed);
  const auto next = step_generation(mono, m, rng);
  r.below("monomorphic population is absorbing", next.data() == mono.data() ? 0.0 : 1.0, 0.0);

  const MutationRates theta(1.1, 3.3);
  SimConfig n;
  n.population = 200;
  n.loci = 50;
  n.recombination = RecombinationModel::free(50);
  n.rho = 200.0;
  n.mutation = theta;
  n.initial = InitialCondition::neutral_equilibrium();
  n.seed = seed + 7;
  Simulator sim(n);
  std::vector<double> pooled;
  for (int k = 0; k < 30; ++k) {
    sim.run(100);
    for (double p : sim.state().allele_frequencies()) pooled.push_back(p);
  }
  const double ks = oracle::ks_distance(pooled, [&](double x) {
    return oracle::beta_cdf(2 * theta.plus, 2 * theta.minus, x);
  });
  r.below("neutral allele frequencies vs Beta(2 theta+, 2 theta-), KS", ks, 0.07);
}

void suite_meanfield(Recorder& r, std::uint64_t seed) {
  MeanFieldConfig c;
  c.mutation = MutationRates(1.1, 3.3);
  c.fitness = FitnessSpec::quadratic(0.0);
  c.dt = 1e-4;
  c.horizon = 0.5;
  c.cells = 400;
  c.initial = InitialLaw::stationary(0.0);
  c.record_every = 100;
  c.snapshot_every = 1000;
  const auto start = project_initial_law(c.initial, c.mutation, c.cells);
  const auto grid = evolve_density(c);
  double worst = 0.0;
  for (const auto& snap : grid.snapshots) worst = std::max(worst, snap.l1_distance(start));
  r.below("grid: per-step mass drift", grid.max_mass_drift, 1e-10);
  r.below("grid: L1 distance to Pi_0 under neutrality", worst, 0.02);

  c.dt = 1e-3;
  c.particles = 20000;
  c.seed = seed;
  const auto part = evolve_particles(c);
  const double ks = oracle::ks_distance(part.particles, [](double x) { return oracle::beta_cdf(2.2, 6.6, x); });
  r.below("particles: KS distance to Pi_0 under neutrality", ks, 0.03);
  r.below("particles: fraction of steps with boundary excursions", part.excursion_fraction, 0.01);
}

void suite_lande(Recorder& r, std::uint64_t seed) {
  MeanFieldConfig c;
  c.fitness = FitnessSpec::linear(1.0);
  c.particles = 20000;
  c.horizon = 1.0;
  c.initial = InitialLaw::from_histogram(std::vector<double>(10, 1.0));
  c.record_every = 20;
  c.seed = seed;
  const auto part = evolve_particles(c);
  r.below("particles: relative L2 Lande residual (linear, theta = 0)",
          lande_residual(part.series, c.fitness).relative_l2, 0.1);

  c.fitness = FitnessSpec::quadratic(15.0, 0.0);
  c.mutation = MutationRates(1.1, 3.3);
  c.initial = InitialLaw::stationary(0.0);
  c.dt = 1e-4;
  c.record_every = 100;
  const auto grid = evolve_density(c);
  r.below("grid: relative L2 Lande residual (quadratic, with mutation)",
          lande_residual(grid.series, c.fitness, c.mutation).relative_l2, 0.1);
}

void suite_stationary(Recorder& r, std::uint64_t seed) {
  for (double th : {0.3, 0.6, 1.0}) {
    const auto m = pi_y_moments(0.0, MutationRates(th, th));
    const std::string tag = " (theta=" + std::to_string(th).substr(0, 3) + ")";
    r.near("Var Pi_0 vs 1/(4(4 theta + 1))" + tag, m.variance, 1.0 / (4.0 * (4.0 * th + 1.0)), 1e-8);
    r.below("fourth cumulant of Pi_0 is negative" + tag, m.fourth_cumulant, -1e-12);
  }
  const MutationRates asym(1.1, 3.3);
  const auto m = pi_y_moments(0.0, asym);
  r.near("Var Pi_0 vs Beta variance (asymmetric)", m.variance, oracle::beta_variance(2.2, 6.6), 1e-12);

  const StationaryDensity d(1.3, asym);
  Philox4x32 rng(seed);
  std::vector<double> sample(20000);
  for (double& v : sample) v = d.sample(rng);
  r.below("sampler vs cdf, KS (y = 1.3)", oracle::ks_distance(sample, [&](double x) { return d.cdf(x); }),
          0.015);

  double worst = 0.0;
  for (double kappa : {-3.0, -1.0, 2.0}) {
    const SymmetricSelection sel{kappa, 0.1};
    for (const auto& fp : fixed_points(sel, MutationRates(0.6, 0.6))) {
      worst = std::max(worst, std::abs(chi(fp.y, sel, MutationRates(0.6, 0.6)) - fp.y));
    }
  }
  r.below("fixed points solve chi(y) = y", worst, 1e-8);
}

void suite_kappa_c(Recorder& r, std::uint64_t) {
  const MutationRates theta(0.6, 0.6);
  const double kc = kappa_c(0.6);
  r.near("kappa_c(0.6)", kc, -1.7, 0.0);
  r.below("|chi'(0) - 1| at kappa_c",
          std::abs(chi_derivative(0.0, SymmetricSelection{kc, 0.0}, theta) - 1.0), 1e-3);
  const auto scan = bifurcation_scan(theta, -3.0, 0.0, 31);
  int above_bad = 0;
  for (const auto& p : scan) {
    if (p.kappa > kc + 1e-9 && p.roots.size() != 1) ++above_bad;
  }
  r.below("scan points above kappa_c with other than one root", above_bad, 0);
  const auto w = multiplicity_window(scan);
  r.below("three-root window below kappa_c is nonempty", std::isnan(w.lower) ? 1.0 : 0.0, 0.0);
}

struct Suite {
  const char* name;
  void (*run)(Recorder&, std::uint64_t);
};

constexpr Suite kSuites[] = {
    {"jacobian", suite_jacobian},       {"consistency", suite_consistency},
    {"le-projection", suite_le_projection}, {"selector", suite_selector},
    {"free-recomb", suite_free_recomb}, {"recomb-stats", suite_recomb_stats},
    {"forward-sim", suite_forward_sim}, {"meanfield", suite_meanfield},
    {"lande", suite_lande},             {"stationary", suite_stationary},
    {"kappa_c", suite_kappa_c},
};

bool selected(const std::string& name, const std::string& filter) {
  if (filter.empty()) return true;
  std::istringstream in(filter);
  std::string token;
  while (std::getline(in, token, ',')) {
    if (!token.empty() && name.find(token) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

std::vector<std::string> verify_suites() {
  std::vector<std::string> out;
  for (const auto& s : kSuites) out.emplace_back(s.name);
  return out;
}

VerifyReport run_verify(const std::string& filter, std::uint64_t seed) {
  VerifyReport report;
  for (std::size_t k = 0; k < std::size(kSuites); ++k) {
    const auto& s = kSuites[k];
    if (!selected(s.name, filter)) continue;
    report.suites.emplace_back(s.name);
    Recorder r(s.name, report.entries);
    try {
      s.run(r, derive_seed(seed, k));
    } catch (const std::exception& e) {
      r.fail(std::string("suite raised: ") + e.what());
    }
  }
  return report;
}

}  // namespace polygene
