#include "polygene/meanfield.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "polygene/log.hpp"
#include "polygene/parallel.hpp"
#include "polygene/stationary.hpp"

namespace polygene {

double sbar_from_trait(double trait_mean, const FitnessSpec& spec) noexcept {
  return 2.0 * spec.derivative(trait_mean);
}

double sbar(std::span<const double> particles, const FitnessSpec& spec) noexcept {
  if (particles.empty()) return sbar_from_trait(0.0, spec);
  double s = 0.0;
  for (double f : particles) s += f;
  return sbar_from_trait(2.0 * s / particles.size() - 1.0, spec);
}

double genetic_variance(std::span<const double> particles) noexcept {
  if (particles.empty()) return 0.0;
  double s = 0.0;
  for (double f : particles) s += f * (1.0 - f);
  return 4.0 * s / particles.size();
}

// --- GridDensity -------------------------------------------------------------

GridDensity::GridDensity(std::vector<double> cell_averages, double time)
    : values_(std::move(cell_averages)), time_(time) {
  if (values_.empty()) throw std::invalid_argument("grid density needs at least one cell");
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("grid density values must be >= 0");
  }
}

GridDensity GridDensity::point_mass(int cells, double x) {
  if (cells < 1) throw std::invalid_argument("grid needs at least one cell");
  std::vector<double> v(cells, 0.0);
  const int i = std::clamp(static_cast<int>(x * cells), 0, cells - 1);
  v[i] = cells;
  return GridDensity(std::move(v));
}

double GridDensity::mass() const noexcept {
  return std::accumulate(values_.begin(), values_.end(), 0.0) * width();
}

double GridDensity::mean() const noexcept {
  double s = 0.0;
  for (int i = 0; i < cells(); ++i) s += values_[i] * center(i);
  return s * width();
}

double GridDensity::genetic_variance() const noexcept {
  // Exact cell integral of x (1 - x) for a constant cell value.
  const double h = width();
  double s = 0.0;
  for (int i = 0; i < cells(); ++i) {
    const double x = center(i);
    s += values_[i] * (x * (1.0 - x) - h * h / 12.0);
  }
  return 4.0 * s * h;
}

double GridDensity::l1_distance(const GridDensity& other) const {
  if (other.cells() != cells()) throw std::invalid_argument("l1_distance: grid sizes differ");
  double s = 0.0;
  for (int i = 0; i < cells(); ++i) s += std::abs(values_[i] - other.values_[i]);
  return s * width();
}

// --- configuration and initial laws -----------------------------------------

void MeanFieldConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument(key + ": " + why);
  };
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("meanfield.dt", "must be > 0");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) fail("meanfield.T", "must be >= 0");
  if (particles < 1) fail("meanfield.M", "must be >= 1");
  if (cells < 2) fail("meanfield.K", "must be >= 2");
  if (record_every < 1) fail("meanfield.record_every", "must be >= 1");
  if (snapshot_every < 0) fail("meanfield.snapshot_every", "must be >= 0");
  switch (initial.kind) {
    case InitialLaw::Kind::point_mass:
      if (!(initial.point >= 0.0 && initial.point <= 1.0)) fail("meanfield.init.x", "must lie in [0, 1]");
      break;
    case InitialLaw::Kind::stationary:
      if (!(mutation.plus > 0.0 && mutation.minus > 0.0)) {
        fail("meanfield.init", "stationary initial law needs theta+ > 0 and theta- > 0");
      }
      break;
    case InitialLaw::Kind::histogram: {
      double total = 0.0;
      for (double h : initial.histogram) {
        if (!(h >= 0.0)) fail("meanfield.init.histogram", "entries must be >= 0");
        total += h;
      }
      if (!(total > 0.0)) fail("meanfield.init.histogram", "needs positive mass");
      break;
    }
  }
  // Stability heuristic: |drift| dt stays well below half the unit interval.
  const double max_drift = std::abs(sbar_from_trait(1.0, fitness)) / 4.0 +
                           std::abs(sbar_from_trait(-1.0, fitness)) / 4.0 + mutation.total();
  if (max_drift * dt >= 0.5) fail("meanfield.dt", "too large for the drift magnitude");
}

std::vector<double> sample_initial_law(const InitialLaw& law, const MutationRates& mutation,
                                       int count, std::uint64_t seed) {
  Philox4x32 rng(seed, 0);
  std::vector<double> out(count);
  switch (law.kind) {
    case InitialLaw::Kind::point_mass:
      std::fill(out.begin(), out.end(), law.point);
      break;
    case InitialLaw::Kind::stationary: {
      const StationaryDensity pi(law.y, mutation);
      for (double& f : out) f = pi.sample(rng);
      break;
    }
    case InitialLaw::Kind::histogram: {
      const auto& h = law.histogram;
      std::vector<double> cum(h.size());
      std::partial_sum(h.begin(), h.end(), cum.begin());
      const double bins = static_cast<double>(h.size());
      for (double& f : out) {
        const double u = rng.uniform() * cum.back();
        const auto b = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        const auto bin = std::min(b, h.size() - 1);
        f = (static_cast<double>(bin) + rng.uniform()) / bins;
      }
      break;
    }
  }
  return out;
}

GridDensity project_initial_law(const InitialLaw& law, const MutationRates& mutation, int cells) {
  switch (law.kind) {
    case InitialLaw::Kind::point_mass:
      return GridDensity::point_mass(cells, law.point);
    case InitialLaw::Kind::stationary: {
      const StationaryDensity pi(law.y, mutation);
      return GridDensity::from_cdf(cells, [&pi](double x) { return pi.cdf(x); });
    }
    case InitialLaw::Kind::histogram: {
      const auto& h = law.histogram;
      const double total = std::accumulate(h.begin(), h.end(), 0.0);
      const double bins = static_cast<double>(h.size());
      // Distribution function of the piecewise-constant histogram density.
      auto cdf = [&](double x) {
        const double pos = std::clamp(x, 0.0, 1.0) * bins;
        const auto full = std::min(static_cast<std::size_t>(pos), h.size());
        double c = std::accumulate(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(full), 0.0);
        if (full < h.size()) c += h[full] * (pos - static_cast<double>(full));
        return c / total;
      };
      return GridDensity::from_cdf(cells, cdf);
    }
  }
  throw std::logic_error("unknown initial law");
}

// --- particles ---------------------------------------------------------------

namespace {

constexpr std::size_t kParticleBlock = 4096;

MeanFieldSample particle_sample(double t, std::span<const double> f, const FitnessSpec& spec) {
  double s = 0.0, het = 0.0;
  for (double x : f) {
    s += x;
    het += x * (1.0 - x);
  }
  const double mean = s / f.size();
  const double m = 2.0 * mean - 1.0;
  return {t, m, mean, sbar_from_trait(m, spec), 4.0 * het / f.size()};
}

std::int64_t step_count(const MeanFieldConfig& c) {
  return static_cast<std::int64_t>(std::llround(c.horizon / c.dt));
}

}  // namespace

ParticleRun evolve_particles(const MeanFieldConfig& config) {
  config.validate();
  return evolve_particles(config, sample_initial_law(config.initial, config.mutation,
                                                     config.particles, config.seed));
}

ParticleRun evolve_particles(const MeanFieldConfig& config, std::vector<double> initial) {
  config.validate();
  if (initial.empty()) throw std::invalid_argument("evolve_particles: empty ensemble");
  for (double f : initial) {
    if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("particles must lie in [0, 1]");
  }
  ParticleRun run;
  run.particles = std::move(initial);
  auto& f = run.particles;
  const std::size_t m = f.size();
  const std::size_t blocks = (m + kParticleBlock - 1) / kParticleBlock;
  const double dt = config.dt;
  const double sqrt_dt = std::sqrt(dt);
  const double tp = config.mutation.plus;
  const double tm = config.mutation.minus;
  const std::int64_t steps = step_count(config);
  std::int64_t unstable_steps = 0;

  run.series.samples.push_back(particle_sample(0.0, f, config.fitness));
  for (std::int64_t k = 0; k < steps; ++k) {
    const double s = sbar(f, config.fitness);
    std::atomic<bool> excursion{false};
    parallel_for(blocks, [&](std::size_t b) {
      // Stream ids: 0 is the initial law, then one range of blocks per step.
      Philox4x32 rng(config.seed, (static_cast<std::uint64_t>(k + 1) << 24) | b);
      const std::size_t end = std::min(m, (b + 1) * kParticleBlock);
      bool out_of_range = false;
      for (std::size_t i = b * kParticleBlock; i < end; ++i) {
        const double x = f[i];
        const double het = std::max(x * (1.0 - x), 0.0);
        const double drift = s * het + tp * (1.0 - x) - tm * x;
        const double next = x + drift * dt + std::sqrt(het) * sqrt_dt * rng.normal();
        if (next < -0.1 || next > 1.1) out_of_range = true;
        f[i] = std::clamp(next, 0.0, 1.0);
      }
      if (out_of_range) excursion = true;
    });
    if (excursion) ++unstable_steps;
    if ((k + 1) % config.record_every == 0 || k + 1 == steps) {
      run.series.samples.push_back(
          particle_sample(static_cast<double>(k + 1) * dt, f, config.fitness));
    }
  }
  run.excursion_fraction = steps > 0 ? static_cast<double>(unstable_steps) / steps : 0.0;
  if (run.excursion_fraction > 0.01) {
    std::ostringstream msg;
    msg << "evolve_particles: " << 100.0 * run.excursion_fraction
        << "% of steps had particles outside [-0.1, 1.1] before clamping; reduce dt";
    warn(msg.str());
  }
  return run;
}

// --- grid --------------------------------------------------------------------

GridRun evolve_density(const MeanFieldConfig& config) {
  config.validate();
  return evolve_density(config, project_initial_law(config.initial, config.mutation, config.cells));
}

GridRun evolve_density(const MeanFieldConfig& config, GridDensity initial) {
  config.validate();
  const int k_cells = initial.cells();
  if (k_cells < 2) throw std::invalid_argument("evolve_density: need at least two cells");
  const double h = initial.width();
  const double dt = config.dt;
  const std::int64_t steps = step_count(config);

  GridRun run;
  run.density = std::move(initial);
  run.density.set_time(0.0);
  auto& u = run.density.data();
  {
    const double mass = run.density.mass();
    for (double& v : u) v /= mass;
  }

  auto sample = [&](double t) {
    const double mean = run.density.mean();
    const double m = 2.0 * mean - 1.0;
    return MeanFieldSample{t, m, mean, sbar_from_trait(m, config.fitness),
                           run.density.genetic_variance()};
  };
  run.series.samples.push_back(sample(0.0));
  if (config.snapshot_every > 0) run.snapshots.push_back(run.density);

  std::vector<double> diffusion(k_cells);
  for (int i = 0; i < k_cells; ++i) {
    const double x = run.density.center(i);
    diffusion[i] = 0.5 * x * (1.0 - x) / (h * h);
  }
  std::vector<double> lower(k_cells), diag(k_cells), upper(k_cells), rhs(k_cells);
  std::vector<double> c_prime(k_cells), d_prime(k_cells);

  for (std::int64_t step = 0; step < steps; ++step) {
    const double s = sbar_from_trait(run.density.trait_mean(), config.fitness);
    // Assemble I - dt A, A the flux-divergence operator with zero-flux ends.
    std::fill(lower.begin(), lower.end(), 0.0);
    std::fill(upper.begin(), upper.end(), 0.0);
    std::fill(diag.begin(), diag.end(), 1.0);
    for (int j = 0; j + 1 < k_cells; ++j) {
      const double xf = (j + 1) * h;
      const double a = s * xf * (1.0 - xf) + config.mutation.drift(xf);
      const double a_plus = std::max(a, 0.0) / h;
      const double a_minus = std::min(a, 0.0) / h;
      // Flux through face j+1/2 per unit h: a+ u_j + a- u_{j+1} - (D_{j+1} u_{j+1} - D_j u_j).
      const double from_left = a_plus + diffusion[j];         // coefficient of u_j
      const double from_right = a_minus - diffusion[j + 1];   // coefficient of u_{j+1}
      // Cell j loses the flux, cell j+1 gains it.
      diag[j] += dt * from_left;
      upper[j] += dt * from_right;
      lower[j + 1] -= dt * from_left;
      diag[j + 1] -= dt * from_right;
    }
    // Thomas algorithm.
    c_prime[0] = upper[0] / diag[0];
    d_prime[0] = u[0] / diag[0];
    for (int i = 1; i < k_cells; ++i) {
      const double denom = diag[i] - lower[i] * c_prime[i - 1];
      c_prime[i] = upper[i] / denom;
      d_prime[i] = (u[i] - lower[i] * d_prime[i - 1]) / denom;
    }
    u[k_cells - 1] = d_prime[k_cells - 1];
    for (int i = k_cells - 2; i >= 0; --i) u[i] = d_prime[i] - c_prime[i] * u[i + 1];

    for (int i = 0; i < k_cells; ++i) {
      if (u[i] < -1e-12) {
        std::ostringstream msg;
        msg << "evolve_density: negative cell value " << u[i] << " at cell " << i;
        throw std::runtime_error(msg.str());
      }
      u[i] = std::max(u[i], 0.0);
    }
    const double mass = run.density.mass();
    run.max_mass_drift = std::max(run.max_mass_drift, std::abs(mass - 1.0));
    for (double& v : u) v /= mass;
    run.density.set_time(static_cast<double>(step + 1) * dt);

    if ((step + 1) % config.record_every == 0 || step + 1 == steps) {
      run.series.samples.push_back(sample(run.density.time()));
    }
    if (config.snapshot_every > 0 && (step + 1) % config.snapshot_every == 0) {
      run.snapshots.push_back(run.density);
    }
  }
  if (run.max_mass_drift > 1e-8) {
    std::ostringstream msg;
    msg << "evolve_density: mass drift up to " << run.max_mass_drift << " per step";
    warn(msg.str());
  }
  return run;
}

// --- Lande ------------------------------------------------------------------

LandeResidual lande_residual(const MeanFieldSeries& series, const FitnessSpec& spec,
                             const MutationRates& mutation) {
  const auto& s = series.samples;
  if (s.size() < 3) throw std::invalid_argument("lande_residual: need at least 3 samples");
  LandeResidual out;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const double span = s[i + 1].time - s[i - 1].time;
    if (!(span > 0.0)) throw std::invalid_argument("lande_residual: times must increase");
    const double d = (s[i + 1].trait_mean - s[i - 1].trait_mean) / span;
    const double pred = spec.derivative(s[i].trait_mean) * s[i].sigma2;
    const double mut = 2.0 * (mutation.plus - mutation.total() * s[i].mean);
    const double r = d - pred - mut;
    out.time.push_back(s[i].time);
    out.derivative.push_back(d);
    out.prediction.push_back(pred);
    out.mutation_term.push_back(mut);
    out.residual.push_back(r);
    num += r * r;
    den += d * d;
  }
  out.relative_l2 = den > 0.0 ? std::sqrt(num / den) : (num > 0.0 ? INFINITY : 0.0);
  return out;
}

}  // namespace polygene
