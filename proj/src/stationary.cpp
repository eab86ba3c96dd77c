#include "polygene/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "polygene/log.hpp"
#include "polygene/parallel.hpp"
#include "polygene/quadrature.hpp"

namespace polygene {

SymmetricSelection SymmetricSelection::from_fitness(const FitnessSpec& spec) {
  if (!spec.is_quadratic()) throw std::invalid_argument("symmetric selection needs quadratic fitness");
  const auto& q = spec.quadratic_form();
  return {2.0 * q.kappa, q.optimum};
}

namespace {

void require_positive(const MutationRates& theta) {
  if (!(theta.plus > 0.0) || !(theta.minus > 0.0)) {
    throw std::invalid_argument("stationary density needs theta+ > 0 and theta- > 0");
  }
}

// ln of  int_0^1 u^a (1 - c u)^b e^{k u} du  for c in [0, 1/2] (integrand regular at u = 1).
double log_tail_integral(double a, double b, double c, double k) {
  static thread_local double cached_a = std::numeric_limits<double>::quiet_NaN();
  static thread_local QuadratureRule rule;
  if (a != cached_a) {
    rule = gauss_jacobi(64, 0.0, a);
    cached_a = a;
  }
  double max_e = -INFINITY;
  for (double t : rule.nodes) max_e = std::max(max_e, k * 0.5 * (1.0 + t));
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double u = 0.5 * (1.0 + rule.nodes[i]);
    s += rule.weights[i] * std::pow(1.0 - c * u, b) * std::exp(k * u - max_e);
  }
  return std::log(s) + max_e - (a + 1.0) * std::log(2.0);
}

// The rule depends only on the mutation rates, which stay fixed across the
// many tilts evaluated by root finding and scans.
const QuadratureRule& cached_rule(int nodes, double alpha, double beta) {
  struct Entry {
    int nodes;
    double alpha, beta;
    QuadratureRule rule;
  };
  static thread_local std::vector<Entry> cache;
  for (const auto& e : cache) {
    if (e.nodes == nodes && e.alpha == alpha && e.beta == beta) return e.rule;
  }
  if (cache.size() >= 8) cache.erase(cache.begin());
  cache.push_back({nodes, alpha, beta, gauss_jacobi(nodes, alpha, beta)});
  return cache.back().rule;
}

}  // namespace

StationaryDensity::StationaryDensity(double y, MutationRates theta, int nodes)
    : y_(y), theta_(theta) {
  require_positive(theta_);
  if (!std::isfinite(y)) throw std::invalid_argument("tilt y must be finite");
  const double a = 2.0 * theta_.plus - 1.0;   // exponent at x = 0
  const double b = 2.0 * theta_.minus - 1.0;  // exponent at x = 1
  const QuadratureRule& rule = cached_rule(nodes, b, a);

  nodes_.resize(nodes);
  weights_.resize(nodes);
  std::vector<double> log_w(nodes);
  double max_lw = -INFINITY;
  for (int i = 0; i < nodes; ++i) {
    nodes_[i] = 0.5 * (1.0 + rule.nodes[i]);
    log_w[i] = std::log(rule.weights[i]) + 2.0 * y * nodes_[i];
    max_lw = std::max(max_lw, log_w[i]);
  }
  double total = 0.0;
  for (int i = 0; i < nodes; ++i) {
    weights_[i] = std::exp(log_w[i] - max_lw);
    total += weights_[i];
  }
  for (double& w : weights_) w /= total;
  log_integral_ = max_lw + std::log(total) - (a + b + 1.0) * std::log(2.0);

  mean_ = expect([](double x) { return x; });
  for (int k = 2; k <= 4; ++k) {
    central_[k] = expect([this, k](double x) { return std::pow(x - mean_, k); });
  }
}

double StationaryDensity::normalization() const { return std::exp(-log_integral_); }

double StationaryDensity::density(double x) const {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double a = 2.0 * theta_.plus - 1.0;
  const double b = 2.0 * theta_.minus - 1.0;
  return std::exp(-log_integral_ + a * std::log(x) + b * std::log1p(-x) + 2.0 * x * y_);
}

double StationaryDensity::genetic_variance() const {
  return 4.0 * expect([](double x) { return x * (1.0 - x); });
}

double StationaryDensity::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = 2.0 * theta_.plus - 1.0;
  const double b = 2.0 * theta_.minus - 1.0;
  if (x <= 0.5) {
    // s = x u
    const double log_mass = (a + 1.0) * std::log(x) + log_tail_integral(a, b, x, 2.0 * y_ * x);
    return std::clamp(std::exp(log_mass - log_integral_), 0.0, 1.0);
  }
  // s = 1 - (1 - x) u over [x, 1]
  const double w = 1.0 - x;
  const double log_mass =
      (b + 1.0) * std::log(w) + 2.0 * y_ + log_tail_integral(b, a, w, -2.0 * y_ * w);
  return std::clamp(1.0 - std::exp(log_mass - log_integral_), 0.0, 1.0);
}

double StationaryDensity::sample(Philox4x32& rng) const {
  const double a = 2.0 * theta_.plus;
  const double b = 2.0 * theta_.minus;
  for (;;) {
    const double x = rng.beta(a, b);
    // e^{2xy} / sup_{[0,1]} e^{2xy}
    const double log_accept = y_ >= 0.0 ? 2.0 * y_ * (x - 1.0) : 2.0 * y_ * x;
    if (std::log(rng.uniform()) < log_accept) return x;
  }
}

PiYMoments pi_y_moments(double y, const MutationRates& theta, int nodes) {
  const StationaryDensity d(y, theta, nodes);
  return {d.normalization(), d.mean(),           d.trait_mean(),
          d.variance(),      d.third_cumulant(), d.fourth_cumulant()};
}

double chi(double y, const SymmetricSelection& selection, const MutationRates& theta) {
  const StationaryDensity d(y, theta);
  return -2.0 * selection.kappa * (d.trait_mean() - selection.optimum);
}

double chi(double y, const FitnessSpec& spec, const MutationRates& theta) {
  const StationaryDensity d(y, theta);
  return 2.0 * spec.derivative(d.trait_mean());
}

double chi_derivative(double y, const SymmetricSelection& selection, const MutationRates& theta) {
  const StationaryDensity d(y, theta);
  return -8.0 * selection.kappa * d.variance();
}

double chi_derivative(double y, const FitnessSpec& spec, const MutationRates& theta) {
  const StationaryDensity d(y, theta);
  // 2 U''(m) dm/dy with dm/dy = 4 Var(Pi_y)
  return 2.0 * 2.0 * spec.polynomial().c2 * 4.0 * d.variance();
}

namespace {

std::vector<double> root_grid(double y_max, int n) {
  // sinh spacing clusters nodes near 0, where pitchfork roots are born; the
  // half-cell offset keeps 0 off the grid so a root there is bracketed.
  constexpr double c = 6.0;
  std::vector<double> grid;
  grid.reserve(n + 2);
  grid.push_back(-y_max);
  for (int j = 0; j < n; ++j) {
    const double u = -1.0 + (2.0 * j + 1.0) / n;
    grid.push_back(y_max * std::sinh(c * u) / std::sinh(c));
  }
  grid.push_back(y_max);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<double> solve_fixed_points(const std::function<double(double)>& chi_of,
                                       const FixedPointOptions& options) {
  if (options.grid_n < 100) throw std::invalid_argument("fixed_points: grid_n must be >= 100");
  if (!(options.y_max > 0.0)) throw std::invalid_argument("fixed_points: y_max must be > 0");
  auto g = [&](double y) { return chi_of(y) - y; };

  double y_max = options.y_max;
  for (int attempt = 0; attempt < 6; ++attempt, y_max *= 4.0) {
    const auto grid = root_grid(y_max, options.grid_n);
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) values[i] = g(grid[i]);

    std::vector<double> roots;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      if (values[i] == 0.0) {
        roots.push_back(grid[i]);
        continue;
      }
      if ((values[i] < 0.0) == (values[i + 1] < 0.0) || values[i + 1] == 0.0) continue;
      double lo = grid[i], hi = grid[i + 1];
      double g_lo = values[i];
      while (hi - lo > options.tolerance) {
        const double mid = 0.5 * (lo + hi);
        const double g_mid = g(mid);
        if (g_mid == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((g_mid < 0.0) == (g_lo < 0.0)) {
          lo = mid;
          g_lo = g_mid;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    if (values.back() == 0.0) roots.push_back(grid.back());

    if (!roots.empty()) {
      std::sort(roots.begin(), roots.end());
      std::vector<double> unique;
      for (double r : roots) {
        if (unique.empty() || r - unique.back() > options.dedup) unique.push_back(r);
      }
      if (y_max != options.y_max) {
        std::ostringstream msg;
        msg << "fixed_points: no sign change on [-" << options.y_max << ", " << options.y_max
            << "]; widened to " << y_max;
        warn(msg.str());
      }
      return unique;
    }
  }

  // Unreachable for bounded chi; fall back to a secant solve from 0.
  warn("fixed_points: no sign change found; returning a local solve near 0");
  double y0 = 0.0, y1 = 1e-3;
  double g0 = g(y0), g1 = g(y1);
  for (int it = 0; it < 100 && std::abs(g1) > options.tolerance && g1 != g0; ++it) {
    const double y2 = y1 - g1 * (y1 - y0) / (g1 - g0);
    y0 = y1;
    g0 = g1;
    y1 = y2;
    g1 = g(y1);
  }
  return {y1};
}

template <class Selection>
std::vector<FixedPoint> annotate(const std::vector<double>& ys, const Selection& selection,
                                 const MutationRates& theta) {
  std::vector<FixedPoint> out;
  out.reserve(ys.size());
  for (double y : ys) {
    const StationaryDensity d(y, theta);
    out.push_back({y, d.trait_mean(), chi_derivative(y, selection, theta)});
  }
  return out;
}

}  // namespace

std::vector<FixedPoint> fixed_points(const SymmetricSelection& selection, const MutationRates& theta,
                                     const FixedPointOptions& options) {
  require_positive(theta);
  const auto ys = solve_fixed_points([&](double y) { return chi(y, selection, theta); }, options);
  return annotate(ys, selection, theta);
}

std::vector<FixedPoint> fixed_points(const FitnessSpec& spec, const MutationRates& theta,
                                     const FixedPointOptions& options) {
  require_positive(theta);
  const auto ys = solve_fixed_points([&](double y) { return chi(y, spec, theta); }, options);
  return annotate(ys, spec, theta);
}

double kappa_c(double theta) {
  if (!(theta >= 0.0)) throw std::invalid_argument("kappa_c: theta must be >= 0");
  return -(4.0 * theta + 1.0) / 2.0;
}

double kappa_c(const MutationRates& theta) {
  if (theta.plus != theta.minus) {
    throw std::invalid_argument("kappa_c is defined only for theta+ = theta-");
  }
  return kappa_c(theta.plus);
}

std::vector<BifurcationPoint> bifurcation_scan(const MutationRates& theta, double kappa_min,
                                               double kappa_max, int steps, double optimum,
                                               const FixedPointOptions& options) {
  if (steps < 1) throw std::invalid_argument("bifurcation scan needs steps >= 1");
  if (kappa_max < kappa_min) throw std::invalid_argument("bifurcation scan: kappa_max < kappa_min");
  require_positive(theta);
  std::vector<BifurcationPoint> scan(steps);
  parallel_for(static_cast<std::size_t>(steps), [&](std::size_t i) {
    const double kappa =
        steps == 1 ? kappa_min
                   : kappa_min + (kappa_max - kappa_min) * static_cast<double>(i) / (steps - 1);
    scan[i].kappa = kappa;
    scan[i].roots = fixed_points(SymmetricSelection{kappa, optimum}, theta, options);
  });
  return scan;
}

KappaWindow multiplicity_window(const std::vector<BifurcationPoint>& scan) {
  KappaWindow w{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  for (const auto& p : scan) {
    if (p.roots.size() < 3) continue;
    if (std::isnan(w.lower) || p.kappa < w.lower) w.lower = p.kappa;
    if (std::isnan(w.upper) || p.kappa > w.upper) w.upper = p.kappa;
  }
  return w;
}

}  // namespace polygene
