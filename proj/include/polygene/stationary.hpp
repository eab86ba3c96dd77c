#pragma once

#include <vector>

#include "polygene/fitness.hpp"
#include "polygene/rng.hpp"

namespace polygene {

/// Symmetric quadratic selection written directly as a selection coefficient:
/// sbar(xi) = -2 kappa (<xi, 2Id - 1> - optimum). The pitchfork threshold
/// kappa_c = -(4 theta + 1) / 2 is stated in this parameterization; the fitness
/// U(z) = -k (z - z*)^2 of the dynamics corresponds to kappa = 2 k.
struct SymmetricSelection {
  double kappa = 0.0;
  double optimum = 0.0;

  static SymmetricSelection from_fitness(const FitnessSpec& spec);
};

/// Pi_y(x) = C_y x^{2 theta+ - 1} (1 - x)^{2 theta- - 1} e^{2 x y} on [0, 1],
/// integrated by Gauss-Jacobi quadrature matched to the endpoint exponents.
class StationaryDensity {
 public:
  static constexpr int kDefaultNodes = 200;

  /// Throws std::invalid_argument unless theta+ > 0 and theta- > 0.
  StationaryDensity(double y, MutationRates theta, int nodes = kDefaultNodes);

  double y() const noexcept { return y_; }
  const MutationRates& theta() const noexcept { return theta_; }

  double log_normalization() const noexcept { return -log_integral_; }  // ln C_y
  double normalization() const;                                         // C_y
  double density(double x) const;

  /// Quadrature nodes in (0, 1) and probability weights of Pi_y.
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  template <class F>
  double expect(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) s += weights_[i] * f(nodes_[i]);
    return s;
  }

  double mean() const noexcept { return mean_; }
  double trait_mean() const noexcept { return 2.0 * mean_ - 1.0; }  // <Pi_y, 2Id - 1>
  double variance() const noexcept { return central_[2]; }
  double third_cumulant() const noexcept { return central_[3]; }
  double fourth_cumulant() const noexcept {
    return central_[4] - 3.0 * central_[2] * central_[2];
  }
  /// 4 <Pi_y, Id (1 - Id)>
  double genetic_variance() const;

  double cdf(double x) const;

  /// Exact draw: Beta(2 theta+, 2 theta-) proposal accepted with the tilt.
  double sample(Philox4x32& rng) const;

 private:
  double y_;
  MutationRates theta_;
  double log_integral_ = 0.0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  double mean_ = 0.0;
  double central_[5] = {1.0, 0.0, 0.0, 0.0, 0.0};
};

struct PiYMoments {
  double normalization;    // C_y
  double mean;
  double trait_mean;       // <Pi_y, 2Id - 1>
  double variance;
  double third_cumulant;
  double fourth_cumulant;
};

PiYMoments pi_y_moments(double y, const MutationRates& theta,
                        int nodes = StationaryDensity::kDefaultNodes);

/// chi(y) = sbar(Pi_y)
double chi(double y, const SymmetricSelection& selection, const MutationRates& theta);
/// chi(y) = 2 U'(<Pi_y, 2Id - 1>), the coefficient used by the dynamics.
double chi(double y, const FitnessSpec& spec, const MutationRates& theta);

/// Analytic chi'(y): d<Pi_y, 2Id - 1>/dy = 4 Var(Pi_y).
double chi_derivative(double y, const SymmetricSelection& selection, const MutationRates& theta);
double chi_derivative(double y, const FitnessSpec& spec, const MutationRates& theta);

struct FixedPoint {
  double y;
  double branch;  // <Pi_y, 2Id - 1>
  double slope;   // chi'(y)
};

struct FixedPointOptions {
  double y_max = 20.0;
  int grid_n = 400;
  double tolerance = 1e-10;
  double dedup = 1e-8;
};

/// Roots of chi(y) = y on [-y_max, y_max], sorted increasingly.
std::vector<FixedPoint> fixed_points(const SymmetricSelection& selection, const MutationRates& theta,
                                     const FixedPointOptions& options = {});
std::vector<FixedPoint> fixed_points(const FitnessSpec& spec, const MutationRates& theta,
                                     const FixedPointOptions& options = {});

/// -(4 theta + 1) / 2; defined only for theta+ = theta-.
double kappa_c(double theta);
double kappa_c(const MutationRates& theta);

struct BifurcationPoint {
  double kappa;
  std::vector<FixedPoint> roots;
};

/// Fixed points for `steps` equally spaced kappa in [kappa_min, kappa_max]
/// (SymmetricSelection parameterization), evaluated in parallel.
std::vector<BifurcationPoint> bifurcation_scan(const MutationRates& theta, double kappa_min,
                                               double kappa_max, int steps, double optimum = 0.0,
                                               const FixedPointOptions& options = {});

/// The kappa window below kappa_c where the scan found three or more roots;
/// {NaN, NaN} if none.
struct KappaWindow {
  double lower, upper;
};
KappaWindow multiplicity_window(const std::vector<BifurcationPoint>& scan);

}  // namespace polygene
