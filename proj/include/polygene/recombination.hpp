#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "polygene/genotype.hpp"
#include "polygene/hypercube.hpp"
#include "polygene/rng.hpp"

namespace polygene {

/// Positive density on [0,1] tabulated on a uniform grid and linearly
/// interpolated; normalized to unit mass on construction.
class TabulatedDensity {
 public:
  static constexpr int kDefaultGridPoints = 1024;

  static TabulatedDensity uniform();
  static TabulatedDensity from_function(const std::function<double(double)>& f,
                                        int grid_points = kDefaultGridPoints);
  /// Two-column text (position, density); `#` starts a comment. Positions must
  /// cover [0,1]; values are resampled onto the default grid.
  static TabulatedDensity from_file(const std::filesystem::path& path);

  double operator()(double x) const;
  /// Mass of [a, b] (a <= b, clipped to [0,1]).
  double mass(double a, double b) const;
  double cdf(double x) const;
  double inverse_cdf(double u) const;

  std::span<const double> values() const noexcept { return values_; }

 private:
  explicit TabulatedDensity(std::vector<double> values);
  std::vector<double> values_;  // on x_i = i / (n-1)
  std::vector<double> cdf_;     // exact for the piecewise-linear interpolant
};

/// Summary statistics r*_l and r** of pairwise recombination rates.
struct HarmonicStats {
  std::vector<double> per_locus;  // r*_l
  double genome = 0.0;            // r**
};

/// One of the three crossover families. Locus l (0-based) sits at position
/// (l+1)/(L+1) on the chromosome [0,1]. Sampled masks are the set of loci
/// inheriting from the first parent.
class RecombinationModel {
 public:
  enum class Kind { free, single_crossover, poisson_crossover };

  static RecombinationModel free(int loci);
  static RecombinationModel single_crossover(int loci,
                                            TabulatedDensity density = TabulatedDensity::uniform());
  /// Crossover points form a Poisson process with intensity `mean_crossovers * density`.
  static RecombinationModel poisson_crossover(int loci, double mean_crossovers,
                                              TabulatedDensity density = TabulatedDensity::uniform());

  Kind kind() const noexcept { return kind_; }
  int loci() const noexcept { return loci_; }
  double mean_crossovers() const noexcept { return lambda_; }
  const TabulatedDensity& density() const noexcept { return density_; }
  double position(int locus) const noexcept {
    return static_cast<double>(locus + 1) / (loci_ + 1);
  }

  /// Fill `mask` (words_for(L) words) with a draw of the random set J.
  void sample_mask(Philox4x32& rng, std::span<std::uint64_t> mask) const;
  std::vector<std::uint64_t> sample_mask(Philox4x32& rng) const;

  /// Probability that a mask separates the two loci.
  double pairwise_r(int locus1, int locus2) const;

  /// Throws std::domain_error if some pairwise rate vanishes.
  HarmonicStats harmonic_stats() const;

  /// beta_I = 1 - 2 nu^I(I) of the symmetrized law, I given as loci.
  double beta_subset(std::span<const int> subset) const;

  /// Exact symmetrized mask law for L <= kMaxExactLoci.
  SubsetLaw subset_law() const;

  /// rho r** / (L^2 ln rho): the strong-recombination margin of the limit theorem.
  double strong_recombination_ratio(double rho) const;

  static const char* kind_name(Kind kind) noexcept;

 private:
  RecombinationModel(Kind kind, int loci, double lambda, TabulatedDensity density);

  // Integrated crossover intensity over [a, b].
  double intensity_mass(double a, double b) const { return lambda_ * density_.mass(a, b); }

  Kind kind_;
  int loci_;
  double lambda_;
  TabulatedDensity density_;
};

}  // namespace polygene
