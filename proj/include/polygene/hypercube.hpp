#pragma once

// Exact operators on distributions over the hypercube {-1,+1}^L for small L.
//
// Genotype gamma is stored at index sum_i 2^i (gamma_i + 1)/2. Locus subsets
// are bit sets over 0-based loci. Vectors over a sub-hypercube {-1,+1}^A use
// the same little-endian convention on the loci of A taken in increasing order.

#include <cstdint>
#include <span>
#include <vector>

#include "polygene/fitness.hpp"

namespace polygene {

inline constexpr int kMaxExactLoci = 12;

using LocusSet = std::uint32_t;

constexpr LocusSet full_set(int loci) noexcept { return (LocusSet{1} << loci) - 1; }
constexpr LocusSet singleton(int locus) noexcept { return LocusSet{1} << locus; }
int set_size(LocusSet s) noexcept;

/// Restrict genotype index `gamma` to the loci of `subset`, packed in increasing locus order.
std::uint32_t restrict_index(std::uint32_t gamma, LocusSet subset) noexcept;
/// Inverse of restrict_index: spread the low bits of `packed` onto the loci of `subset`.
std::uint32_t expand_index(std::uint32_t packed, LocusSet subset) noexcept;

/// Probability vector on {-1,+1}^L, L <= kMaxExactLoci.
class HypercubeDistribution {
 public:
  /// Validates nonnegativity and unit mass (tolerance 1e-12).
  HypercubeDistribution(int loci, std::vector<double> weights);

  static HypercubeDistribution uniform(int loci);
  static HypercubeDistribution point_mass(int loci, std::uint32_t gamma);
  /// Product of per-locus laws with P(+1 at locus l) = plus_probabilities[l].
  static HypercubeDistribution product(std::span<const double> plus_probabilities);

  int loci() const noexcept { return loci_; }
  std::size_t size() const noexcept { return weights_.size(); }
  std::span<const double> weights() const noexcept { return weights_; }
  double operator[](std::size_t gamma) const { return weights_[gamma]; }

  /// p^l(x) = x^{l}(+1)
  double allele_frequency(int locus) const;

 private:
  int loci_;
  std::vector<double> weights_;
};

/// Law of the recombination mask on subsets of [L], symmetrized on construction
/// so that nu(I) = nu(I^c).
class SubsetLaw {
 public:
  /// `masses[I]` is the probability of subset I; must be nonnegative with unit sum.
  SubsetLaw(int loci, std::vector<double> masses);

  static SubsetLaw free_recombination(int loci);

  int loci() const noexcept { return loci_; }
  double operator[](LocusSet subset) const { return masses_[subset]; }
  std::span<const double> masses() const noexcept { return masses_; }

  /// nu^A as a law on the |A| loci of A.
  SubsetLaw marginal(LocusSet subset) const;

  /// beta_I = 1 - 2 nu^I(I) for nonempty I; beta_empty = -beta_[L].
  double beta(LocusSet subset) const;

  /// r_{l1,l2} = nu^{l1,l2}({l1}) + nu^{l1,l2}({l2})
  double pairwise_rate(int locus1, int locus2) const;

  /// Total mass on proper nonempty subsets; zero means recombination never mixes.
  double proper_mass() const;

 private:
  int loci_;
  std::vector<double> masses_;
};

/// Generalized marginal of any vector on {-1,+1}^L onto the subset A.
std::vector<double> marginal_vector(std::span<const double> x, int loci, LocusSet subset);

/// x^A. Throws std::invalid_argument for an empty subset.
HypercubeDistribution marginal(const HypercubeDistribution& x, LocusSet subset);

/// pi(x): the product of the one-locus marginals of x.
HypercubeDistribution le_projection(const HypercubeDistribution& x);

/// ||x - pi(x)||_2
double le_deviation(const HypercubeDistribution& x);

/// S^A(x)(gamma) = Cov_x[W(g), 1{g|_A = gamma}] as a vector over {-1,+1}^A.
std::vector<double> selector_marginal(const HypercubeDistribution& x, LocusSet subset,
                                      const FitnessSpec& spec);
std::vector<double> selector(const HypercubeDistribution& x, const FitnessSpec& spec);

/// R(x) = sum over proper nonempty I of nu(I) (x^I (x) x^{I^c} - x). Defined for
/// any vector x, which the Jacobian checks need.
std::vector<double> recombinator(std::span<const double> x, int loci, const SubsetLaw& nu);
std::vector<double> recombinator(const HypercubeDistribution& x, const SubsetLaw& nu);

/// Directional derivative grad R(x) h.
std::vector<double> recombinator_derivative(std::span<const double> x, int loci,
                                            const SubsetLaw& nu, std::span<const double> h);

/// Dense Jacobian of R at x in the genotype basis, row-major 2^L x 2^L.
std::vector<double> recombinator_jacobian(std::span<const double> x, int loci,
                                          const SubsetLaw& nu);

/// Theta(x) = |theta| sum_l (x^{[L]\{l}} (x) L_theta - x). Zero vector when |theta| = 0.
std::vector<double> mutator(std::span<const double> x, int loci, const MutationRates& theta);
std::vector<double> mutator(const HypercubeDistribution& x, const MutationRates& theta);

/// D^{l1,l2}(x) = Cov_x[1{g_l1 = +1}, 1{g_l2 = +1}]
double ld(const HypercubeDistribution& x, int locus1, int locus2);

/// Covariance of the genotype-frequency noise: delta(g,g') x(g) - x(g) x(g'), row-major.
std::vector<double> drift_covariance(const HypercubeDistribution& x);

/// w_I(gamma) = 2^{-L/2} prod_{l in I} gamma_l
std::vector<double> linkage_vector(int loci, LocusSet subset);

/// <w_I, grad R(x) w_J> from the closed-form triangular expression.
double recomb_jacobian_entry(const HypercubeDistribution& x, const SubsetLaw& nu, LocusSet row,
                             LocusSet column);

}  // namespace polygene
