#pragma once

// Independent reference computations used by the tests, the acceptance suite
// and `polygene verify`. Nothing here is used by the production code paths.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "polygene/hypercube.hpp"
#include "polygene/recombination.hpp"
#include "polygene/rng.hpp"

namespace polygene::oracle {

using VectorMap = std::function<std::vector<double>(std::span<const double>)>;

/// Central-difference Jacobian of f at x, row-major (outputs x inputs).
std::vector<double> fd_jacobian(const VectorMap& f, std::span<const double> x, double step = 1e-5);

/// Dirichlet(1, ..., 1) draw on {-1,+1}^L.
HypercubeDistribution random_distribution(int loci, Philox4x32& rng);
/// Random mask law with full support, symmetrized by SubsetLaw.
SubsetLaw random_subset_law(int loci, Philox4x32& rng);

struct Estimate {
  double value;
  double standard_error;
};

/// Fraction of sampled masks separating the two loci.
Estimate mc_pairwise_r(const RecombinationModel& model, int locus1, int locus2, std::int64_t draws,
                       std::uint64_t seed);
/// 1 - 2 * (fraction of masks containing I or missing I entirely) / 2.
Estimate mc_beta(const RecombinationModel& model, std::span<const int> subset, std::int64_t draws,
                 std::uint64_t seed);
/// Empirical mask law over all 2^L subsets (L <= 12).
std::vector<double> mc_subset_frequencies(const RecombinationModel& model, std::int64_t draws,
                                          std::uint64_t seed);
/// Genome-average harmonic rate from Monte Carlo pairwise rates.
double mc_harmonic_genome(const RecombinationModel& model, std::int64_t draws, std::uint64_t seed);

/// Beta(a, b) closed forms.
double beta_variance(double a, double b);
double beta_fourth_cumulant(double a, double b);
double beta_cdf(double a, double b, double x);

/// sup_x |F_n(x) - F(x)| of a sample against a distribution function.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Constant in the Prop.-style selector bound for U = c0 + c1 z + c2 z^2.
double selector_bound_constant(double c1, double c2);

struct SelectorBound {
  double lhs;  // |S^{l0}(x)(+1) - S^{l0}(pi(x))(+1)|
  double rhs;  // sum_{A, 1 <= |A| <= 2} L^{-|A|} ||x^{{l0} u A} - pi(.)||_2
};
SelectorBound selector_bound_terms(const HypercubeDistribution& x, int locus,
                                   const FitnessSpec& spec);

/// L S^l(pi(x))(+1) - p (1 - p) sbar for quadratic U, in closed form:
/// 4 kappa p (1 - p) (2p - 1) / L.
double lemma_selector_error(double kappa, double p, int loci);

}  // namespace polygene::oracle
