#include "polygene/hypercube.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "polygene/log.hpp"

namespace polygene {

namespace {

void check_loci(int loci) {
  if (loci < 1 || loci > kMaxExactLoci) {
    throw std::invalid_argument("exact hypercube operators need 1 <= L <= " +
                                std::to_string(kMaxExactLoci) + ", got " + std::to_string(loci));
  }
}

void check_vector(std::span<const double> x, int loci) {
  check_loci(loci);
  if (x.size() != (std::size_t{1} << loci)) {
    throw std::invalid_argument("vector length does not match 2^L");
  }
}

void check_subset(LocusSet subset, int loci) {
  if (subset & ~full_set(loci)) throw std::invalid_argument("locus subset exceeds [L]");
}

// x^I (x) y^{I^c} evaluated on all genotypes, accumulated into out with weight w.
void accumulate_product(std::span<const double> x_marg, std::span<const double> y_marg,
                        LocusSet subset, LocusSet complement, double weight,
                        std::vector<double>& out) {
  for (std::uint32_t g = 0; g < out.size(); ++g) {
    out[g] += weight * x_marg[restrict_index(g, subset)] * y_marg[restrict_index(g, complement)];
  }
}

// <w_K, x> without the 2^{-L/2} factor.
double parity_moment(std::span<const double> x, LocusSet subset) {
  double sum = 0.0;
  for (std::uint32_t g = 0; g < x.size(); ++g) {
    sum += (std::popcount(subset & ~g) & 1) ? -x[g] : x[g];
  }
  return sum;
}

}  // namespace

int set_size(LocusSet s) noexcept { return std::popcount(s); }

std::uint32_t restrict_index(std::uint32_t gamma, LocusSet subset) noexcept {
  std::uint32_t packed = 0;
  int out_bit = 0;
  while (subset) {
    const int locus = std::countr_zero(subset);
    packed |= ((gamma >> locus) & 1U) << out_bit;
    ++out_bit;
    subset &= subset - 1;
  }
  return packed;
}

std::uint32_t expand_index(std::uint32_t packed, LocusSet subset) noexcept {
  std::uint32_t gamma = 0;
  int in_bit = 0;
  while (subset) {
    const int locus = std::countr_zero(subset);
    gamma |= ((packed >> in_bit) & 1U) << locus;
    ++in_bit;
    subset &= subset - 1;
  }
  return gamma;
}

// ---------------------------------------------------------------------------

HypercubeDistribution::HypercubeDistribution(int loci, std::vector<double> weights)
    : loci_(loci), weights_(std::move(weights)) {
  check_vector(weights_, loci_);
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("distribution weights must be finite and nonnegative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("distribution weights must sum to 1");
  }
}

HypercubeDistribution HypercubeDistribution::uniform(int loci) {
  check_loci(loci);
  const std::size_t n = std::size_t{1} << loci;
  return {loci, std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

HypercubeDistribution HypercubeDistribution::point_mass(int loci, std::uint32_t gamma) {
  check_loci(loci);
  std::vector<double> w(std::size_t{1} << loci, 0.0);
  w.at(gamma) = 1.0;
  return {loci, std::move(w)};
}

HypercubeDistribution HypercubeDistribution::product(std::span<const double> plus_probabilities) {
  const int loci = static_cast<int>(plus_probabilities.size());
  check_loci(loci);
  for (double p : plus_probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("allele probability outside [0,1]");
  }
  std::vector<double> w(std::size_t{1} << loci, 1.0);
  for (std::uint32_t g = 0; g < w.size(); ++g) {
    for (int l = 0; l < loci; ++l) {
      w[g] *= ((g >> l) & 1U) ? plus_probabilities[l] : 1.0 - plus_probabilities[l];
    }
  }
  // Rounding can leave the total a few ulps away from 1.
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return {loci, std::move(w)};
}

double HypercubeDistribution::allele_frequency(int locus) const {
  if (locus < 0 || locus >= loci_) throw std::out_of_range("locus out of range");
  double p = 0.0;
  for (std::uint32_t g = 0; g < weights_.size(); ++g) {
    if ((g >> locus) & 1U) p += weights_[g];
  }
  return p;
}

// ---------------------------------------------------------------------------

SubsetLaw::SubsetLaw(int loci, std::vector<double> masses) : loci_(loci), masses_(std::move(masses)) {
  check_vector(masses_, loci_);
  double total = 0.0;
  for (double m : masses_) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw std::invalid_argument("subset law masses must be finite and nonnegative");
    }
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-10) throw std::invalid_argument("subset law must sum to 1");
  const LocusSet full = full_set(loci_);
  std::vector<double> sym(masses_.size());
  for (LocusSet s = 0; s <= full; ++s) sym[s] = 0.5 * (masses_[s] + masses_[full & ~s]);
  masses_ = std::move(sym);
  if (loci_ >= 2 && proper_mass() <= 0.0) {
    warn("recombination law puts no mass on proper subsets; the recombinator is zero");
  }
}

SubsetLaw SubsetLaw::free_recombination(int loci) {
  check_loci(loci);
  const std::size_t n = std::size_t{1} << loci;
  return {loci, std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

SubsetLaw SubsetLaw::marginal(LocusSet subset) const {
  check_subset(subset, loci_);
  if (subset == 0) throw std::invalid_argument("marginal of a subset law needs a nonempty set");
  std::vector<double> out(std::size_t{1} << set_size(subset), 0.0);
  for (LocusSet s = 0; s < masses_.size(); ++s) out[restrict_index(s, subset)] += masses_[s];
  return {set_size(subset), std::move(out)};
}

double SubsetLaw::beta(LocusSet subset) const {
  check_subset(subset, loci_);
  if (subset == 0) return -beta(full_set(loci_));
  double contains = 0.0;
  for (LocusSet s = 0; s < masses_.size(); ++s) {
    if ((s & subset) == subset) contains += masses_[s];
  }
  return 1.0 - 2.0 * contains;
}

double SubsetLaw::pairwise_rate(int locus1, int locus2) const {
  if (locus1 == locus2) throw std::invalid_argument("pairwise rate needs distinct loci");
  check_subset(singleton(locus1) | singleton(locus2), loci_);
  double r = 0.0;
  for (LocusSet s = 0; s < masses_.size(); ++s) {
    if (((s >> locus1) & 1U) != ((s >> locus2) & 1U)) r += masses_[s];
  }
  return r;
}

double SubsetLaw::proper_mass() const {
  return 1.0 - masses_.front() - masses_.back();
}

// ---------------------------------------------------------------------------

std::vector<double> marginal_vector(std::span<const double> x, int loci, LocusSet subset) {
  check_vector(x, loci);
  check_subset(subset, loci);
  std::vector<double> out(std::size_t{1} << set_size(subset), 0.0);
  for (std::uint32_t g = 0; g < x.size(); ++g) out[restrict_index(g, subset)] += x[g];
  return out;
}

HypercubeDistribution marginal(const HypercubeDistribution& x, LocusSet subset) {
  if (subset == 0) throw std::invalid_argument("marginal needs a nonempty locus subset");
  auto w = marginal_vector(x.weights(), x.loci(), subset);
  return {set_size(subset), std::move(w)};
}

HypercubeDistribution le_projection(const HypercubeDistribution& x) {
  std::vector<double> p(x.loci());
  for (int l = 0; l < x.loci(); ++l) p[l] = std::clamp(x.allele_frequency(l), 0.0, 1.0);
  return HypercubeDistribution::product(p);
}

double le_deviation(const HypercubeDistribution& x) {
  const auto pi = le_projection(x);
  double sum = 0.0;
  for (std::size_t g = 0; g < x.size(); ++g) {
    const double d = x[g] - pi[g];
    sum += d * d;
  }
  return std::sqrt(sum);
}

std::vector<double> selector_marginal(const HypercubeDistribution& x, LocusSet subset,
                                      const FitnessSpec& spec) {
  if (subset == 0) throw std::invalid_argument("selector marginal needs a nonempty locus subset");
  check_subset(subset, x.loci());
  const int loci = x.loci();
  std::vector<double> w(x.size());
  double mean_w = 0.0;
  for (std::uint32_t g = 0; g < x.size(); ++g) {
    const double z = static_cast<double>(2 * std::popcount(g) - loci) / loci;
    w[g] = spec(z);
    mean_w += x[g] * w[g];
  }
  std::vector<double> out(std::size_t{1} << set_size(subset), 0.0);
  for (std::uint32_t g = 0; g < x.size(); ++g) {
    out[restrict_index(g, subset)] += x[g] * (w[g] - mean_w);
  }
  return out;
}

std::vector<double> selector(const HypercubeDistribution& x, const FitnessSpec& spec) {
  return selector_marginal(x, full_set(x.loci()), spec);
}

std::vector<double> recombinator(std::span<const double> x, int loci, const SubsetLaw& nu) {
  check_vector(x, loci);
  if (nu.loci() != loci) throw std::invalid_argument("subset law and vector disagree on L");
  const LocusSet full = full_set(loci);
  std::vector<double> out(x.size(), 0.0);
  double proper = 0.0;
  for (LocusSet s = 1; s < full; ++s) {
    const double weight = nu[s];
    if (weight == 0.0) continue;
    proper += weight;
    const auto xs = marginal_vector(x, loci, s);
    const auto xc = marginal_vector(x, loci, full & ~s);
    accumulate_product(xs, xc, s, full & ~s, weight, out);
  }
  for (std::size_t g = 0; g < x.size(); ++g) out[g] -= proper * x[g];
  return out;
}

std::vector<double> recombinator(const HypercubeDistribution& x, const SubsetLaw& nu) {
  return recombinator(x.weights(), x.loci(), nu);
}

std::vector<double> recombinator_derivative(std::span<const double> x, int loci,
                                            const SubsetLaw& nu, std::span<const double> h) {
  check_vector(x, loci);
  check_vector(h, loci);
  if (nu.loci() != loci) throw std::invalid_argument("subset law and vector disagree on L");
  const LocusSet full = full_set(loci);
  std::vector<double> out(x.size(), 0.0);
  double proper = 0.0;
  for (LocusSet s = 1; s < full; ++s) {
    const double weight = nu[s];
    if (weight == 0.0) continue;
    proper += weight;
    const LocusSet c = full & ~s;
    const auto xs = marginal_vector(x, loci, s);
    const auto xc = marginal_vector(x, loci, c);
    const auto hs = marginal_vector(h, loci, s);
    const auto hc = marginal_vector(h, loci, c);
    accumulate_product(xs, hc, s, c, weight, out);
    accumulate_product(hs, xc, s, c, weight, out);
  }
  for (std::size_t g = 0; g < x.size(); ++g) out[g] -= proper * h[g];
  return out;
}

std::vector<double> recombinator_jacobian(std::span<const double> x, int loci,
                                          const SubsetLaw& nu) {
  check_vector(x, loci);
  const std::size_t n = x.size();
  std::vector<double> jac(n * n, 0.0);
  std::vector<double> unit(n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    unit[col] = 1.0;
    const auto column = recombinator_derivative(x, loci, nu, unit);
    unit[col] = 0.0;
    for (std::size_t row = 0; row < n; ++row) jac[row * n + col] = column[row];
  }
  return jac;
}

std::vector<double> mutator(std::span<const double> x, int loci, const MutationRates& theta) {
  check_vector(x, loci);
  std::vector<double> out(x.size(), 0.0);
  const double total = theta.total();
  if (total <= 0.0) return out;
  const double law_plus = theta.plus / total;
  for (std::uint32_t g = 0; g < x.size(); ++g) {
    for (int l = 0; l < loci; ++l) {
      const std::uint32_t flipped = g ^ (1U << l);
      const double law = ((g >> l) & 1U) ? law_plus : 1.0 - law_plus;
      out[g] += (x[g] + x[flipped]) * law - x[g];
    }
    out[g] *= total;
  }
  return out;
}

std::vector<double> mutator(const HypercubeDistribution& x, const MutationRates& theta) {
  return mutator(x.weights(), x.loci(), theta);
}

double ld(const HypercubeDistribution& x, int locus1, int locus2) {
  if (locus1 == locus2) throw std::invalid_argument("linkage disequilibrium needs distinct loci");
  check_subset(singleton(locus1) | singleton(locus2), x.loci());
  double both = 0.0;
  for (std::uint32_t g = 0; g < x.size(); ++g) {
    if (((g >> locus1) & 1U) && ((g >> locus2) & 1U)) both += x[g];
  }
  return both - x.allele_frequency(locus1) * x.allele_frequency(locus2);
}

std::vector<double> drift_covariance(const HypercubeDistribution& x) {
  const std::size_t n = x.size();
  std::vector<double> cov(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cov[i * n + j] = (i == j ? x[i] : 0.0) - x[i] * x[j];
  }
  return cov;
}

std::vector<double> linkage_vector(int loci, LocusSet subset) {
  check_loci(loci);
  check_subset(subset, loci);
  const double scale = std::pow(2.0, -0.5 * loci);
  std::vector<double> w(std::size_t{1} << loci);
  for (std::uint32_t g = 0; g < w.size(); ++g) {
    w[g] = (std::popcount(subset & ~g) & 1) ? -scale : scale;
  }
  return w;
}

double recomb_jacobian_entry(const HypercubeDistribution& x, const SubsetLaw& nu, LocusSet row,
                             LocusSet column) {
  const int loci = x.loci();
  if (nu.loci() != loci) throw std::invalid_argument("subset law and distribution disagree on L");
  check_subset(row, loci);
  check_subset(column, loci);
  if (row == column) return -nu.beta(row);
  if ((column & row) != column) return 0.0;  // column is not a proper subset of row
  const LocusSet full = full_set(loci);
  // 2^{1+L/2} <w_K, x> = 2 * parity_moment(x, K)
  double sum = 0.0;
  for (LocusSet k = 1; k < full; ++k) {
    if (nu[k] == 0.0) continue;
    if ((row & ~k) != column) continue;
    sum += nu[k] * 2.0 * parity_moment(x.weights(), row & k);
  }
  return sum;
}

}  // namespace polygene
