#include "polygene/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

namespace polygene::oracle {

std::vector<double> fd_jacobian(const VectorMap& f, std::span<const double> x, double step) {
  const std::size_t n = x.size();
  std::vector<double> probe(x.begin(), x.end());
  const std::size_t m = f(probe).size();
  std::vector<double> jac(m * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    probe[j] = x[j] + step;
    const auto up = f(probe);
    probe[j] = x[j] - step;
    const auto down = f(probe);
    probe[j] = x[j];
    for (std::size_t i = 0; i < m; ++i) jac[i * n + j] = (up[i] - down[i]) / (2.0 * step);
  }
  return jac;
}

HypercubeDistribution random_distribution(int loci, Philox4x32& rng) {
  std::vector<double> w(std::size_t{1} << loci);
  double total = 0.0;
  for (double& v : w) {
    v = rng.exponential();
    total += v;
  }
  for (double& v : w) v /= total;
  return {loci, std::move(w)};
}

SubsetLaw random_subset_law(int loci, Philox4x32& rng) {
  std::vector<double> w(std::size_t{1} << loci);
  double total = 0.0;
  for (double& v : w) {
    v = rng.exponential();
    total += v;
  }
  for (double& v : w) v /= total;
  return {loci, std::move(w)};
}

namespace {

Estimate proportion(std::int64_t hits, std::int64_t draws) {
  const double p = static_cast<double>(hits) / static_cast<double>(draws);
  return {p, std::sqrt(std::max(p * (1.0 - p), 1e-300) / static_cast<double>(draws))};
}

bool bit(std::span<const std::uint64_t> mask, int l) { return (mask[l / 64] >> (l % 64)) & 1U; }

}  // namespace

Estimate mc_pairwise_r(const RecombinationModel& model, int locus1, int locus2, std::int64_t draws,
                       std::uint64_t seed) {
  Philox4x32 rng(seed);
  std::vector<std::uint64_t> mask(words_for(model.loci()));
  std::int64_t split = 0;
  for (std::int64_t k = 0; k < draws; ++k) {
    model.sample_mask(rng, mask);
    split += bit(mask, locus1) != bit(mask, locus2);
  }
  return proportion(split, draws);
}

Estimate mc_beta(const RecombinationModel& model, std::span<const int> subset, std::int64_t draws,
                 std::uint64_t seed) {
  Philox4x32 rng(seed);
  std::vector<std::uint64_t> mask(words_for(model.loci()));
  std::int64_t broken = 0;
  for (std::int64_t k = 0; k < draws; ++k) {
    model.sample_mask(rng, mask);
    int inside = 0;
    for (int l : subset) inside += bit(mask, l);
    broken += inside != 0 && inside != static_cast<int>(subset.size());
  }
  return proportion(broken, draws);
}

std::vector<double> mc_subset_frequencies(const RecombinationModel& model, std::int64_t draws,
                                          std::uint64_t seed) {
  if (model.loci() > kMaxExactLoci) throw std::invalid_argument("mask law needs L <= 12");
  Philox4x32 rng(seed);
  std::vector<std::uint64_t> mask(1);
  std::vector<double> freq(std::size_t{1} << model.loci(), 0.0);
  for (std::int64_t k = 0; k < draws; ++k) {
    model.sample_mask(rng, mask);
    freq[mask[0]] += 1.0;
  }
  for (double& f : freq) f /= static_cast<double>(draws);
  return freq;
}

double mc_harmonic_genome(const RecombinationModel& model, std::int64_t draws, std::uint64_t seed) {
  const int loci = model.loci();
  Philox4x32 rng(seed);
  std::vector<std::uint64_t> mask(words_for(loci));
  std::vector<std::int64_t> split(static_cast<std::size_t>(loci) * loci, 0);
  for (std::int64_t k = 0; k < draws; ++k) {
    model.sample_mask(rng, mask);
    for (int a = 0; a < loci; ++a)
      for (int b = a + 1; b < loci; ++b) split[a * loci + b] += bit(mask, a) != bit(mask, b);
  }
  double genome_inverse = 0.0;
  for (int l = 0; l < loci; ++l) {
    double inv = 0.0;
    for (int o = 0; o < loci; ++o) {
      if (o == l) continue;
      const auto n = split[std::min(l, o) * loci + std::max(l, o)];
      inv += static_cast<double>(draws) / static_cast<double>(n);
    }
    genome_inverse += inv / (loci - 1);
  }
  return loci / genome_inverse;
}

double beta_variance(double a, double b) { return a * b / ((a + b) * (a + b) * (a + b + 1.0)); }

double beta_fourth_cumulant(double a, double b) {
  const double excess = 6.0 * ((a - b) * (a - b) * (a + b + 1.0) - a * b * (a + b + 2.0)) /
                        (a * b * (a + b + 2.0) * (a + b + 3.0));
  const double v = beta_variance(a, b);
  return excess * v * v;
}

double beta_cdf(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::ibeta(a, b, x);
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double selector_bound_constant(double c1, double c2) {
  return 2.0 * std::abs(c1) + 8.0 * std::sqrt(2.0) * std::abs(c2);
}

SelectorBound selector_bound_terms(const HypercubeDistribution& x, int locus,
                                   const FitnessSpec& spec) {
  const int loci = x.loci();
  const LocusSet self = singleton(locus);
  const auto here = selector_marginal(x, self, spec);
  const auto there = selector_marginal(le_projection(x), self, spec);
  SelectorBound out{std::abs(here[1] - there[1]), 0.0};
  auto deviation = [&x](LocusSet a) { return le_deviation(marginal(x, a)); };
  const double inv_l = 1.0 / loci;
  for (int a = 0; a < loci; ++a) {
    if (a == locus) continue;
    out.rhs += inv_l * deviation(self | singleton(a));
    for (int b = a + 1; b < loci; ++b) {
      if (b == locus) continue;
      out.rhs += inv_l * inv_l * deviation(self | singleton(a) | singleton(b));
    }
  }
  return out;
}

double lemma_selector_error(double kappa, double p, int loci) {
  return 4.0 * kappa * p * (1.0 - p) * (2.0 * p - 1.0) / loci;
}

}  // namespace polygene::oracle
