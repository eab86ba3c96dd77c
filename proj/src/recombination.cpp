#include "polygene/recombination.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace polygene {

// --- TabulatedDensity --------------------------------------------------------

TabulatedDensity::TabulatedDensity(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw std::invalid_argument("density table needs at least 2 points");
  for (double v : values_) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("recombination density must be strictly positive and finite");
    }
  }
  const double h = 1.0 / static_cast<double>(values_.size() - 1);
  cdf_.assign(values_.size(), 0.0);
  for (std::size_t i = 1; i < values_.size(); ++i) {
    cdf_[i] = cdf_[i - 1] + 0.5 * h * (values_[i - 1] + values_[i]);
  }
  const double total = cdf_.back();
  for (double& v : values_) v /= total;
  for (double& c : cdf_) c /= total;
  cdf_.back() = 1.0;
}

TabulatedDensity TabulatedDensity::uniform() { return TabulatedDensity(std::vector<double>(2, 1.0)); }

TabulatedDensity TabulatedDensity::from_function(const std::function<double(double)>& f,
                                                 int grid_points) {
  if (grid_points < 2) throw std::invalid_argument("density grid needs at least 2 points");
  std::vector<double> v(grid_points);
  for (int i = 0; i < grid_points; ++i) v[i] = f(static_cast<double>(i) / (grid_points - 1));
  return TabulatedDensity(std::move(v));
}

TabulatedDensity TabulatedDensity::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open density file " + path.string());
  std::vector<std::pair<double, double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double x, d;
    if (!(fields >> x)) continue;
    if (!(fields >> d)) throw std::runtime_error("density file: expected two columns: " + line);
    rows.emplace_back(x, d);
  }
  if (rows.size() < 2) throw std::runtime_error("density file needs at least two rows");
  std::sort(rows.begin(), rows.end());
  if (rows.front().first > 1e-12 || rows.back().first < 1.0 - 1e-12) {
    throw std::runtime_error("density file must cover [0, 1]");
  }
  auto interp = [&rows](double x) {
    auto it = std::lower_bound(rows.begin(), rows.end(), std::make_pair(x, -1e300));
    if (it == rows.begin()) return it->second;
    if (it == rows.end()) return rows.back().second;
    const auto& [x1, d1] = *it;
    const auto& [x0, d0] = *(it - 1);
    if (x1 == x0) return d1;
    return d0 + (d1 - d0) * (x - x0) / (x1 - x0);
  };
  return from_function(interp, kDefaultGridPoints);
}

double TabulatedDensity::operator()(double x) const {
  x = std::clamp(x, 0.0, 1.0);
  const double scaled = x * static_cast<double>(values_.size() - 1);
  const auto j = std::min(static_cast<std::size_t>(scaled), values_.size() - 2);
  const double t = scaled - static_cast<double>(j);
  return values_[j] + (values_[j + 1] - values_[j]) * t;
}

double TabulatedDensity::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double h = 1.0 / static_cast<double>(values_.size() - 1);
  const double scaled = x / h;
  const auto j = std::min(static_cast<std::size_t>(scaled), values_.size() - 2);
  const double t = scaled - static_cast<double>(j);
  return cdf_[j] + h * (values_[j] * t + 0.5 * (values_[j + 1] - values_[j]) * t * t);
}

double TabulatedDensity::mass(double a, double b) const {
  if (b < a) std::swap(a, b);
  return cdf(b) - cdf(a);
}

double TabulatedDensity::inverse_cdf(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double h = 1.0 / static_cast<double>(values_.size() - 1);
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto j = static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(it - cdf_.begin() - 1, 0, static_cast<std::ptrdiff_t>(values_.size()) - 2));
  // Solve h (v_j t + dv t^2 / 2) = u - cdf_j for t in [0, 1].
  const double target = (u - cdf_[j]) / h;
  const double vj = values_[j];
  const double half_dv = 0.5 * (values_[j + 1] - values_[j]);
  const double disc = std::max(vj * vj + 4.0 * half_dv * target, 0.0);
  const double t = 2.0 * target / (vj + std::sqrt(disc));
  return std::clamp((static_cast<double>(j) + t) * h, 0.0, 1.0);
}

// --- RecombinationModel ------------------------------------------------------

RecombinationModel::RecombinationModel(Kind kind, int loci, double lambda, TabulatedDensity density)
    : kind_(kind), loci_(loci), lambda_(lambda), density_(std::move(density)) {
  if (loci < 1) throw std::invalid_argument("recombination model needs at least one locus");
}

RecombinationModel RecombinationModel::free(int loci) {
  return {Kind::free, loci, 0.0, TabulatedDensity::uniform()};
}

RecombinationModel RecombinationModel::single_crossover(int loci, TabulatedDensity density) {
  return {Kind::single_crossover, loci, 1.0, std::move(density)};
}

RecombinationModel RecombinationModel::poisson_crossover(int loci, double mean_crossovers,
                                                         TabulatedDensity density) {
  if (!(mean_crossovers > 0.0) || !std::isfinite(mean_crossovers)) {
    throw std::invalid_argument("poisson crossover needs a positive finite mean");
  }
  return {Kind::poisson_crossover, loci, mean_crossovers, std::move(density)};
}

const char* RecombinationModel::kind_name(Kind kind) noexcept {
  switch (kind) {
    case Kind::free: return "free";
    case Kind::single_crossover: return "single";
    case Kind::poisson_crossover: return "poisson";
  }
  return "unknown";
}

void RecombinationModel::sample_mask(Philox4x32& rng, std::span<std::uint64_t> mask) const {
  const int words = words_for(loci_);
  if (static_cast<int>(mask.size()) != words) throw std::invalid_argument("mask has wrong size");
  const int tail = loci_ % 64;
  const std::uint64_t tail_mask = tail == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << tail) - 1;

  switch (kind_) {
    case Kind::free: {
      for (auto& w : mask) w = rng();
      break;
    }
    case Kind::single_crossover: {
      const double x = density_.inverse_cdf(rng.uniform());
      // J = {l : (l+1)/(L+1) <= x} is the prefix of length k.
      auto k = static_cast<int>(std::floor(x * (loci_ + 1)));
      k = std::clamp(k, 0, loci_);
      while (k < loci_ && position(k) <= x) ++k;
      while (k > 0 && position(k - 1) > x) --k;
      for (int i = 0; i < words; ++i) {
        const int bits = std::clamp(k - 64 * i, 0, 64);
        mask[i] = bits == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
      }
      break;
    }
    case Kind::poisson_crossover: {
      const auto n = rng.poisson(lambda_);
      thread_local std::vector<double> points;
      points.resize(n);
      for (auto& p : points) p = density_.inverse_cdf(rng.uniform());
      std::sort(points.begin(), points.end());
      std::fill(mask.begin(), mask.end(), 0);
      std::size_t passed = 0;
      for (int l = 0; l < loci_; ++l) {
        const double pos = position(l);
        while (passed < points.size() && points[passed] <= pos) ++passed;
        if (passed % 2 == 0) mask[l / 64] |= std::uint64_t{1} << (l % 64);
      }
      break;
    }
  }
  mask[words - 1] &= tail_mask;
}

std::vector<std::uint64_t> RecombinationModel::sample_mask(Philox4x32& rng) const {
  std::vector<std::uint64_t> mask(words_for(loci_));
  sample_mask(rng, mask);
  return mask;
}

double RecombinationModel::pairwise_r(int locus1, int locus2) const {
  if (locus1 == locus2) throw std::invalid_argument("pairwise_r needs distinct loci");
  if (locus1 < 0 || locus2 < 0 || locus1 >= loci_ || locus2 >= loci_) {
    throw std::out_of_range("pairwise_r: locus out of range");
  }
  const double a = position(std::min(locus1, locus2));
  const double b = position(std::max(locus1, locus2));
  switch (kind_) {
    case Kind::free: return 0.5;
    case Kind::single_crossover: return density_.mass(a, b);
    case Kind::poisson_crossover: return 0.5 * (1.0 - std::exp(-2.0 * intensity_mass(a, b)));
  }
  return 0.0;
}

HarmonicStats RecombinationModel::harmonic_stats() const {
  if (loci_ < 2) throw std::domain_error("harmonic recombination needs at least two loci");
  HarmonicStats stats;
  stats.per_locus.assign(loci_, 0.0);
  std::vector<double> inverse_sum(loci_, 0.0);
  for (int a = 0; a < loci_; ++a) {
    for (int b = a + 1; b < loci_; ++b) {
      const double r = pairwise_r(a, b);
      if (!(r > 0.0)) {
        throw std::domain_error("degenerate recombination: loci " + std::to_string(a) + " and " +
                                std::to_string(b) + " never recombine");
      }
      inverse_sum[a] += 1.0 / r;
      inverse_sum[b] += 1.0 / r;
    }
  }
  double genome_inverse = 0.0;
  for (int l = 0; l < loci_; ++l) {
    stats.per_locus[l] = static_cast<double>(loci_ - 1) / inverse_sum[l];
    genome_inverse += 1.0 / stats.per_locus[l];
  }
  stats.genome = static_cast<double>(loci_) / genome_inverse;
  return stats;
}

double RecombinationModel::beta_subset(std::span<const int> subset) const {
  if (subset.empty()) throw std::invalid_argument("beta_subset needs a nonempty subset");
  std::vector<int> loci(subset.begin(), subset.end());
  std::sort(loci.begin(), loci.end());
  if (std::adjacent_find(loci.begin(), loci.end()) != loci.end()) {
    throw std::invalid_argument("beta_subset: repeated locus");
  }
  if (loci.front() < 0 || loci.back() >= loci_) throw std::out_of_range("beta_subset: locus");
  if (loci.size() == 1) return 0.0;
  switch (kind_) {
    case Kind::free: return 1.0 - std::ldexp(1.0, 1 - static_cast<int>(loci.size()));
    case Kind::single_crossover: return density_.mass(position(loci.front()), position(loci.back()));
    case Kind::poisson_crossover: {
      // No recombination within I <=> every gap between consecutive loci of I
      // holds an even number of crossover points.
      double unbroken = 1.0;
      for (std::size_t i = 1; i < loci.size(); ++i) {
        const double m = intensity_mass(position(loci[i - 1]), position(loci[i]));
        unbroken *= 0.5 * (1.0 + std::exp(-2.0 * m));
      }
      return 1.0 - unbroken;
    }
  }
  return 0.0;
}

SubsetLaw RecombinationModel::subset_law() const {
  if (loci_ > kMaxExactLoci) throw std::invalid_argument("exact subset law needs L <= 12");
  const std::size_t n = std::size_t{1} << loci_;
  std::vector<double> masses(n, 0.0);
  switch (kind_) {
    case Kind::free:
      std::fill(masses.begin(), masses.end(), 1.0 / static_cast<double>(n));
      break;
    case Kind::single_crossover:
      for (int k = 0; k <= loci_; ++k) {
        const double lo = static_cast<double>(k) / (loci_ + 1);
        const double hi = static_cast<double>(k + 1) / (loci_ + 1);
        masses[(std::size_t{1} << k) - 1] += density_.mass(lo, hi);
      }
      break;
    case Kind::poisson_crossover:
      for (LocusSet s = 0; s < n; ++s) {
        double prob = 1.0;
        double prev = 0.0;
        bool prev_in = true;  // the segment before locus 0 starts inside J
        for (int l = 0; l < loci_; ++l) {
          const double even = 0.5 * (1.0 + std::exp(-2.0 * intensity_mass(prev, position(l))));
          const bool in = (s >> l) & 1U;
          prob *= (in == prev_in) ? even : 1.0 - even;
          prev = position(l);
          prev_in = in;
        }
        masses[s] = prob;
      }
      break;
  }
  return {loci_, std::move(masses)};
}

double RecombinationModel::strong_recombination_ratio(double rho) const {
  if (!(rho > 1.0)) return std::numeric_limits<double>::quiet_NaN();
  const double l = static_cast<double>(loci_);
  return rho * harmonic_stats().genome / (l * l * std::log(rho));
}

}  // namespace polygene
