#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "polygene/fitness.hpp"

namespace polygene {

/// Number of 64-bit words holding `loci` alleles.
constexpr int words_for(int loci) noexcept { return (loci + 63) / 64; }

/// Count of +1 alleles in a packed genome.
inline int plus_count(std::span<const std::uint64_t> words) noexcept {
  int count = 0;
  for (auto w : words) count += std::popcount(w);
  return count;
}

/// Additive trait of a packed genome with `loci` loci: (2 * #plus - L) / L.
inline double trait_of(std::span<const std::uint64_t> words, int loci) noexcept {
  return static_cast<double>(2 * plus_count(words) - loci) / loci;
}

/// A haploid genome in {-1,+1}^L. Bit i of the packed words is set iff the
/// allele at locus i (0-based) is +1, so for L <= 63 the packed word is the
/// canonical genotype index sum_i 2^i (g_i + 1)/2.
class Genotype {
 public:
  explicit Genotype(int loci);  // all -1

  static Genotype from_alleles(std::span<const int> alleles);
  static Genotype from_index(int loci, std::uint64_t index);

  int loci() const noexcept { return loci_; }
  int allele(int locus) const;
  void set_allele(int locus, int value);

  std::uint64_t index() const;  // requires loci <= 63
  std::span<const std::uint64_t> words() const noexcept { return words_; }
  std::span<std::uint64_t> words() noexcept { return words_; }

  bool operator==(const Genotype&) const = default;

 private:
  int loci_;
  std::vector<std::uint64_t> words_;
};

/// Z(g) = (1/L) sum_l g_l
double trait_value(const Genotype& g) noexcept;

/// W(g) = U(Z(g))
double fitness(const Genotype& g, const FitnessSpec& spec) noexcept;

}  // namespace polygene
