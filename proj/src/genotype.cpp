#include "polygene/genotype.hpp"

#include <stdexcept>
#include <string>

namespace polygene {

Genotype::Genotype(int loci) : loci_(loci) {
  if (loci < 1) throw std::invalid_argument("genotype needs at least one locus");
  words_.assign(words_for(loci), 0);
}

Genotype Genotype::from_alleles(std::span<const int> alleles) {
  Genotype g(static_cast<int>(alleles.size()));
  for (int i = 0; i < g.loci_; ++i) g.set_allele(i, alleles[i]);
  return g;
}

Genotype Genotype::from_index(int loci, std::uint64_t index) {
  if (loci > 63) throw std::invalid_argument("genotype index form needs loci <= 63");
  if (index >> loci) throw std::invalid_argument("genotype index out of range");
  Genotype g(loci);
  g.words_[0] = index;
  return g;
}

int Genotype::allele(int locus) const {
  if (locus < 0 || locus >= loci_) throw std::out_of_range("locus " + std::to_string(locus));
  return ((words_[locus / 64] >> (locus % 64)) & 1U) ? 1 : -1;
}

void Genotype::set_allele(int locus, int value) {
  if (locus < 0 || locus >= loci_) throw std::out_of_range("locus " + std::to_string(locus));
  if (value != 1 && value != -1) throw std::invalid_argument("allele must be -1 or +1");
  const std::uint64_t bit = std::uint64_t{1} << (locus % 64);
  if (value == 1) {
    words_[locus / 64] |= bit;
  } else {
    words_[locus / 64] &= ~bit;
  }
}

std::uint64_t Genotype::index() const {
  if (loci_ > 63) throw std::logic_error("genotype index form needs loci <= 63");
  return words_[0];
}

double trait_value(const Genotype& g) noexcept { return trait_of(g.words(), g.loci()); }

double fitness(const Genotype& g, const FitnessSpec& spec) noexcept { return spec(trait_value(g)); }

}  // namespace polygene
