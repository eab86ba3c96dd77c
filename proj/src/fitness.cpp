#include "polygene/fitness.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "polygene/log.hpp"

namespace polygene {

FitnessSpec FitnessSpec::linear(double beta) {
  if (!std::isfinite(beta)) throw std::invalid_argument("fitness: beta must be finite");
  return FitnessSpec(LinearSelection{beta});
}

FitnessSpec FitnessSpec::quadratic(double kappa, double optimum) {
  if (!std::isfinite(kappa) || !std::isfinite(optimum)) {
    throw std::invalid_argument("fitness: kappa and optimum must be finite");
  }
  if (optimum < -1.0 || optimum > 1.0) {
    warn("fitness: optimum outside [-1, 1] is unreachable by the trait");
  }
  return FitnessSpec(QuadraticSelection{kappa, optimum});
}

double FitnessSpec::operator()(double z) const noexcept {
  if (const auto* lin = std::get_if<LinearSelection>(&form_)) return lin->beta * z;
  const auto& quad = std::get<QuadraticSelection>(form_);
  const double d = z - quad.optimum;
  return -quad.kappa * d * d;
}

double FitnessSpec::derivative(double z) const noexcept {
  if (const auto* lin = std::get_if<LinearSelection>(&form_)) return lin->beta;
  const auto& quad = std::get<QuadraticSelection>(form_);
  return -2.0 * quad.kappa * (z - quad.optimum);
}

FitnessSpec::Polynomial FitnessSpec::polynomial() const noexcept {
  if (const auto* lin = std::get_if<LinearSelection>(&form_)) return {0.0, lin->beta, 0.0};
  const auto& q = std::get<QuadraticSelection>(form_);
  return {-q.kappa * q.optimum * q.optimum, 2.0 * q.kappa * q.optimum, -q.kappa};
}

bool FitnessSpec::is_neutral() const noexcept {
  if (const auto* lin = std::get_if<LinearSelection>(&form_)) return lin->beta == 0.0;
  return std::get<QuadraticSelection>(form_).kappa == 0.0;
}

std::string FitnessSpec::describe() const {
  std::ostringstream out;
  if (const auto* lin = std::get_if<LinearSelection>(&form_)) {
    out << "linear(beta=" << lin->beta << ")";
  } else {
    const auto& q = std::get<QuadraticSelection>(form_);
    out << "quadratic(kappa=" << q.kappa << ", optimum=" << q.optimum << ")";
  }
  return out.str();
}

MutationRates::MutationRates(double theta_plus, double theta_minus)
    : plus(theta_plus), minus(theta_minus) {
  if (!(theta_plus >= 0.0) || !(theta_minus >= 0.0) || !std::isfinite(theta_plus) ||
      !std::isfinite(theta_minus)) {
    throw std::invalid_argument("mutation rates must be finite and nonnegative");
  }
}

double MutationRates::law_plus() const {
  if (total() <= 0.0) throw std::domain_error("mutational law undefined for zero total rate");
  return plus / total();
}

}  // namespace polygene
