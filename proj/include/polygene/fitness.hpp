#pragma once

#include <string>
#include <variant>

namespace polygene {

/// U(z) = beta * z.
struct LinearSelection {
  double beta = 0.0;
};

/// U(z) = -kappa * (z - optimum)^2. kappa > 0 is stabilizing, kappa < 0 disruptive.
struct QuadraticSelection {
  double kappa = 0.0;
  double optimum = 0.0;
};

/// Log-fitness as a polynomial of the additive trait: W(g) = U(Z(g)).
class FitnessSpec {
 public:
  FitnessSpec() = default;

  static FitnessSpec linear(double beta);
  static FitnessSpec quadratic(double kappa, double optimum = 0.0);

  /// U(z)
  double operator()(double z) const noexcept;
  /// U'(z)
  double derivative(double z) const noexcept;

  bool is_linear() const noexcept { return std::holds_alternative<LinearSelection>(form_); }
  bool is_quadratic() const noexcept { return std::holds_alternative<QuadraticSelection>(form_); }
  const LinearSelection& linear_form() const { return std::get<LinearSelection>(form_); }
  const QuadraticSelection& quadratic_form() const { return std::get<QuadraticSelection>(form_); }

  /// Coefficients of U as c0 + c1 z + c2 z^2.
  struct Polynomial {
    double c0, c1, c2;
  };
  Polynomial polynomial() const noexcept;

  /// True when U is constant (beta = 0 or kappa = 0).
  bool is_neutral() const noexcept;

  std::string describe() const;

 private:
  explicit FitnessSpec(std::variant<LinearSelection, QuadraticSelection> form) : form_(form) {}
  std::variant<LinearSelection, QuadraticSelection> form_{LinearSelection{0.0}};
};

/// Per-locus mutation rates on the diffusion time scale: theta_plus for -1 -> +1 and
/// theta_minus for +1 -> -1.
struct MutationRates {
  double plus = 0.0;
  double minus = 0.0;

  MutationRates() = default;
  MutationRates(double theta_plus, double theta_minus);

  double total() const noexcept { return plus + minus; }
  /// P(+1) under the mutational law. Requires total() > 0.
  double law_plus() const;
  /// theta_plus (1 - x) - theta_minus x
  double drift(double x) const noexcept { return plus * (1.0 - x) - minus * x; }
};

}  // namespace polygene
