#pragma once

#include <vector>

namespace polygene {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Jacobi rule on [-1, 1] for the weight (1 - t)^alpha (1 + t)^beta,
/// alpha, beta > -1, by Golub-Welsch.
QuadratureRule gauss_jacobi(int n, double alpha, double beta);

/// Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

}  // namespace polygene
