#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polygene/fitness.hpp"

namespace polygene {

// Diagnostics shared by `polygene verify` and the acceptance binary. Each
// compares a production code path against an independent oracle.

struct JacobianCheck {
  double max_fd_error = 0.0;       // analytic <w_I, grad R w_J> vs central differences
  double max_diagonal_error = 0.0; // |entry(I, I) + beta_I|
  double max_outside_pattern = 0.0;  // |entry(I, J)| for J not a subset of I
  double max_dense_error = 0.0;    // exact dense Jacobian vs central differences
};
JacobianCheck recombinator_jacobian_check(int loci, int instances, std::uint64_t seed);

struct ConsistencyCheck {
  double selector = 0.0;      // max |marginal_A S(x) - S^A(x)|
  double recombinator = 0.0;  // max |marginal_A R_nu(x) - R_{nu^A}(x^A)|
  double mutator = 0.0;       // max |marginal_A Theta(x) - Theta(x^A)|
  int instances = 0;
};
ConsistencyCheck marginal_consistency_check(int instances, std::uint64_t seed);

struct SelectorDecayCheck {
  std::vector<int> loci;
  std::vector<double> max_error;      // max_l |L S^l(pi x)(+1) - p(1-p) sbar| per L
  double max_closed_form_error = 0.0; // against 4 kappa p(1-p)(2p-1)/L
  int violations = 0;                 // L * error above 2 |kappa| / (3 sqrt 3)
  int instances = 0;
};
/// Random product measures with L in [min_loci, max_loci].
SelectorDecayCheck selector_decay_check(int min_loci, int max_loci, int instances,
                                        std::uint64_t seed);

struct SelectorBoundCheck {
  int violations = 0;
  int instances = 0;
  double max_ratio = 0.0;  // lhs / (C rhs)
};
SelectorBoundCheck selector_bound_check(int instances, std::uint64_t seed);

struct VerifyEntry {
  std::string suite;
  std::string check;
  double observed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::vector<VerifyEntry> entries;
  std::vector<std::string> suites;  // suites that ran
  bool passed() const;
};

/// Names of the property suites, in run order.
std::vector<std::string> verify_suites();

/// Run every suite whose name contains one of the comma-separated filter
/// tokens (all suites for an empty filter). Failures become report entries.
VerifyReport run_verify(const std::string& filter, std::uint64_t seed = 1);

}  // namespace polygene
