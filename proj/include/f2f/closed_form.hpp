#pragma once

// Two-node model in closed form.
//
// b1(p1, p2) = (kappa1 + alpha1 p1 + beta1 p2 - gamma1 p1 p2)
//            / (kappa  + alpha  p1 + beta  p2 + gamma  p1 p2)
//
// with b2(p1, p2; l1, l2) = b1(p2, p1; l2, l1).

#include "f2f/chain.hpp"

namespace f2f {

struct RationalCoeffs {
  double kappa = 0, alpha = 0, beta = 0, gamma = 0;
  double kappa1 = 0, alpha1 = 0, beta1 = 0, gamma1 = 0;
};

/// Coefficients of b1 recovered from the chain itself. Numerator and
/// denominator are bilinear in (p1, p2), so evaluating det(A) and b1 * det(A)
/// at the four corners of [0,1]^2 pins them down exactly; the common scale is
/// fixed by matching kappa to its polynomial in the loads.
RationalCoeffs derive_coeffs(const LoadVector& loads);

/// The reference coefficient polynomials. The numerator terms alpha1 and
/// beta1 carry transcription errors; use derive_coeffs for computation.
RationalCoeffs reference_coeffs(const LoadVector& loads);

double b1_closed(const RationalCoeffs& c, double p1, double p2);

/// b2 through the node-swap symmetry.
double b2_closed(const LoadVector& loads, double p1, double p2);

struct OptimalPair {
  double p1 = 1.0;  ///< in load-sorted coordinates (heavier node first)
  double p2 = 1.0;
  bool swap_applied = false;

  /// The pair in the caller's original node order.
  CoopVector caller_order() const;
};

/// p = (1, (l2/l1)^2) for l1 >= l2, sorting the loads first if needed.
OptimalPair optimal_pair(const LoadVector& loads);

struct Theorem1Quantities {
  double det_a, pi10, pi01, pi11, b1_star, b2_star, a_star;
};

/// Steady state, blocking and acceptance rate at the optimal pair, from the
/// explicit formulas. Requires l1 >= l2.
Theorem1Quantities theorem1_quantities(const LoadVector& loads);

/// Fair locus p2 = slope * p1 with slope = (pi01 / pi10) (l2 / l1).
struct FairLocus {
  double slope;
  double operator()(double p1) const { return slope * p1; }
};

FairLocus fair_pair_locus(const SteadyState& pi, const LoadVector& loads);

struct GradientCheck {
  double db1dp1, db1dp2, db2dp1, db2dp2;
  double dot;  ///< grad b1 . grad b2
};

/// Finite-difference partials of the chain-based b1, b2. Central differences
/// in the interior; one-sided at the edges of [0,1]. h must be in (0, 1e-2].
GradientCheck gradient_check(const LoadVector& loads, double p1, double p2, double h = 1e-5);

/// Chain-based (b1, b2) at a two-node operating point.
std::pair<double, double> chain_blocking_n2(const LoadVector& loads, double p1, double p2);

}  // namespace f2f
