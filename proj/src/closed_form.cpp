#include "f2f/closed_form.hpp"

#include <array>
#include <cmath>

#include "f2f/metrics.hpp"

namespace f2f {

namespace {

void require_two(const LoadVector& loads) {
  if (loads.size() != 2) throw InvalidInput("two-node closed form requires N = 2");
}

double reference_kappa(double l1, double l2) {
  return 2 + 3 * l1 + 3 * l2 + 4 * l1 * l2 + l1 * l1 + l2 * l2 + l1 * l1 * l2 + l2 * l2 * l1;
}

}  // namespace

std::pair<double, double> chain_blocking_n2(const LoadVector& loads, double p1, double p2) {
  require_two(loads);
  const CoopVector coop{p1, p2};
  const auto b = blocking_n2(solve_chain(loads, coop), coop);
  return {b[0], b[1]};
}

RationalCoeffs derive_coeffs(const LoadVector& loads) {
  require_two(loads);
  // corner index: bit 0 = p1, bit 1 = p2
  std::array<double, 4> den{};
  std::array<double, 4> num{};
  for (int corner = 0; corner < 4; ++corner) {
    const CoopVector coop{double(corner & 1), double((corner >> 1) & 1)};
    const Generator g = build_generator(loads, coop);
    const double det = normalized_system(g).determinant();
    if (!(std::abs(det) > 1e-300)) throw SolverError("singular corner system in derive_coeffs");
    den[corner] = det;
    num[corner] = blocking_n2(steady_state(g), coop)[0] * det;
  }
  const double scale = reference_kappa(loads[0], loads[1]) / den[0];

  RationalCoeffs c;
  c.kappa = scale * den[0];
  c.alpha = scale * (den[1] - den[0]);
  c.beta = scale * (den[2] - den[0]);
  c.gamma = scale * (den[3] - den[1] - den[2] + den[0]);
  c.kappa1 = scale * num[0];
  c.alpha1 = scale * (num[1] - num[0]);
  c.beta1 = scale * (num[2] - num[0]);
  c.gamma1 = -scale * (num[3] - num[1] - num[2] + num[0]);
  return c;
}

RationalCoeffs reference_coeffs(const LoadVector& loads) {
  require_two(loads);
  const double l1 = loads[0], l2 = loads[1];
  RationalCoeffs c;
  c.kappa = reference_kappa(l1, l2);
  c.alpha = l2 + l1 * l2 + 2 * l2 * l2 + l2 * l2 * l2 + l2 * l2 * l1;
  c.beta = l1 + l2 * l1 + 2 * l1 * l1 + l1 * l1 * l1 + l1 * l1 * l2;
  c.gamma = l1 * l1 * l2 + l2 * l2 * l1;
  c.kappa1 = 2 * l1 + 3 * l1 * l2 + l1 * l1 + l1 * l1 * l2 + l2 * l2 * l1;
  c.alpha1 = 2 * l2 * l2 + l1 * l2 + l1 * l2 * l2 * l2 + l2 * l2 * l2;
  c.beta1 = l2 + l1 * l1 * l2 + l1 * l1 * l1 - 2 * l1 - l1 * l2;
  c.gamma1 = l1 * l2 + l2 * l2 - l1 * l1 * l2 - l2 * l2 * l1;
  return c;
}

double b1_closed(const RationalCoeffs& c, double p1, double p2) {
  const double num = c.kappa1 + c.alpha1 * p1 + c.beta1 * p2 - c.gamma1 * p1 * p2;
  const double den = c.kappa + c.alpha * p1 + c.beta * p2 + c.gamma * p1 * p2;
  return num / den;
}

double b2_closed(const LoadVector& loads, double p1, double p2) {
  require_two(loads);
  return b1_closed(derive_coeffs(LoadVector{loads[1], loads[0]}), p2, p1);
}

CoopVector OptimalPair::caller_order() const {
  return swap_applied ? CoopVector{p2, p1} : CoopVector{p1, p2};
}

OptimalPair optimal_pair(const LoadVector& loads) {
  require_two(loads);
  OptimalPair pair;
  pair.swap_applied = loads[1] > loads[0];
  const double heavy = std::max(loads[0], loads[1]);
  const double light = std::min(loads[0], loads[1]);
  pair.p1 = 1.0;
  pair.p2 = (light / heavy) * (light / heavy);
  return pair;
}

Theorem1Quantities theorem1_quantities(const LoadVector& loads) {
  require_two(loads);
  const double l1 = loads[0], l2 = loads[1];
  if (l2 > l1) throw InvalidInput("theorem1_quantities requires l1 >= l2 (sort the loads first)");
  Theorem1Quantities t{};
  t.det_a = 1 + l1 + l2 + l1 * l2 + l2 * l2;
  t.pi10 = l1 / t.det_a;
  t.pi01 = l2 / t.det_a;
  t.pi11 = (l1 * l2 + l2 * l2) / t.det_a;
  t.b1_star = (l1 * l2 + l2 * l2 + l1 - l2 * l2 / l1) / t.det_a;
  t.b2_star = (l1 * l2 + l2 * l2) / t.det_a;
  t.a_star = l2 * l2 / t.det_a;
  return t;
}

FairLocus fair_pair_locus(const SteadyState& pi, const LoadVector& loads) {
  require_two(loads);
  if (pi.nodes() != 2) throw InvalidInput("fair_pair_locus requires N = 2");
  const double pi10 = pi[StateMask(0b01)];
  const double pi01 = pi[StateMask(0b10)];
  if (!(pi10 > 0.0)) throw InvalidInput("fair locus undefined when pi10 = 0");
  return FairLocus{(pi01 / pi10) * (loads[1] / loads[0])};
}

GradientCheck gradient_check(const LoadVector& loads, double p1, double p2, double h) {
  require_two(loads);
  if (!(h > 0.0 && h <= 1e-2)) throw InvalidInput("finite-difference step must be in (0, 1e-2]");
  if (p1 < 0.0 || p1 > 1.0 || p2 < 0.0 || p2 > 1.0) throw InvalidInput("point outside [0,1]^2");

  auto partial = [&](bool along_p1) {
    const double x = along_p1 ? p1 : p2;
    const double lo = std::max(0.0, x - h);
    const double hi = std::min(1.0, x + h);
    auto at = [&](double v) { return along_p1 ? chain_blocking_n2(loads, v, p2) : chain_blocking_n2(loads, p1, v); };
    const auto [b1_hi, b2_hi] = at(hi);
    const auto [b1_lo, b2_lo] = at(lo);
    return std::pair{(b1_hi - b1_lo) / (hi - lo), (b2_hi - b2_lo) / (hi - lo)};
  };

  GradientCheck g{};
  std::tie(g.db1dp1, g.db2dp1) = partial(true);
  std::tie(g.db1dp2, g.db2dp2) = partial(false);
  g.dot = g.db1dp1 * g.db2dp1 + g.db1dp2 * g.db2dp2;
  return g;
}

}  // namespace f2f
