#include "f2f/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace f2f {

FairnessMatrix fairness_matrix(const SteadyState& pi, const LoadVector& loads) {
  const std::size_t n = loads.size();
  if (pi.nodes() != n) throw InvalidInput("dimension mismatch in fairness_matrix");
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, n);
  for (std::uint32_t bits = 0; bits < pi.states(); ++bits) {
    const StateMask s(bits);
    for (std::size_t i = 0; i < n; ++i) {
      if (!s.busy(i)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (!s.busy(j)) f(i, j) += pi[s];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) f.row(i) *= loads[i];
  for (std::size_t i = 0; i < n; ++i) {
    f(i, i) = 0.0;
    f(i, i) = -f.col(i).sum();
  }
  return FairnessMatrix{std::move(f)};
}

std::size_t heaviest_node(const LoadVector& loads) {
  const auto v = loads.values();
  return static_cast<std::size_t>(std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

std::vector<Ratio> model_ratios(const LoadVector& loads, const CoopVector& p) {
  const SteadyState pi = solve_chain(loads, p);
  return flows(acceptance_matrix(pi, loads, p)).ratios;
}

double g_residual(const LoadVector& loads, const CoopVector& p) {
  const auto ratios = model_ratios(loads, p);
  const std::size_t anchor = heaviest_node(loads);
  double g = 0.0;
  for (std::size_t j = 0; j < ratios.size(); ++j) {
    if (j == anchor) continue;
    if (!ratios[j]) return std::numeric_limits<double>::infinity();
    g += std::abs(1.0 - *ratios[j]);
  }
  return g;
}

SolveReport fixed_point(const LoadVector& loads, const FixedPointOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidInput("fixed_point tolerance must be positive");
  if (!(options.pinned_value > 0.0 && options.pinned_value <= 1.0)) {
    throw InvalidInput("pinned probability must lie in (0, 1]");
  }
  const std::size_t n = loads.size();
  const std::size_t anchor = options.sort_loads ? heaviest_node(loads) : 0;

  Eigen::VectorXd p = Eigen::VectorXd::Ones(n);
  p[anchor] = options.pinned_value;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[anchor] = options.pinned_value;

  SolveReport report;
  report.residual = std::numeric_limits<double>::infinity();
  bool raw_feasible = true;
  for (std::size_t it = 1; it <= options.max_iters; ++it) {
    const CoopVector coop(std::vector<double>(p.data(), p.data() + n));
    Eigen::MatrixXd f = fairness_matrix(solve_chain(loads, coop), loads).f;
    f.row(anchor).setZero();
    f(anchor, anchor) = 1.0;

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(f);
    if (!lu.isInvertible()) {
      std::ostringstream os;
      os << "pinned fairness system is singular at iteration " << it << " (rank " << lu.rank() << ")";
      throw SolverError(os.str());
    }
    Eigen::VectorXd next = lu.solve(rhs);
    if (next.maxCoeff() > 1.0) {
      report.normalized = true;
      next /= next.maxCoeff();
    }
    raw_feasible = next.minCoeff() >= 0.0 && next.maxCoeff() <= 1.0;
    // keep the iterate inside the domain the chain accepts
    next = next.cwiseMax(0.0).cwiseMin(1.0);

    report.residual = (next - p).lpNorm<Eigen::Infinity>();
    report.iterations = it;
    p = next;
    if (report.residual < options.tol) {
      report.converged = true;
      break;
    }
  }
  report.p_star = CoopVector(std::vector<double>(p.data(), p.data() + n));
  report.feasible = raw_feasible;
  return report;
}

std::optional<std::size_t> select_node(const std::vector<Ratio>& ratios, double eps) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (!ratios[i] || *ratios[i] < 1.0 + eps) continue;
    if (!best || *ratios[i] > *ratios[*best]) best = i;
  }
  return best;
}

std::pair<SolveReport, BisectTrace> centralized_bisect(const LoadVector& loads, double eps, std::size_t max_steps) {
  if (!(eps > 0.0)) throw InvalidInput("eps must be positive");
  const std::size_t n = loads.size();
  CoopVector p = CoopVector::ones(n);
  BisectTrace trace;
  SolveReport report;

  std::size_t steps_left = max_steps;
  for (;;) {
    BisectRound round{model_ratios(loads, p), std::nullopt, p, {}};
    round.selected = select_node(round.ratios, eps);
    if (!round.selected || steps_left == 0) {
      report.converged = !round.selected;
      trace.rounds.push_back(std::move(round));
      break;
    }
    const std::size_t j = *round.selected;
    double lo = 0.0;
    double hi = p[j];
    for (;;) {
      const double mid = 0.5 * (lo + hi);
      p = p.with(j, mid);
      const Ratio rj = model_ratios(loads, p)[j];
      const double r = rj.value_or(std::numeric_limits<double>::infinity());
      round.steps.push_back({lo, hi, mid, r});
      if (std::abs(r - 1.0) <= eps || hi - lo < eps / 10.0) break;
      if (r > 1.0) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    trace.rounds.push_back(std::move(round));
    --steps_left;
  }

  report.p_star = p;
  report.iterations = max_steps - steps_left;
  report.residual = g_residual(loads, p);
  report.feasible = report.converged;
  return {std::move(report), std::move(trace)};
}

std::vector<ParetoCell> pareto_scan(const LoadVector& loads, std::size_t grid) {
  if (loads.size() != 2) throw InvalidInput("pareto_scan requires N = 2");
  if (grid < 2) throw InvalidInput("pareto grid needs at least 2 points per axis");
  std::vector<ParetoCell> cells;
  cells.reserve(grid * grid);
  const double step = 1.0 / static_cast<double>(grid - 1);
  for (std::size_t a = 0; a < grid; ++a) {
    for (std::size_t b = 0; b < grid; ++b) {
      // land exactly on 1 at the upper edge
      const double p1 = (a + 1 == grid) ? 1.0 : a * step;
      const double p2 = (b + 1 == grid) ? 1.0 : b * step;
      const CoopVector coop{p1, p2};
      const MetricsReport m = evaluate(loads, coop);
      cells.push_back({p1, p2, m.blocking[0], m.blocking[1], m.convenient[0], m.convenient[1],
                       std::abs(m.accept(0, 1) - m.accept(1, 0))});
    }
  }
  return cells;
}

double distance_from_optimum(const LoadVector& loads, double p1_fixed) {
  if (!(p1_fixed > 0.0 && p1_fixed <= 1.0)) throw InvalidInput("p1_fixed must lie in (0, 1]");
  const SolveReport best = fixed_point(loads);
  FixedPointOptions pinned;
  pinned.pinned_value = p1_fixed;
  const SolveReport other = fixed_point(loads, pinned);
  if (!best.converged || !other.converged) throw SolverError("fixed point did not converge in distance_from_optimum");

  const auto b_star = blocking(solve_chain(loads, best.p_star), best.p_star);
  const auto b_other = blocking(solve_chain(loads, other.p_star), other.p_star);
  double dist = 0.0;
  for (std::size_t i = 0; i < b_star.size(); ++i) dist += std::abs(b_other[i] - b_star[i]);
  return dist;
}

}  // namespace f2f
