#pragma once

#include <optional>
#include <vector>

#include "f2f/metrics.hpp"

namespace f2f {

/// Fairness constraints as a linear map of p: (F p)_i = (N-1)(R_out_i - R_in_i).
struct FairnessMatrix {
  Eigen::MatrixXd f;
};

/// f_ij = lambda_i P(s_i = 1, s_j = 0) off the diagonal, f_ii = -sum_{j != i} f_ji.
FairnessMatrix fairness_matrix(const SteadyState& pi, const LoadVector& loads);

struct SolveReport {
  CoopVector p_star;
  std::size_t iterations = 0;
  double residual = 0.0;  ///< last step size (fixed point) or g(p) (bisection)
  bool feasible = false;
  bool normalized = false;
  bool converged = false;
};

struct FixedPointOptions {
  double tol = 1e-9;
  std::size_t max_iters = 100;
  /// Value the anchor node is pinned to; 1 for the optimum.
  double pinned_value = 1.0;
  /// Anchor the heaviest node. When false the anchor is node 0 as given, and
  /// iterates with a component above 1 are rescaled by their maximum.
  bool sort_loads = true;
};

/// Alternates the chain solve at p with the pinned fairness solve F' p = c e_anchor,
/// where F' is F with the anchor row replaced by the unit row. Results are in
/// the caller's node order. Throws SolverError on a singular F'.
SolveReport fixed_point(const LoadVector& loads, const FixedPointOptions& options = {});

/// Index of the heaviest node (lowest index among ties).
std::size_t heaviest_node(const LoadVector& loads);

/// g(p) = sum over every node except the heaviest of |1 - r_j(p)|; +inf if any
/// of those ratios is undefined.
double g_residual(const LoadVector& loads, const CoopVector& p);

/// Model cooperation ratios at p.
std::vector<Ratio> model_ratios(const LoadVector& loads, const CoopVector& p);

struct BisectStep {
  double lo, hi, p, r;
};

struct BisectRound {
  std::vector<Ratio> ratios;              ///< at the start of the round
  std::optional<std::size_t> selected;    ///< node tuned in this round
  CoopVector p;                           ///< at the start of the round
  std::vector<BisectStep> steps;          ///< inner bisection on the selected node
};

struct BisectTrace {
  std::vector<BisectRound> rounds;
};

/// argmax_i { r_i : r_i >= 1 + eps }, lowest index on ties; undefined ratios
/// are never selected.
std::optional<std::size_t> select_node(const std::vector<Ratio>& ratios, double eps);

/// Centralized tuning: start from p = 1, repeatedly pick the node with the
/// largest ratio above 1 + eps and bisect its probability on [0, p_j] until
/// |r_j - 1| <= eps or the bracket is narrower than eps/10.
std::pair<SolveReport, BisectTrace> centralized_bisect(const LoadVector& loads, double eps,
                                                       std::size_t max_steps = 1000);

struct ParetoCell {
  double p1, p2, b1, b2;
  bool convenient1, convenient2;
  double fair_residual;  ///< |a_12 - a_21|
};

/// Uniform grid x grid scan of [0,1]^2 for two nodes, row-major in p1.
std::vector<ParetoCell> pareto_scan(const LoadVector& loads, std::size_t grid);

/// sum_i |b_i(p') - b_i(p*)| where p' is the fair point with the heaviest
/// node pinned to p1_fixed.
double distance_from_optimum(const LoadVector& loads, double p1_fixed);

}  // namespace f2f
