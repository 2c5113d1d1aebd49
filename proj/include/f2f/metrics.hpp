#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "f2f/chain.hpp"

namespace f2f {

/// R_in/R_out for one node; nullopt when R_out is zero.
using Ratio = std::optional<double>;

struct Flows {
  std::vector<double> r_in;   ///< sum_j a_ji: tasks accepted on behalf of others
  std::vector<double> r_out;  ///< sum_j a_ij: own tasks accepted elsewhere
  std::vector<Ratio> ratios;
};

struct MetricsReport {
  std::vector<double> blocking;
  Eigen::MatrixXd accept;  ///< accept(i, j): rate at which j accepts tasks from i
  std::vector<double> r_in;
  std::vector<double> r_out;
  std::vector<Ratio> ratios;
  std::vector<double> baselines;
  std::vector<bool> convenient;
};

/// Two-node blocking: b1 = pi11 + pi10 (1 - p2), b2 = pi11 + pi01 (1 - p1).
std::vector<double> blocking_n2(const SteadyState& pi, const CoopVector& coop);

/// A busy node probes one of the N-1 others uniformly; the task is blocked if
/// the probed node is busy or declines.
std::vector<double> blocking(const SteadyState& pi, const CoopVector& coop);

Eigen::MatrixXd acceptance_matrix(const SteadyState& pi, const LoadVector& loads, const CoopVector& coop);

Flows flows(const Eigen::MatrixXd& accept);

/// Erlang-B blocking for k = 1 or 2 servers.
double erlang_b(double lambda, int servers);

/// Smallest lambda2 for which full cooperation helps both nodes: sqrt(1+lambda1) - 1.
double critical_load(double lambda1);

/// b_i < lambda_i / (1 + lambda_i), strictly: the gap must exceed 1e-12.
std::vector<bool> is_convenient(std::span<const double> blocking, const LoadVector& loads);

/// Everything above for one operating point.
MetricsReport evaluate(const LoadVector& loads, const CoopVector& coop);
MetricsReport evaluate(const SteadyState& pi, const LoadVector& loads, const CoopVector& coop);

}  // namespace f2f
