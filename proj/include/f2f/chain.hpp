#pragma once

// Continuous-time Markov chain of N cooperating single-server nodes.
//
// A state is a StateMask over the N servers. Node i becomes busy at rate
//   lambda_i + p_i/(N-1) * sum_{j busy in both states} lambda_j
// (own arrivals plus probes from overloaded neighbours that i accepts), and
// becomes idle at rate 1. States are indexed by the integer value of the mask
// with node 1 in bit 0, so the N=2 order is (00, 10, 01, 11) written s1 s2.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "f2f/types.hpp"

namespace f2f {

class Generator {
 public:
  using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  Generator(std::size_t nodes, Storage q);

  std::size_t nodes() const { return nodes_; }
  std::size_t states() const { return std::size_t{1} << nodes_; }
  double rate(StateMask from, StateMask to) const { return q_.coeff(from.bits(), to.bits()); }
  const Storage& sparse() const { return q_; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(q_); }

 private:
  std::size_t nodes_;
  Storage q_;
};

class SteadyState {
 public:
  SteadyState(std::size_t nodes, Eigen::VectorXd pi);

  std::size_t nodes() const { return nodes_; }
  std::size_t states() const { return static_cast<std::size_t>(pi_.size()); }
  double operator[](StateMask s) const { return pi_[s.bits()]; }
  const Eigen::VectorXd& vector() const { return pi_; }

  /// P(node i busy).
  double busy_probability(std::size_t node) const;

 private:
  std::size_t nodes_;
  Eigen::VectorXd pi_;
};

/// The 4x4 two-node generator written out entry by entry.
Generator build_generator_n2(const LoadVector& loads, const CoopVector& coop);

Generator build_generator(const LoadVector& loads, const CoopVector& coop);

/// Q^T with its last row replaced by ones: the system A pi = e_last.
Eigen::MatrixXd normalized_system(const Generator& g);

/// Dense direct solve of A pi = (0,...,0,1). Throws SolverError when the
/// system is numerically singular or the result breaks the probability
/// invariants (entries below -1e-12, mass off by 1e-10, residual >= 1e-9).
SteadyState steady_state(const Generator& g);

/// Convenience: build_generator followed by steady_state.
SteadyState solve_chain(const LoadVector& loads, const CoopVector& coop);

/// ||pi^T Q||_inf.
double balance_residual(const SteadyState& pi, const Generator& g);

/// Distribution of the number of busy servers, index 0..N.
std::vector<double> busy_count_distribution(const SteadyState& pi);

/// Occupancy distribution of an M/M/c/c queue with offered load `load`.
std::vector<double> erlang_loss_distribution(double load, std::size_t servers);

}  // namespace f2f
