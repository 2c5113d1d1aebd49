#include "f2f/chain.hpp"

#include <cmath>
#include <sstream>

namespace f2f {

namespace {

constexpr double kClipTolerance = 1e-12;
constexpr double kMassTolerance = 1e-10;
constexpr double kResidualTolerance = 1e-9;
constexpr double kMinReciprocalCondition = 1e-14;

}  // namespace

Generator::Generator(std::size_t nodes, Storage q) : nodes_(nodes), q_(std::move(q)) {
  if (static_cast<std::size_t>(q_.rows()) != states() || q_.rows() != q_.cols()) {
    throw InvalidInput("generator size does not match 2^N");
  }
}

SteadyState::SteadyState(std::size_t nodes, Eigen::VectorXd pi) : nodes_(nodes), pi_(std::move(pi)) {
  if (static_cast<std::size_t>(pi_.size()) != (std::size_t{1} << nodes_)) {
    throw InvalidInput("steady-state vector size does not match 2^N");
  }
}

double SteadyState::busy_probability(std::size_t node) const {
  double total = 0.0;
  for (std::uint32_t s = 0; s < states(); ++s) {
    if (StateMask(s).busy(node)) total += pi_[s];
  }
  return total;
}

Generator build_generator_n2(const LoadVector& loads, const CoopVector& coop) {
  require_same_size(loads, coop);
  if (loads.size() != 2) throw InvalidInput("build_generator_n2 requires N = 2");
  const double l1 = loads[0], l2 = loads[1], p1 = coop[0], p2 = coop[1];
  Eigen::Matrix4d q;
  // clang-format off
  q << -l1 - l2, l1,                  l2,                  0.0,
       1.0,      -1.0 - p2 * l1 - l2, 0.0,                 l2 + p2 * l1,
       1.0,      0.0,                 -1.0 - p1 * l2 - l1, l1 + p1 * l2,
       0.0,      1.0,                 1.0,                 -2.0;
  // clang-format on
  return Generator(2, Eigen::MatrixXd(q).sparseView(0.0, 0.0));
}

Generator build_generator(const LoadVector& loads, const CoopVector& coop) {
  require_same_size(loads, coop);
  const std::size_t n = loads.size();
  const std::size_t states = std::size_t{1} << n;
  const double share = 1.0 / static_cast<double>(n - 1);

  Generator::Storage q(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states));
  q.reserve(Eigen::VectorXi::Constant(static_cast<Eigen::Index>(states), static_cast<int>(n + 1)));

  for (std::uint32_t bits = 0; bits < states; ++bits) {
    const StateMask s(bits);
    double busy_load = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (s.busy(j)) busy_load += loads[j];
    }
    double out_rate = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double rate;
      StateMask next;
      if (s.busy(i)) {
        rate = 1.0;
        next = s.with_idle(i);
      } else {
        // busy_load excludes i here since i is idle
        rate = loads[i] + coop[i] * share * busy_load;
        next = s.with_busy(i);
      }
      if (rate != 0.0) q.insert(bits, next.bits()) = rate;
      out_rate += rate;
    }
    q.insert(bits, bits) = -out_rate;
  }
  q.makeCompressed();
  return Generator(n, std::move(q));
}

Eigen::MatrixXd normalized_system(const Generator& g) {
  Eigen::MatrixXd a = g.dense().transpose();
  a.row(a.rows() - 1).setOnes();
  return a;
}

SteadyState steady_state(const Generator& g) {
  if (g.nodes() > kMaxDenseNodes) {
    throw InvalidInput("dense steady-state solve limited to N <= " + std::to_string(kMaxDenseNodes));
  }
  const Eigen::MatrixXd a = normalized_system(g);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(a.rows());
  rhs[rhs.size() - 1] = 1.0;

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > kMinReciprocalCondition)) {
    std::ostringstream os;
    os << "singular steady-state system (reciprocal condition estimate " << rcond << ")";
    throw SolverError(os.str());
  }
  Eigen::VectorXd pi = lu.solve(rhs);

  for (Eigen::Index s = 0; s < pi.size(); ++s) {
    if (pi[s] < -kClipTolerance) {
      std::ostringstream os;
      os << "steady-state entry " << s << " is negative (" << pi[s] << ")";
      throw SolverError(os.str());
    }
    if (pi[s] < 0.0) pi[s] = 0.0;
  }
  if (std::abs(pi.sum() - 1.0) > kMassTolerance) {
    throw SolverError("steady-state probabilities do not sum to 1");
  }
  SteadyState result(g.nodes(), std::move(pi));
  const double residual = balance_residual(result, g);
  if (!(residual < kResidualTolerance)) {
    std::ostringstream os;
    os << "steady-state balance residual too large (" << residual << ")";
    throw SolverError(os.str());
  }
  return result;
}

SteadyState solve_chain(const LoadVector& loads, const CoopVector& coop) {
  return steady_state(build_generator(loads, coop));
}

double balance_residual(const SteadyState& pi, const Generator& g) {
  const Eigen::VectorXd r = g.sparse().transpose() * pi.vector();
  return r.lpNorm<Eigen::Infinity>();
}

std::vector<double> busy_count_distribution(const SteadyState& pi) {
  std::vector<double> dist(pi.nodes() + 1, 0.0);
  for (std::uint32_t s = 0; s < pi.states(); ++s) {
    dist[static_cast<std::size_t>(StateMask(s).busy_count())] += pi.vector()[s];
  }
  return dist;
}

std::vector<double> erlang_loss_distribution(double load, std::size_t servers) {
  if (!(load > 0.0)) throw InvalidInput("offered load must be positive");
  std::vector<double> dist(servers + 1);
  double term = 1.0;
  double total = 0.0;
  for (std::size_t k = 0; k <= servers; ++k) {
    if (k > 0) term *= load / static_cast<double>(k);
    dist[k] = term;
    total += term;
  }
  for (double& d : dist) d /= total;
  return dist;
}

}  // namespace f2f
