#include "f2f/metrics.hpp"

#include <cmath>

namespace f2f {

namespace {

void require_pi_matches(const SteadyState& pi, std::size_t n) {
  if (pi.nodes() != n) {
    throw InvalidInput("dimension mismatch: steady state over " + std::to_string(pi.nodes()) +
                       " nodes, " + std::to_string(n) + " expected");
  }
}

}  // namespace

std::vector<double> blocking_n2(const SteadyState& pi, const CoopVector& coop) {
  if (pi.nodes() != 2 || coop.size() != 2) throw InvalidInput("blocking_n2 requires N = 2");
  const double pi10 = pi[StateMask(0b01)];
  const double pi01 = pi[StateMask(0b10)];
  const double pi11 = pi[StateMask(0b11)];
  return {pi11 + pi10 * (1.0 - coop[1]), pi11 + pi01 * (1.0 - coop[0])};
}

std::vector<double> blocking(const SteadyState& pi, const CoopVector& coop) {
  const std::size_t n = coop.size();
  require_pi_matches(pi, n);
  const double share = 1.0 / static_cast<double>(n - 1);
  std::vector<double> b(n, 0.0);
  for (std::uint32_t bits = 0; bits < pi.states(); ++bits) {
    const StateMask s(bits);
    const double mass = pi[s];
    if (mass == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      if (!s.busy(i)) continue;
      double refused = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        refused += s.busy(j) ? 1.0 : 1.0 - coop[j];
      }
      b[i] += mass * share * refused;
    }
  }
  return b;
}

Eigen::MatrixXd acceptance_matrix(const SteadyState& pi, const LoadVector& loads, const CoopVector& coop) {
  require_same_size(loads, coop);
  const std::size_t n = loads.size();
  require_pi_matches(pi, n);
  const double share = 1.0 / static_cast<double>(n - 1);

  // busy_idle(i, j) = P(s_i = 1, s_j = 0)
  Eigen::MatrixXd busy_idle = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::uint32_t bits = 0; bits < pi.states(); ++bits) {
    const StateMask s(bits);
    for (std::size_t i = 0; i < n; ++i) {
      if (!s.busy(i)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (!s.busy(j)) busy_idle(i, j) += pi[s];
      }
    }
  }
  Eigen::MatrixXd a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      a(i, j) = (i == j) ? 0.0 : coop[j] * share * loads[i] * busy_idle(i, j);
    }
  }
  return a;
}

Flows flows(const Eigen::MatrixXd& accept) {
  const auto n = static_cast<std::size_t>(accept.rows());
  Flows f;
  f.r_in.resize(n);
  f.r_out.resize(n);
  f.ratios.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.r_in[i] = accept.col(static_cast<Eigen::Index>(i)).sum();
    f.r_out[i] = accept.row(static_cast<Eigen::Index>(i)).sum();
    if (f.r_out[i] > 0.0) f.ratios[i] = f.r_in[i] / f.r_out[i];
  }
  return f;
}

double erlang_b(double lambda, int servers) {
  if (!(lambda > 0.0)) throw InvalidInput("erlang_b requires a positive load");
  switch (servers) {
    case 1:
      return lambda / (1.0 + lambda);
    case 2:
      return lambda * lambda / (2.0 + 2.0 * lambda + lambda * lambda);
    default:
      throw InvalidInput("erlang_b supports 1 or 2 servers only");
  }
}

double critical_load(double lambda1) { return std::sqrt(1.0 + lambda1) - 1.0; }

std::vector<bool> is_convenient(std::span<const double> blocking, const LoadVector& loads) {
  if (blocking.size() != loads.size()) throw InvalidInput("dimension mismatch in is_convenient");
  std::vector<bool> flags(loads.size());
  // a solve at p = 0 reproduces the baseline only up to rounding
  constexpr double kSlack = 1e-12;
  for (std::size_t i = 0; i < loads.size(); ++i) flags[i] = blocking[i] < erlang_b(loads[i], 1) - kSlack;
  return flags;
}

MetricsReport evaluate(const SteadyState& pi, const LoadVector& loads, const CoopVector& coop) {
  MetricsReport m;
  m.blocking = blocking(pi, coop);
  m.accept = acceptance_matrix(pi, loads, coop);
  auto f = flows(m.accept);
  m.r_in = std::move(f.r_in);
  m.r_out = std::move(f.r_out);
  m.ratios = std::move(f.ratios);
  m.baselines.resize(loads.size());
  for (std::size_t i = 0; i < loads.size(); ++i) m.baselines[i] = erlang_b(loads[i], 1);
  m.convenient = is_convenient(m.blocking, loads);
  return m;
}

MetricsReport evaluate(const LoadVector& loads, const CoopVector& coop) {
  return evaluate(solve_chain(loads, coop), loads, coop);
}

}  // namespace f2f
