#pragma once

// Test-only reference computations. Nothing here calls into the solver paths
// being checked: steady states come from uniformized power iteration over a
// generator assembled directly from the transition rules, and blocking comes
// from flow balance rather than from the probe-refusal sum.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline bool busy(std::uint32_t s, std::size_t i) { return (s >> i) & 1U; }

/// Generator built from the rule text, written independently of the library.
inline Mat generator(const Vec& lambda, const Vec& p) {
  const std::size_t n = lambda.size();
  const std::size_t states = std::size_t{1} << n;
  Mat q(states, Vec(states, 0.0));
  for (std::uint32_t s = 0; s < states; ++s) {
    for (std::uint32_t t = 0; t < states; ++t) {
      const std::uint32_t diff = s ^ t;
      if (diff == 0 || (diff & (diff - 1)) != 0) continue;  // Hamming distance must be 1
      std::size_t i = 0;
      while (!busy(diff, i)) ++i;
      if (busy(s, i)) {
        q[s][t] = 1.0;
      } else {
        double probes = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (busy(s, j) && busy(t, j)) probes += lambda[j];
        }
        q[s][t] = lambda[i] + p[i] / double(n - 1) * probes;
      }
    }
    double out = 0.0;
    for (std::uint32_t t = 0; t < states; ++t) out += (t != s) ? q[s][t] : 0.0;
    q[s][s] = -out;
  }
  return q;
}

/// Stationary vector by power iteration on the uniformized chain.
inline Vec stationary(const Mat& q, double tol = 1e-15, int max_iter = 200000) {
  const std::size_t m = q.size();
  double rate = 0.0;
  for (std::size_t s = 0; s < m; ++s) rate = std::max(rate, -q[s][s]);
  rate *= 1.05;
  Vec pi(m, 1.0 / double(m)), next(m);
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t t = 0; t < m; ++t) {
      double v = pi[t];
      for (std::size_t s = 0; s < m; ++s) v += pi[s] * q[s][t] / rate;
      next[t] = v;
    }
    double diff = 0.0;
    for (std::size_t t = 0; t < m; ++t) diff = std::max(diff, std::abs(next[t] - pi[t]));
    pi.swap(next);
    if (diff < tol) break;
  }
  double total = 0.0;
  for (double v : pi) total += v;
  for (double& v : pi) v /= total;
  return pi;
}

/// With no cooperation each node is an independent M/M/1/1 queue.
inline Vec product_form(const Vec& lambda) {
  const std::size_t n = lambda.size();
  Vec pi(std::size_t{1} << n, 1.0);
  for (std::uint32_t s = 0; s < pi.size(); ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      const double rho = lambda[i] / (1.0 + lambda[i]);
      pi[s] *= busy(s, i) ? rho : 1.0 - rho;
    }
  }
  return pi;
}

/// Rate at which j accepts i's tasks, straight from the event description.
inline double accept_rate(const Vec& pi, const Vec& lambda, const Vec& p, std::size_t i, std::size_t j) {
  const std::size_t n = lambda.size();
  double mass = 0.0;
  for (std::uint32_t s = 0; s < pi.size(); ++s) {
    if (busy(s, i) && !busy(s, j)) mass += pi[s];
  }
  return lambda[i] * mass * p[j] / double(n - 1);
}

/// Flow balance: lambda_i (1 - b_i) = lambda_i P(s_i = 0) + sum_j a_ij.
inline Vec blocking_by_flow(const Vec& pi, const Vec& lambda, const Vec& p) {
  const std::size_t n = lambda.size();
  Vec b(n);
  for (std::size_t i = 0; i < n; ++i) {
    double idle = 0.0;
    for (std::uint32_t s = 0; s < pi.size(); ++s) {
      if (!busy(s, i)) idle += pi[s];
    }
    double out = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) out += accept_rate(pi, lambda, p, i, j);
    }
    b[i] = 1.0 - idle - out / lambda[i];
  }
  return b;
}

inline Vec random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (double& x : v) x = u(rng);
  return v;
}

}  // namespace oracle
