#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace f2f {

/// Hard upper bound on the number of cooperating nodes (state space is 2^N).
inline constexpr std::size_t kMaxNodes = 20;

/// Largest N for which a dense steady-state solve is attempted.
inline constexpr std::size_t kMaxDenseNodes = 12;

/// Raised when inputs violate a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot produce a trustworthy result.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-node Poisson arrival rates, in tasks per unit of (mean) service time.
class LoadVector {
 public:
  LoadVector() = default;
  explicit LoadVector(std::vector<double> lambdas);
  LoadVector(std::initializer_list<double> lambdas)
      : LoadVector(std::vector<double>(lambdas)) {}

  std::size_t size() const { return lambdas_.size(); }
  double operator[](std::size_t i) const { return lambdas_[i]; }
  std::span<const double> values() const { return lambdas_; }
  double total() const;

  bool operator==(const LoadVector&) const = default;

 private:
  std::vector<double> lambdas_;
};

/// Per-node probability of accepting a probed remote task while idle.
class CoopVector {
 public:
  CoopVector() = default;
  explicit CoopVector(std::vector<double> probs);
  CoopVector(std::initializer_list<double> probs)
      : CoopVector(std::vector<double>(probs)) {}

  static CoopVector ones(std::size_t n) { return CoopVector(std::vector<double>(n, 1.0)); }
  static CoopVector zeros(std::size_t n) { return CoopVector(std::vector<double>(n, 0.0)); }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> values() const { return probs_; }

  /// Copy with component i replaced; the new value must lie in [0,1].
  CoopVector with(std::size_t i, double p) const;

  bool operator==(const CoopVector&) const = default;

 private:
  std::vector<double> probs_;
};

/// Busy/idle configuration of all nodes; bit i set means node i is busy.
class StateMask {
 public:
  constexpr StateMask() = default;
  constexpr explicit StateMask(std::uint32_t bits) : bits_(bits) {}

  constexpr std::uint32_t bits() const { return bits_; }
  constexpr bool busy(std::size_t node) const { return (bits_ >> node) & 1U; }
  constexpr StateMask with_busy(std::size_t node) const { return StateMask(bits_ | (1U << node)); }
  constexpr StateMask with_idle(std::size_t node) const { return StateMask(bits_ & ~(1U << node)); }
  int busy_count() const;

  constexpr bool operator==(const StateMask&) const = default;

 private:
  std::uint32_t bits_ = 0;
};

/// Throws InvalidInput unless both vectors describe the same N >= 2 nodes.
void require_same_size(const LoadVector& loads, const CoopVector& coop);

std::string to_string(std::span<const double> v);

}  // namespace f2f
