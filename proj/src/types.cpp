#include "f2f/types.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

namespace f2f {

LoadVector::LoadVector(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
  if (lambdas_.size() < 2) {
    throw InvalidInput("N >= 2 required (got " + std::to_string(lambdas_.size()) + " loads)");
  }
  if (lambdas_.size() > kMaxNodes) {
    throw InvalidInput("at most " + std::to_string(kMaxNodes) + " nodes supported");
  }
  for (std::size_t i = 0; i < lambdas_.size(); ++i) {
    if (!std::isfinite(lambdas_[i]) || lambdas_[i] <= 0.0) {
      throw InvalidInput("load " + std::to_string(i + 1) + " must be a positive finite rate");
    }
  }
}

double LoadVector::total() const { return std::accumulate(lambdas_.begin(), lambdas_.end(), 0.0); }

CoopVector::CoopVector(std::vector<double> probs) : probs_(std::move(probs)) {
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] >= 0.0 && probs_[i] <= 1.0)) {
      throw InvalidInput("cooperation probability " + std::to_string(i + 1) + " must lie in [0,1]");
    }
  }
}

CoopVector CoopVector::with(std::size_t i, double p) const {
  auto probs = probs_;
  probs.at(i) = p;
  return CoopVector(std::move(probs));
}

int StateMask::busy_count() const { return std::popcount(bits_); }

void require_same_size(const LoadVector& loads, const CoopVector& coop) {
  if (loads.size() != coop.size()) {
    throw InvalidInput("dimension mismatch: " + std::to_string(loads.size()) + " loads vs " +
                       std::to_string(coop.size()) + " cooperation probabilities");
  }
}

std::string to_string(std::span<const double> v) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ')';
  return os.str();
}

}  // namespace f2f
