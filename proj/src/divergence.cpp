#include "hrsi/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hrsi {

BetaSpec::BetaSpec(double beta) : beta_(beta) {
  if (!(beta >= 0.0 && beta <= 2.0)) throw std::invalid_argument("beta must lie in [0, 2]");
}

double beta_divergence(double x, double y, BetaSpec b) {
  if (x < 0.0 || y < 0.0 || std::isnan(x) || std::isnan(y))
    throw std::domain_error("beta_divergence: entries must be nonnegative");
  const double beta = b.value();
  if (beta == 2.0) return 0.5 * (x - y) * (x - y);
  y = std::max(y, kDivergenceFloor);
  if (beta == 1.0) {
    if (x == 0.0) return y;
    return std::max(0.0, x * std::log(x / y) - x + y);
  }
  if (beta == 0.0) {
    if (x == 0.0) return std::numeric_limits<double>::infinity();
    const double ratio = x / y;
    return std::max(0.0, ratio - std::log(ratio) - 1.0);
  }
  const double num = std::pow(x, beta) + (beta - 1.0) * std::pow(y, beta) -
                     beta * x * std::pow(y, beta - 1.0);
  // Rounding can leave a tiny negative value near x = y.
  return std::max(0.0, num / (beta * (beta - 1.0)));
}

double beta_divergence(const DenseTensor& x, const DenseTensor& y, BetaSpec b) {
  if (x.shape() != y.shape()) throw std::invalid_argument("beta_divergence: shape mismatch");
  double acc = 0.0;
  const auto xv = x.values(), yv = y.values();
  for (std::size_t k = 0; k < xv.size(); ++k) acc += beta_divergence(xv[k], yv[k], b);
  return acc;
}

double BetaSplit::convex(double a, double b) const {
  if (beta_ >= 1.0) return beta_divergence(a, b, BetaSpec(beta_));
  if (beta_ == 0.0) return a / b;
  return a * std::pow(b, beta_ - 1.0) / (1.0 - beta_);
}

double BetaSplit::concave(double, double b) const {
  if (beta_ >= 1.0) return 0.0;
  if (beta_ == 0.0) return std::log(b);
  return std::pow(b, beta_) / beta_;
}

double BetaSplit::constant(double a) const {
  if (beta_ >= 1.0) return 0.0;
  if (beta_ == 0.0) return -std::log(a) - 1.0;
  return std::pow(a, beta_) / (beta_ * (beta_ - 1.0));
}

double BetaSplit::concave_derivative(double, double b) const {
  if (beta_ >= 1.0) return 0.0;
  if (beta_ == 0.0) return 1.0 / b;
  return std::pow(b, beta_ - 1.0);
}

}  // namespace hrsi
