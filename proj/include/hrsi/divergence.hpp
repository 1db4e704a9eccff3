#pragma once

#include "hrsi/tensor.hpp"

namespace hrsi {

/// A validated beta in [0, 2].
class BetaSpec {
 public:
  explicit BetaSpec(double beta);
  double value() const noexcept { return beta_; }
  bool is_itakura_saito() const noexcept { return beta_ == 0.0; }
  bool is_kullback_leibler() const noexcept { return beta_ == 1.0; }

 private:
  double beta_;
};

/// Floor applied to y inside divergence evaluations so that exact machine
/// zeros do not produce spurious infinities.
inline constexpr double kDivergenceFloor = 1e-300;

/// Scalar beta-divergence d_beta(x | y).
///
/// Uses 0 log 0 = 0 for beta = 1. Throws std::domain_error on negative
/// input; y is clamped to kDivergenceFloor.
double beta_divergence(double x, double y, BetaSpec b);

/// Sum of elementwise divergences. Shapes must match.
double beta_divergence(const DenseTensor& x, const DenseTensor& y, BetaSpec b);

/// Convex + concave + constant decomposition of d_beta(a | b) in b.
///
/// For beta in [1, 2] the divergence is convex in b and the split is
/// (d_beta, 0, 0). Between 0 and 1 the concave part is b^beta / beta and the
/// constant absorbs the a^beta term.
class BetaSplit {
 public:
  explicit BetaSplit(BetaSpec b) : beta_(b.value()) {}

  double convex(double a, double b) const;
  double concave(double a, double b) const;
  double constant(double a) const;
  /// Derivative of concave(a, .) at b, the slope of its tangent majorizer.
  double concave_derivative(double a, double b) const;

 private:
  double beta_;
};

}  // namespace hrsi
