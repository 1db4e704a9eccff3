#pragma once

#include <vector>

#include "hrsi/tensor.hpp"

namespace hrsi {

/// One block subproblem min_X D_beta(T | X U) + mu g(X), X >= eps.
///
/// T is m x N, U is r x N and the current iterate X~ is m x r. For sNMF
/// U = X2^T; for Tucker factor i, U is the mode-i unfolding of the core
/// multiplied by every other factor.
struct BlockProblem {
  const DenseTensor& data;
  const DenseTensor& mixing;
  const DenseTensor& current;
  double mu = 0.0;
  double beta = 1.0;
  int degree = 1;
  double epsilon = 1e-16;

  /// Throws std::invalid_argument on inconsistent shapes or parameters.
  void validate() const;
};

/// Block objective D_beta(T | X U) + mu sum |X|^p.
double block_objective(const BlockProblem& bp, const DenseTensor& x);

// --- Update rules --------------------------------------------------------

/// beta = 1, l1: X~ * [(T / X~U) U^T] / (mu + 1 U^T), floored at eps.
DenseTensor mm_update_kl_l1(const BlockProblem& bp);
/// beta = 1, squared l2: positive root of 2 mu x^2 + b x - c = 0.
DenseTensor mm_update_kl_l2(const BlockProblem& bp);
/// beta = 0, squared l2: positive root of 2 mu x^3 + c x^2 - a = 0.
DenseTensor mm_update_is_l2(const BlockProblem& bp);
/// beta in [1, 2], p in {1, 2}: positive root of p mu x^{p+1-beta} + b x - c.
DenseTensor mm_update_generic(const BlockProblem& bp);
/// Picks the closed form when one exists, the generic solver otherwise.
DenseTensor mm_update(const BlockProblem& bp);

// --- Coefficients of the entrywise equations -----------------------------

/// a x^exponent + b x - c = 0 per entry (beta in [1, 2]).
struct PolynomialCoefficients {
  double a = 0.0;
  double exponent = 1.0;
  DenseTensor b;
  DenseTensor c;
};
PolynomialCoefficients mm_coefficients(const BlockProblem& bp);

/// -abar x^{-2} + 2 mu x + cbar = 0 per entry (beta = 0, p = 2).
struct ItakuraSaitoCoefficients {
  DenseTensor abar;
  DenseTensor cbar;
};
ItakuraSaitoCoefficients is_coefficients(const BlockProblem& bp);

// --- Scalar roots --------------------------------------------------------

/// Positive root of 2 mu x^2 + b x - c = 0, in a cancellation-free form.
double kl_l2_root(double mu, double b, double c);
/// Positive root of 2 mu x^3 + cbar x^2 - abar = 0 via the depressed cubic.
double is_l2_root(double mu, double abar, double cbar);
/// Positive root of a x^e + b x - c = 0 (a, b, c >= 0, e > 0) by Newton
/// steps safeguarded with bisection.
double polynomial_root(double a, double exponent, double b, double c);

// --- Core and least-squares updates --------------------------------------

/// Entrywise MM step for the core of a KL Tucker model with penalty
/// mu ||G||_p^p, p in {1, 2}. Factor column sums play the role of 1 U^T.
DenseTensor mm_update_core(const DenseTensor& core, const std::vector<DenseTensor>& factors,
                           const DenseTensor& data, double mu, int degree, double epsilon);

inline DenseTensor mm_update_core_kl_l1(const DenseTensor& core,
                                        const std::vector<DenseTensor>& factors,
                                        const DenseTensor& data, double mu, double epsilon) {
  return mm_update_core(core, factors, data, mu, 1, epsilon);
}

/// One HALS sweep over the columns of X for
///   min ||T - X B^T||_F^2 + mu ||X||_F^2,  G = B^T B, C = T B.
DenseTensor hals_update_ridge(const DenseTensor& x, const DenseTensor& gram, const DenseTensor& cross,
                              double mu, double epsilon);

}  // namespace hrsi
