#include "hrsi/mm_updates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "hrsi/divergence.hpp"

namespace hrsi {

namespace {

constexpr double kDiscriminantGuard = 1e-14;

std::vector<double> row_sums(const DenseTensor& u) {
  std::vector<double> s(u.rows(), 0.0);
  for (std::size_t j = 0; j < u.cols(); ++j)
    for (std::size_t k = 0; k < u.rows(); ++k) s[k] += u(k, j);
  return s;
}

DenseTensor approximation(const BlockProblem& bp) {
  DenseTensor t = matmul(bp.current, bp.mixing);
  for (double& v : t.values()) v = std::max(v, kDivergenceFloor);
  return t;
}

void floor_at(DenseTensor& x, double epsilon) {
  for (double& v : x.values()) v = std::max(v, epsilon);
}

}  // namespace

void BlockProblem::validate() const {
  if (data.order() != 2 || mixing.order() != 2 || current.order() != 2)
    throw std::invalid_argument("block problem: T, U and X must be matrices");
  if (data.cols() != mixing.cols())
    throw std::invalid_argument("block problem: T and U must have the same column count");
  if (current.rows() != data.rows() || current.cols() != mixing.rows())
    throw std::invalid_argument("block problem: X must be rows(T) x rows(U)");
  if (!std::isfinite(mu) || mu < 0.0) throw std::invalid_argument("block problem: mu must be >= 0");
  if (!(beta >= 0.0 && beta <= 2.0)) throw std::invalid_argument("block problem: beta must lie in [0, 2]");
  if (degree != 1 && degree != 2) throw std::invalid_argument("block problem: degree must be 1 or 2");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("block problem: epsilon must be >= 0");
}

double block_objective(const BlockProblem& bp, const DenseTensor& x) {
  const DenseTensor approx = matmul(x, bp.mixing);
  return beta_divergence(bp.data, approx, BetaSpec(bp.beta)) +
         bp.mu * lp_norm_pow(x.values(), bp.degree);
}

// --- Coefficients --------------------------------------------------------

PolynomialCoefficients mm_coefficients(const BlockProblem& bp) {
  bp.validate();
  if (bp.beta < 1.0) throw std::invalid_argument("mm_coefficients: beta must lie in [1, 2]");
  const std::size_t m = bp.data.rows(), n = bp.data.cols(), r = bp.mixing.rows();
  const DenseTensor approx = approximation(bp);
  PolynomialCoefficients out;
  out.a = bp.degree * bp.mu;
  out.exponent = bp.degree + 1.0 - bp.beta;
  out.b = DenseTensor::matrix(m, r);
  out.c = DenseTensor::matrix(m, r);

  if (bp.beta == 1.0) {
    DenseTensor ratio = bp.data;
    for (std::size_t k = 0; k < ratio.size(); ++k) ratio[k] /= approx[k];
    const DenseTensor num = matmul_transposed(ratio, bp.mixing);
    const std::vector<double> s = row_sums(bp.mixing);
    for (std::size_t k = 0; k < r; ++k)
      for (std::size_t i = 0; i < m; ++i) {
        out.b(i, k) = s[k];
        out.c(i, k) = bp.current(i, k) * num(i, k);
      }
    return out;
  }
  const double e1 = bp.beta - 1.0, e2 = bp.beta - 2.0;
  for (std::size_t k = 0; k < r; ++k)
    for (std::size_t i = 0; i < m; ++i) {
      const double xk = bp.current(i, k);
      double b = 0.0, c = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double ratio = approx(i, j) / xk;
        b += bp.mixing(k, j) * std::pow(ratio, e1);
        c += bp.mixing(k, j) * bp.data(i, j) * std::pow(ratio, e2);
      }
      out.b(i, k) = b;
      out.c(i, k) = c;
    }
  return out;
}

ItakuraSaitoCoefficients is_coefficients(const BlockProblem& bp) {
  bp.validate();
  const DenseTensor approx = approximation(bp);
  DenseTensor q1 = bp.data, q2 = approx;
  for (std::size_t k = 0; k < approx.size(); ++k) {
    q1[k] /= approx[k] * approx[k];
    q2[k] = 1.0 / approx[k];
  }
  ItakuraSaitoCoefficients out{matmul_transposed(q1, bp.mixing), matmul_transposed(q2, bp.mixing)};
  for (std::size_t k = 0; k < out.abar.size(); ++k)
    out.abar[k] *= bp.current[k] * bp.current[k];
  return out;
}

// --- Scalar roots --------------------------------------------------------

double kl_l2_root(double mu, double b, double c) {
  if (c <= 0.0) return 0.0;
  return 2.0 * c / (b + std::sqrt(b * b + 8.0 * mu * c));
}

double polynomial_root(double a, double exponent, double b, double c) {
  if (a < 0.0 || b < 0.0 || c < 0.0 || !(exponent >= 0.0))
    throw std::invalid_argument("polynomial_root: coefficients must be nonnegative");
  if (c == 0.0) return 0.0;
  if (exponent == 0.0) return b > 0.0 ? std::max(0.0, (c - a) / b) : 0.0;
  double hi = std::numeric_limits<double>::infinity();
  if (b > 0.0) hi = c / b;
  if (a > 0.0) hi = std::min(hi, std::pow(c / a, 1.0 / exponent));
  if (!std::isfinite(hi)) throw std::domain_error("polynomial_root: no positive root (a = b = 0)");
  double lo = 0.0, x = hi;
  for (int it = 0; it < 200; ++it) {
    const double xe = std::pow(x, exponent);
    const double h = a * xe + b * x - c;
    if (h == 0.0) return x;
    if (h > 0.0) hi = x;
    else lo = x;
    const double dh = a * exponent * xe / x + b;
    double next = x - h / dh;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x) return next;
    x = next;
  }
  return x;
}

double is_l2_root(double mu, double abar, double cbar) {
  if (!(mu > 0.0)) throw std::invalid_argument("is_l2_root: mu must be positive");
  if (abar <= 0.0) return 0.0;
  auto h = [&](double x) { return (2.0 * mu * x + cbar) * x * x - abar; };

  // x^3 + P x^2 + R = 0, depressed through x = z - P/3 into z^3 + a z + b = 0.
  const double P = cbar / (2.0 * mu);
  const double R = -abar / (2.0 * mu);
  const double a = -P * P / 3.0;
  const double b = 2.0 * P * P * P / 27.0 + R;
  const double disc = b * b / 4.0 + a * a * a / 27.0;
  const double scale = b * b / 4.0 + std::abs(a * a * a) / 27.0;

  double x;
  if (std::abs(disc) <= kDiscriminantGuard * scale && a != 0.0) {
    // Double root -3b/(2a) and simple root 3b/a; keep the positive one.
    x = std::max(3.0 * b / a, -1.5 * b / a) - P / 3.0;
  } else if (disc > 0.0) {
    const double sq = std::sqrt(disc);
    x = std::cbrt(-b / 2.0 + sq) + std::cbrt(-b / 2.0 - sq) - P / 3.0;
  } else {
    const double rho = 2.0 * std::sqrt(-a / 3.0);
    const double arg = std::clamp(1.5 * b / a * std::sqrt(-3.0 / a), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    x = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k)
      x = std::max(x, rho * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0) - P / 3.0);
  }

  // Polish inside the bracket that provably holds the unique positive root.
  double lo = 0.0;
  double hi = std::cbrt(abar / (2.0 * mu));
  if (cbar > 0.0) hi = std::min(hi, std::sqrt(abar / cbar));
  if (!(x > lo && x <= hi)) x = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double hx = h(x);
    if (hx == 0.0) break;
    if (hx > 0.0) hi = x;
    else lo = x;
    double next = x - hx / ((6.0 * mu * x + 2.0 * cbar) * x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

// --- Update rules --------------------------------------------------------

DenseTensor mm_update_kl_l1(const BlockProblem& bp) {
  bp.validate();
  if (bp.beta != 1.0 || bp.degree != 1)
    throw std::invalid_argument("mm_update_kl_l1: requires beta = 1 and an l1 penalty");
  const DenseTensor approx = approximation(bp);
  DenseTensor ratio = bp.data;
  for (std::size_t k = 0; k < ratio.size(); ++k) ratio[k] /= approx[k];
  const DenseTensor num = matmul_transposed(ratio, bp.mixing);
  const std::vector<double> s = row_sums(bp.mixing);
  DenseTensor out = bp.current;
  for (std::size_t k = 0; k < out.cols(); ++k) {
    const double den = bp.mu + s[k];
    for (std::size_t i = 0; i < out.rows(); ++i) out(i, k) = out(i, k) * num(i, k) / den;
  }
  floor_at(out, bp.epsilon);
  return out;
}

DenseTensor mm_update_kl_l2(const BlockProblem& bp) {
  bp.validate();
  if (bp.beta != 1.0 || bp.degree != 2)
    throw std::invalid_argument("mm_update_kl_l2: requires beta = 1 and a squared-l2 penalty");
  if (!(bp.mu > 0.0)) throw std::invalid_argument("mm_update_kl_l2: mu must be positive");
  const DenseTensor approx = approximation(bp);
  DenseTensor ratio = bp.data;
  for (std::size_t k = 0; k < ratio.size(); ++k) ratio[k] /= approx[k];
  const DenseTensor num = matmul_transposed(ratio, bp.mixing);
  const std::vector<double> s = row_sums(bp.mixing);
  DenseTensor out = bp.current;
  for (std::size_t k = 0; k < out.cols(); ++k)
    for (std::size_t i = 0; i < out.rows(); ++i)
      out(i, k) = kl_l2_root(bp.mu, s[k], out(i, k) * num(i, k));
  floor_at(out, bp.epsilon);
  return out;
}

DenseTensor mm_update_is_l2(const BlockProblem& bp) {
  bp.validate();
  if (bp.beta != 0.0 || bp.degree != 2)
    throw std::invalid_argument("mm_update_is_l2: requires beta = 0 and a squared-l2 penalty");
  if (!(bp.mu > 0.0)) throw std::invalid_argument("mm_update_is_l2: mu must be positive");
  const ItakuraSaitoCoefficients co = is_coefficients(bp);
  DenseTensor out = bp.current;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = is_l2_root(bp.mu, co.abar[k], co.cbar[k]);
  floor_at(out, bp.epsilon);
  return out;
}

DenseTensor mm_update_generic(const BlockProblem& bp) {
  bp.validate();
  if (bp.beta < 1.0) throw std::invalid_argument("mm_update_generic: beta must lie in [1, 2]");
  if (!(bp.mu > 0.0)) throw std::invalid_argument("mm_update_generic: mu must be positive");
  const PolynomialCoefficients co = mm_coefficients(bp);
  DenseTensor out = bp.current;
  for (std::size_t k = 0; k < out.size(); ++k) {
    try {
      out[k] = polynomial_root(co.a, co.exponent, co.b[k], co.c[k]);
    } catch (const std::domain_error& e) {
      throw std::domain_error("mm_update_generic: entry " + std::to_string(k) + ": " + e.what());
    }
  }
  floor_at(out, bp.epsilon);
  return out;
}

DenseTensor mm_update(const BlockProblem& bp) {
  if (bp.beta == 1.0 && bp.degree == 1) return mm_update_kl_l1(bp);
  if (bp.beta == 1.0 && bp.degree == 2) return mm_update_kl_l2(bp);
  if (bp.beta == 0.0 && bp.degree == 2) return mm_update_is_l2(bp);
  if (bp.beta >= 1.0 && bp.beta <= 2.0) return mm_update_generic(bp);
  throw std::invalid_argument("mm_update: no update rule for beta = " + std::to_string(bp.beta) +
                              " with degree " + std::to_string(bp.degree));
}

// --- Core update ---------------------------------------------------------

DenseTensor mm_update_core(const DenseTensor& core, const std::vector<DenseTensor>& factors,
                           const DenseTensor& data, double mu, int degree, double epsilon) {
  FactorSet model{factors, core};
  model.validate();
  if (!(mu >= 0.0)) throw std::invalid_argument("mm_update_core: mu must be >= 0");
  if (degree != 1 && degree != 2) throw std::invalid_argument("mm_update_core: degree must be 1 or 2");
  if (degree == 2 && !(mu > 0.0))
    throw std::invalid_argument("mm_update_core: squared-l2 core needs mu > 0");
  DenseTensor ratio = tucker_reconstruct(model);
  if (ratio.shape() != data.shape()) throw std::invalid_argument("mm_update_core: data shape mismatch");
  for (std::size_t k = 0; k < ratio.size(); ++k)
    ratio[k] = data[k] / std::max(ratio[k], kDivergenceFloor);
  DenseTensor num = std::move(ratio);
  for (std::size_t i = 0; i < factors.size(); ++i) num = mode_product_transposed(num, factors[i], i);

  // Denominator: outer product of factor column sums, never materialised.
  std::vector<std::vector<double>> sums;
  for (const auto& x : factors) sums.push_back(column_sums(x));
  DenseTensor out = core;
  const auto& shape = core.shape();
  std::vector<std::size_t> idx(shape.size(), 0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double b = 1.0;
    for (std::size_t i = 0; i < idx.size(); ++i) b *= sums[i][idx[i]];
    const double c = core[k] * num[k];
    out[k] = degree == 1 ? c / (mu + b) : kl_l2_root(mu, b, c);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (++idx[i] < shape[i]) break;
      idx[i] = 0;
    }
  }
  floor_at(out, epsilon);
  return out;
}

// --- HALS ----------------------------------------------------------------

DenseTensor hals_update_ridge(const DenseTensor& x, const DenseTensor& gram, const DenseTensor& cross,
                              double mu, double epsilon) {
  const std::size_t m = x.rows(), r = x.cols();
  if (gram.rows() != r || gram.cols() != r || cross.rows() != m || cross.cols() != r)
    throw std::invalid_argument("hals_update_ridge: shape mismatch");
  DenseTensor out = x;
  for (std::size_t q = 0; q < r; ++q) {
    const double den = gram(q, q) + mu;
    if (!(den > 0.0)) throw std::domain_error("hals_update_ridge: G[q,q] + mu must be positive");
    for (std::size_t i = 0; i < m; ++i) {
      double v = cross(i, q);
      for (std::size_t j = 0; j < r; ++j)
        if (j != q) v -= out(i, j) * gram(j, q);
      out(i, q) = std::max(epsilon, v / den);
    }
  }
  return out;
}

}  // namespace hrsi
