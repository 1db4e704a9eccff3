#include <cmath>
#include <stdexcept>
#include <limits>

#include "doctest.h"
#include "hrsi/divergence.hpp"

using namespace hrsi;

namespace {

// Textbook forms, written out separately from the library.
double oracle(double x, double y, double beta) {
  if (beta == 0.0) return x / y - std::log(x / y) - 1.0;
  if (beta == 1.0) return x * std::log(x / y) - x + y;
  return (std::pow(x, beta) + (beta - 1.0) * std::pow(y, beta) - beta * x * std::pow(y, beta - 1.0)) /
         (beta * (beta - 1.0));
}

}  // namespace

TEST_CASE("beta range") {
  CHECK_THROWS(BetaSpec(-0.1));
  CHECK_THROWS(BetaSpec(2.5));
  CHECK_THROWS(BetaSpec(std::nan("")));
  CHECK_NOTHROW(BetaSpec(0.0));
  CHECK_NOTHROW(BetaSpec(2.0));
}

TEST_CASE("reference values") {
  CHECK(beta_divergence(1.0, 1.0, BetaSpec(1.0)) == 0.0);
  CHECK(beta_divergence(3.0, 1.0, BetaSpec(2.0)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(beta_divergence(2.0, 1.0, BetaSpec(0.0)) == doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-15));
  CHECK(beta_divergence(2.0, 1.0, BetaSpec(0.0)) == doctest::Approx(0.306853).epsilon(1e-6));
}

TEST_CASE("matches the textbook forms on a log grid") {
  for (double beta : {0.0, 0.3, 0.5, 1.0, 1.5, 2.0})
    for (int i = -6; i <= 6; ++i)
      for (int j = -6; j <= 6; ++j) {
        const double x = std::pow(3.0, i), y = std::pow(3.0, j);
        const double d = beta_divergence(x, y, BetaSpec(beta));
        CHECK(d >= 0.0);
        const double o = oracle(x, y, beta);
        CHECK(std::abs(d - o) <= 1e-12 * std::max(1.0, std::abs(o)));
      }
}

TEST_CASE("zero conventions") {
  CHECK(beta_divergence(0.0, 2.0, BetaSpec(1.0)) == 2.0);
  CHECK(beta_divergence(0.0, 2.0, BetaSpec(2.0)) == 2.0);
  CHECK(std::isinf(beta_divergence(0.0, 2.0, BetaSpec(0.0))));
  // An exact zero y is clamped, so a positive x gives a huge but finite value.
  const double d = beta_divergence(1.0, 0.0, BetaSpec(1.0));
  CHECK(std::isfinite(d));
  CHECK(d > 600.0);
  CHECK_THROWS_AS(beta_divergence(-1.0, 1.0, BetaSpec(1.0)), std::domain_error);
  CHECK_THROWS_AS(beta_divergence(1.0, -1.0, BetaSpec(1.0)), std::domain_error);
}

TEST_CASE("tensor version sums entries and checks shapes") {
  DenseTensor x = DenseTensor::from_rows({{1, 2}, {3, 4}});
  DenseTensor y = DenseTensor::from_rows({{2, 2}, {1, 5}});
  double s = 0.0;
  for (std::size_t k = 0; k < 4; ++k) s += oracle(x[k], y[k], 1.0);
  CHECK(beta_divergence(x, y, BetaSpec(1.0)) == doctest::Approx(s).epsilon(1e-14));
  CHECK(beta_divergence(x, x, BetaSpec(0.5)) == 0.0);
  CHECK_THROWS(beta_divergence(x, DenseTensor::matrix(2, 3, 1.0), BetaSpec(1.0)));
}

TEST_CASE("homogeneity of degree beta") {
  for (double beta : {0.0, 0.5, 1.0, 1.5, 2.0})
    for (double lambda : {1e-3, 0.5, 7.0, 1e4}) {
      const double x = 1.7, y = 0.4;
      const double base = beta_divergence(x, y, BetaSpec(beta));
      const double scaled = beta_divergence(lambda * x, lambda * y, BetaSpec(beta));
      CHECK(std::abs(scaled - std::pow(lambda, beta) * base) <= 1e-10 * std::pow(lambda, beta) * base);
    }
}

TEST_CASE("continuity across the special branches") {
  for (double x : {0.3, 1.0, 4.0})
    for (double y : {0.2, 1.5}) {
      const double kl = beta_divergence(x, y, BetaSpec(1.0));
      CHECK(std::abs(beta_divergence(x, y, BetaSpec(1.0 + 1e-6)) - kl) < 1e-4);
      CHECK(std::abs(beta_divergence(x, y, BetaSpec(1.0 - 1e-6)) - kl) < 1e-4);
      const double is = beta_divergence(x, y, BetaSpec(0.0));
      CHECK(std::abs(beta_divergence(x, y, BetaSpec(1e-6)) - is) < 1e-4);
    }
}

TEST_CASE("split recombines to the divergence") {
  for (double beta : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    BetaSplit split{BetaSpec(beta)};
    for (double a : {0.01, 0.7, 2.0, 30.0})
      for (double b : {0.05, 1.0, 9.0}) {
        const double d = beta_divergence(a, b, BetaSpec(beta));
        const double parts = split.convex(a, b) + split.concave(a, b) + split.constant(a);
        CHECK(std::abs(parts - d) <= 1e-12 * std::max(1.0, std::abs(d)));
      }
  }
}

TEST_CASE("split branches") {
  BetaSplit s15{BetaSpec(1.5)};
  CHECK(s15.convex(2.0, 3.0) == beta_divergence(2.0, 3.0, BetaSpec(1.5)));
  CHECK(s15.concave(2.0, 3.0) == 0.0);
  CHECK(s15.constant(2.0) == 0.0);

  BetaSplit s0{BetaSpec(0.0)};
  CHECK(s0.convex(2.0, 1.0) == doctest::Approx(2.0));
  CHECK(s0.concave(2.0, 1.0) == doctest::Approx(0.0));
  CHECK(s0.concave(2.0, 5.0) == doctest::Approx(std::log(5.0)));
  CHECK(s0.convex(2.0, 1.0) + s0.concave(2.0, 1.0) + s0.constant(2.0) ==
        doctest::Approx(1.0 - std::log(2.0)));
  CHECK(s0.concave_derivative(2.0, 4.0) == doctest::Approx(0.25));

  // Central difference as the derivative oracle.
  BetaSplit s05{BetaSpec(0.5)};
  const double b = 1.3, h = 1e-6;
  const double fd = (s05.concave(2.0, b + h) - s05.concave(2.0, b - h)) / (2.0 * h);
  CHECK(s05.concave_derivative(2.0, b) == doctest::Approx(fd).epsilon(1e-8));
}
