#include <cmath>
#include <random>

#include "doctest.h"
#include "hrsi/tensor.hpp"

using namespace hrsi;

namespace {

DenseTensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DenseTensor t(std::move(shape));
  for (double& v : t.values()) v = u(rng);
  return t;
}

double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  REQUIRE(a.shape() == b.shape());
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

// Slow oracle: every 3-way Tucker entry summed explicitly.
double tucker_entry(const FactorSet& f, std::size_t i, std::size_t j, std::size_t k) {
  const DenseTensor& g = *f.core;
  double s = 0.0;
  for (std::size_t a = 0; a < g.extent(0); ++a)
    for (std::size_t b = 0; b < g.extent(1); ++b)
      for (std::size_t c = 0; c < g.extent(2); ++c)
        s += g(a, b, c) * f.factors[0](i, a) * f.factors[1](j, b) * f.factors[2](k, c);
  return s;
}

}  // namespace

TEST_CASE("storage is first-index fastest") {
  DenseTensor t({2, 3, 4});
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(k);
  CHECK(t(1, 0, 0) == 1.0);
  CHECK(t(0, 1, 0) == 2.0);
  CHECK(t(0, 0, 1) == 6.0);
  const std::size_t idx[] = {1, 2, 3};
  CHECK(t.at(idx) == 23.0);
  const std::size_t bad[] = {2, 0, 0};
  CHECK_THROWS(t.at(bad));
}

TEST_CASE("from_rows and columns") {
  DenseTensor m = DenseTensor::from_rows({{1, 2}, {3, 4}, {5, 6}});
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 2);
  CHECK(m(2, 1) == 6.0);
  auto c = m.column(1);
  CHECK(c[0] == 2.0);
  CHECK(c[2] == 6.0);
  CHECK_THROWS(DenseTensor({2, 2}, std::vector<double>{1, 2, 3}));
}

TEST_CASE("unfold matches the documented column index and folds back") {
  std::mt19937_64 rng(1);
  DenseTensor t = random_tensor({3, 4, 5}, rng);
  for (std::size_t n = 0; n < 3; ++n) {
    DenseTensor u = unfold(t, n);
    CHECK(u.rows() == t.extent(n));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t k = 0; k < 5; ++k) {
          const std::size_t idx[3] = {i, j, k};
          std::size_t col = 0, stride = 1;
          for (std::size_t m = 0; m < 3; ++m) {
            if (m == n) continue;
            col += idx[m] * stride;
            stride *= t.extent(m);
          }
          REQUIRE(u(idx[n], col) == t(i, j, k));
        }
    CHECK(fold(u, n, t.shape()) == t);
  }
}

TEST_CASE("mode products agree with explicit sums") {
  std::mt19937_64 rng(2);
  DenseTensor t = random_tensor({3, 4, 2}, rng);
  DenseTensor u = random_tensor({5, 4}, rng);
  DenseTensor p = mode_product(t, u, 1);
  REQUIRE(p.shape() == std::vector<std::size_t>{3, 5, 2});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t a = 0; a < 5; ++a)
      for (std::size_t k = 0; k < 2; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < 4; ++j) s += u(a, j) * t(i, j, k);
        CHECK(p(i, a, k) == doctest::Approx(s).epsilon(1e-14));
      }
  DenseTensor ut = transpose(u);
  CHECK(max_abs_diff(mode_product_transposed(t, ut, 1), p) < 1e-14);
}

TEST_CASE("kronecker and khatri-rao") {
  DenseTensor a = DenseTensor::from_rows({{1, 2}, {3, 4}});
  DenseTensor b = DenseTensor::from_rows({{0, 5}, {6, 7}});
  DenseTensor k = kronecker(a, b);
  CHECK(k.rows() == 4);
  CHECK(k(0, 1) == 5.0);
  CHECK(k(3, 3) == 28.0);
  CHECK(k(2, 1) == 15.0);
  DenseTensor kr = khatri_rao(a, b);
  REQUIRE(kr.cols() == 2);
  // Column q is a[:,q] (x) b[:,q].
  CHECK(kr(0, 0) == 0.0);
  CHECK(kr(1, 0) == 6.0);
  CHECK(kr(2, 0) == 0.0);
  CHECK(kr(3, 0) == 18.0);
  CHECK(kr(3, 1) == 28.0);
}

TEST_CASE("cp unfolding identity") {
  std::mt19937_64 rng(3);
  FactorSet f;
  for (std::size_t m : {4, 3, 5}) f.factors.push_back(random_tensor({m, 2}, rng));
  DenseTensor t = cp_reconstruct(f);
  for (std::size_t n = 0; n < 3; ++n) {
    DenseTensor lhs = unfold(t, n);
    DenseTensor rhs = matmul_transposed(f.factors[n], khatri_rao_except(f.factors, n));
    CHECK(max_abs_diff(lhs, rhs) < 1e-13);
  }
  double s = 0.0;
  for (std::size_t q = 0; q < 2; ++q) s += f.factors[0](1, q) * f.factors[1](2, q) * f.factors[2](4, q);
  CHECK(t(1, 2, 4) == doctest::Approx(s));
}

TEST_CASE("tucker reconstruction against the explicit sum") {
  std::mt19937_64 rng(4);
  FactorSet f;
  f.factors = {random_tensor({4, 3}, rng), random_tensor({3, 2}, rng), random_tensor({5, 2}, rng)};
  f.core = random_tensor({3, 2, 2}, rng);
  f.validate();
  DenseTensor t = reconstruct(f);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 5; ++k) CHECK(t(i, j, k) == doctest::Approx(tucker_entry(f, i, j, k)));

  // A superdiagonal core turns Tucker into CP.
  FactorSet cp;
  cp.factors = {random_tensor({4, 2}, rng), random_tensor({3, 2}, rng), random_tensor({5, 2}, rng)};
  FactorSet tk = cp;
  tk.core = superdiagonal(3, 2);
  CHECK(max_abs_diff(reconstruct(cp), reconstruct(tk)) < 1e-14);
}

TEST_CASE("matrix helpers") {
  DenseTensor a = DenseTensor::from_rows({{1, 2}, {3, 4}, {5, 6}});
  DenseTensor g = gram(a);
  CHECK(g(0, 0) == 35.0);
  CHECK(g(0, 1) == 44.0);
  CHECK(g(1, 1) == 56.0);
  CHECK(matmul(transpose(a), a) == g);
  CHECK(matmul(a, DenseTensor::identity(2)) == a);
  CHECK(frobenius_norm_sq(a) == 91.0);
  CHECK(sum(a) == 21.0);
  CHECK(column_sums(a) == std::vector<double>{9.0, 12.0});
  const double x[] = {-1.0, 2.0};
  CHECK(lp_norm_pow(x, 1.0) == 3.0);
  CHECK(lp_norm_pow(x, 2.0) == 5.0);
  CHECK_THROWS(matmul(a, a));
}

TEST_CASE("factor set validation") {
  FactorSet f;
  f.factors = {DenseTensor::matrix(3, 2), DenseTensor::matrix(4, 3)};
  CHECK_THROWS(f.validate());
  f.factors[1] = DenseTensor::matrix(4, 2);
  CHECK_NOTHROW(f.validate());
  CHECK(f.rank() == 2);
  CHECK(f.num_blocks() == 2);
  f.core = DenseTensor({2, 3});
  CHECK_THROWS(f.validate());
}
