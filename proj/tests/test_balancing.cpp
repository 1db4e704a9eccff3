#include <cmath>
#include <random>

#include "doctest.h"
#include "hrsi/balancing.hpp"

using namespace hrsi;

namespace {

std::mt19937_64& rng() {
  static std::mt19937_64 r(2024);
  return r;
}

DenseTensor uniform(std::vector<std::size_t> shape, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  DenseTensor t(std::move(shape));
  for (double& v : t.values()) v = u(rng());
  return t;
}

double g(const DenseTensor& m, std::size_t q, PenaltyKind kind) {
  double s = 0.0;
  for (double v : m.column(q)) s += kind == PenaltyKind::l1 ? std::abs(v) : v * v;
  return s;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double max_rel_diff(const DenseTensor& a, const DenseTensor& b) {
  double d = 0.0, n = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    d = std::max(d, std::abs(a[k] - b[k]));
    n = std::max(n, std::abs(b[k]));
  }
  return d / n;
}

// Two-term minimum of l^p1 a1 + l^-p2 a2 on a fine log grid.
double grid_min_two(double a1, double p1, double a2, double p2) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 20000; ++k) {
    const double l = std::exp(-12.0 + 24.0 * k / 20000.0);
    best = std::min(best, std::pow(l, p1) * a1 + std::pow(l, -p2) * a2);
  }
  return best;
}

}  // namespace

TEST_CASE("optimal scales, worked cases") {
  {
    const double a[] = {3.0, 3.0}, p[] = {1.0, 1.0};
    auto s = optimal_scales(a, p);
    CHECK(s.scales[0] == doctest::Approx(1.0));
    CHECK(s.scales[1] == doctest::Approx(1.0));
    CHECK(s.level == doctest::Approx(3.0));
  }
  {
    const double a[] = {2.0, 8.0}, p[] = {1.0, 1.0};
    auto s = optimal_scales(a, p);
    CHECK(s.level == doctest::Approx(4.0));
    CHECK(s.scales[0] == doctest::Approx(2.0));
    CHECK(s.scales[1] == doctest::Approx(0.5));
    CHECK(s.scales[0] * 2.0 + s.scales[1] * 8.0 == doctest::Approx(grid_min_two(2.0, 1.0, 8.0, 1.0)).epsilon(1e-6));
  }
  {
    const double a[] = {4.0, 16.0}, p[] = {2.0, 2.0};
    auto s = optimal_scales(a, p);
    CHECK(s.level == doctest::Approx(16.0));
    CHECK(s.scales[0] == doctest::Approx(std::sqrt(2.0)));
    CHECK(s.scales[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
  }
  const double bad[] = {0.0, 1.0}, p[] = {1.0, 1.0};
  CHECK_THROWS(optimal_scales(bad, p));
}

TEST_CASE("optimal scales beat a constrained grid for mixed degrees") {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double a[] = {std::exp(u(rng())), std::exp(u(rng()))};
    for (auto [p1, p2] : {std::pair{1.0, 2.0}, std::pair{2.0, 1.0}, std::pair{2.0, 2.0}}) {
      const double p[] = {p1, p2};
      auto s = optimal_scales(a, p);
      CHECK(rel(s.scales[0] * s.scales[1], 1.0) < 1e-12);
      const double val = std::pow(s.scales[0], p1) * a[0] + std::pow(s.scales[1], p2) * a[1];
      CHECK(val <= grid_min_two(a[0], p1, a[1], p2) + 1e-6);
    }
  }
}

TEST_CASE("balance_columns equalises and keeps the reconstruction") {
  for (int trial = 0; trial < 20; ++trial) {
    FactorSet f;
    f.factors = {uniform({5, 3}, 0.0, 10.0), uniform({4, 3}, 0.0, 0.1), uniform({6, 3})};
    RegularizerSpec spec{{{PenaltyKind::l1, 0.7}, {PenaltyKind::l2_squared, 2.0}, {PenaltyKind::l2_squared, 0.3}}};
    auto res = balance_columns(f, spec);
    CHECK(res.report.penalty_after <= res.report.penalty_before);
    CHECK(max_rel_diff(reconstruct(res.factors), reconstruct(f)) < 1e-12);
    for (std::size_t q = 0; q < 3; ++q) {
      const double level = res.report.columns[q].level;
      double prod = 1.0;
      for (std::size_t i = 0; i < 3; ++i) {
        const auto& b = spec.blocks[i];
        CHECK(rel(b.degree() * b.weight * g(res.factors.factors[i], q, b.kind), level) <= 1e-10);
        prod *= res.report.columns[q].scales[i];
      }
      CHECK(rel(prod, 1.0) < 1e-12);
    }
    // Balancing twice changes nothing.
    auto again = balance_columns(res.factors, spec);
    for (std::size_t i = 0; i < 3; ++i) CHECK(max_rel_diff(again.factors.factors[i], res.factors.factors[i]) < 1e-12);
    // The balanced point is where explicit and implicit penalties agree.
    CHECK(rel(implicit_cost(res.factors, spec), spec.total(res.factors)) < 1e-10);
    CHECK(implicit_cost(f, spec) <= spec.total(f) * (1.0 + 1e-12));
  }
}

TEST_CASE("balance_columns worked cases") {
  RegularizerSpec spec = RegularizerSpec::uniform(PenaltyKind::l1, 1.0, 2);
  FactorSet f;
  f.factors = {DenseTensor::from_rows({{1.0}, {1.0}}), DenseTensor::from_rows({{4.0}, {4.0}})};
  auto res = balance_columns(f, spec);
  CHECK(g(res.factors.factors[0], 0, PenaltyKind::l1) == doctest::Approx(4.0));
  CHECK(g(res.factors.factors[1], 0, PenaltyKind::l1) == doctest::Approx(4.0));

  FactorSet fixed;
  fixed.factors = {DenseTensor::from_rows({{1.0}, {2.0}}), DenseTensor::from_rows({{2.0}, {1.0}})};
  CHECK(balance_columns(fixed, spec).factors.factors == fixed.factors);

  CHECK_THROWS(balance_columns(f, RegularizerSpec{{{PenaltyKind::l1, 1.0}, {PenaltyKind::l1, 0.0}}}));
}

TEST_CASE("zero columns propagate and the floor is restored") {
  const double eps = 1e-16;
  RegularizerSpec spec = RegularizerSpec::uniform(PenaltyKind::l2_squared, 1.0, 2);
  FactorSet f;
  f.factors = {DenseTensor::from_rows({{eps, 3.0}, {eps, 1.0}}), DenseTensor::from_rows({{5.0, 2.0}, {1.0, 1.0}})};
  auto res = balance_columns(f, spec, {eps});
  CHECK(res.report.columns[0].zeroed);
  CHECK_FALSE(res.report.columns[1].zeroed);
  for (const auto& x : res.factors.factors) {
    CHECK(x(0, 0) == eps);
    CHECK(x(1, 0) == eps);
  }
  // Without a floor the zero column stays exactly zero.
  FactorSet z = f;
  z.factors[0](0, 0) = z.factors[0](1, 0) = 0.0;
  auto rz = balance_columns(z, spec);
  CHECK(rz.factors.factors[1](0, 0) == 0.0);
  CHECK(is_zero_vector(rz.factors.factors[1].column(0), 0.0));
}

TEST_CASE("projected balancing ignores entries below 2 eps") {
  const double eps = 1e-10;
  RegularizerSpec spec = RegularizerSpec::uniform(PenaltyKind::l1, 1.0, 2);
  FactorSet f;
  f.factors = {DenseTensor::from_rows({{1.5 * eps}, {2.0}}), DenseTensor::from_rows({{8.0}, {0.0}})};
  auto res = balance_columns(f, spec, {eps});
  // g computed on (0, 2) and (8, 0): scales 2 and 1/2.
  CHECK(res.factors.factors[0](1, 0) == doctest::Approx(4.0));
  CHECK(res.factors.factors[1](0, 0) == doctest::Approx(4.0));
  CHECK(res.factors.factors[0](0, 0) == eps);
  CHECK(res.factors.factors[1](1, 0) == eps);
}

TEST_CASE("scalar NTD balancing") {
  FactorSet f;
  f.factors = {DenseTensor::matrix(1, 1, 1.0), DenseTensor::matrix(1, 1, 1.0), DenseTensor::matrix(1, 1, 1.0)};
  f.core = DenseTensor({1, 1, 1}, 16.0);
  RegularizerSpec spec{{{PenaltyKind::l2_squared, 1.0}, {PenaltyKind::l2_squared, 1.0},
                        {PenaltyKind::l2_squared, 1.0}, {PenaltyKind::l1, 1.0}}};
  auto res = balance_ntd_scalar(f, spec);
  const double a[] = {1.0, 1.0, 1.0, 16.0}, p[] = {2.0, 2.0, 2.0, 1.0};
  auto oracle = optimal_scales(a, p);
  const double level = oracle.level;
  for (std::size_t b = 0; b < 4; ++b) {
    const auto& pen = spec.blocks[b];
    CHECK(rel(pen.degree() * pen.weight * pen.norm(res.factors.block(b).values()), level) < 1e-10);
  }

  // Larger random case: reconstruction preserved, penalty not increased,
  // outputs independent of a common rescaling of every weight.
  FactorSet t;
  t.factors = {uniform({5, 3}, 0.0, 20.0), uniform({4, 2}), uniform({3, 2})};
  t.core = uniform({3, 2, 2});
  auto r1 = balance_ntd_scalar(t, spec);
  CHECK(max_rel_diff(reconstruct(r1.factors), reconstruct(t)) < 1e-12);
  CHECK(spec.total(r1.factors) <= spec.total(t));
  RegularizerSpec scaled = spec;
  for (auto& b : scaled.blocks) b.weight *= 7.0;
  auto r7 = balance_ntd_scalar(t, scaled);
  for (std::size_t b = 0; b < 4; ++b) CHECK(max_rel_diff(r7.factors.block(b), r1.factors.block(b)) < 1e-12);
  CHECK(rel(implicit_cost_vectorized(r1.factors, spec), spec.total(r1.factors)) < 1e-10);
}

TEST_CASE("sinkhorn balancing decreases the scaling objective") {
  RegularizerSpec spec{{{PenaltyKind::l2_squared, 0.5}, {PenaltyKind::l2_squared, 1.0},
                        {PenaltyKind::l2_squared, 2.0}, {PenaltyKind::l1, 1.0}}};
  for (int trial = 0; trial < 10; ++trial) {
    FactorSet f;
    f.factors = {uniform({3, 2}, 0.0, 10.0), uniform({3, 2}), uniform({3, 2}, 0.0, 0.1)};
    f.core = uniform({2, 2, 2});
    auto res = sinkhorn_balance_ntd(f, spec, 50);
    REQUIRE(res.objective.size() == 50);
    CHECK(res.objective.front() <= spec.total(f) * (1.0 + 1e-12));
    for (std::size_t k = 1; k < res.objective.size(); ++k)
      CHECK(res.objective[k] <= res.objective[k - 1] * (1.0 + 1e-12));
    CHECK(max_rel_diff(reconstruct(res.factors), reconstruct(f)) < 1e-10);
    // It never does worse than the single global scale.
    CHECK(res.objective.back() <= spec.total(balance_ntd_scalar(f, spec).factors) * (1.0 + 1e-9));

    // Once converged another pass is a fixed point.
    auto again = sinkhorn_balance_ntd(res.factors, spec, 1);
    CHECK(rel(again.objective.back(), res.objective.back()) < 1e-6);
  }
}

TEST_CASE("sinkhorn zeroes a slice whose factor column vanishes") {
  RegularizerSpec spec{{{PenaltyKind::l2_squared, 1.0}, {PenaltyKind::l2_squared, 1.0},
                        {PenaltyKind::l2_squared, 1.0}, {PenaltyKind::l1, 1.0}}};
  FactorSet f;
  f.factors = {uniform({3, 2}), uniform({3, 2}), uniform({3, 2})};
  f.core = uniform({2, 2, 2});
  for (double& v : f.factors[0].column(1)) v = 0.0;
  auto res = sinkhorn_balance_ntd(f, spec, 3);
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < 2; ++k) CHECK((*res.factors.core)(1, j, k) == 0.0);
  CHECK_THROWS(sinkhorn_balance_ntd(f, RegularizerSpec::uniform(PenaltyKind::l1, 1.0, 4)));
}

TEST_CASE("initial scaling") {
  // M = 4 u v^T with X1 = u, X2 = v: eta^2 = 4.
  FactorSet f;
  f.factors = {DenseTensor::from_rows({{1.0}, {2.0}}), DenseTensor::from_rows({{3.0}, {1.0}})};
  DenseTensor m = matmul_transposed(f.factors[0], f.factors[1]);
  for (double& v : m.values()) v *= 4.0;
  auto s = initial_scaling(f, m, RegularizerSpec::uniform(PenaltyKind::l1, 1e-12, 2));
  CHECK(s.eta == doctest::Approx(2.0).epsilon(1e-8));

  // Already optimal: eta stays exactly 1.
  DenseTensor m1 = matmul_transposed(f.factors[0], f.factors[1]);
  auto s1 = initial_scaling(f, m1, RegularizerSpec::uniform(PenaltyKind::l1, 0.0, 2));
  CHECK(s1.eta == 1.0);

  // Huge penalty drives eta to the lower end; data-only mode ignores it.
  auto big = initial_scaling(f, m, RegularizerSpec::uniform(PenaltyKind::l2_squared, 1e9, 2));
  CHECK(big.eta < 1e-3);
  auto data_only = initial_scaling(f, m, RegularizerSpec::uniform(PenaltyKind::l2_squared, 1e9, 2), false);
  CHECK(data_only.eta == doctest::Approx(2.0).epsilon(1e-8));

  // General case against a brute-force scan of the same 1-D objective.
  FactorSet r;
  r.factors = {uniform({4, 2}), uniform({5, 2})};
  DenseTensor d = uniform({4, 5});
  RegularizerSpec spec{{{PenaltyKind::l1, 0.3}, {PenaltyKind::l2_squared, 0.2}}};
  auto phi = [&](double eta) {
    FactorSet e = r;
    for (auto& x : e.factors)
      for (double& v : x.values()) v *= eta;
    DenseTensor rec = reconstruct(e);
    double fit = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) fit += (d[k] - rec[k]) * (d[k] - rec[k]);
    return fit + spec.total(e);
  };
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 100000; ++k) best = std::min(best, phi(std::exp(-5.0 + 10.0 * k / 100000.0)));
  auto sr = initial_scaling(r, d, spec);
  CHECK(phi(sr.eta) <= best + 1e-12);

  FactorSet zero;
  zero.factors = {DenseTensor::matrix(2, 1), DenseTensor::matrix(2, 1)};
  auto z = initial_scaling(zero, m, spec);
  CHECK(z.degenerate);
  CHECK(z.eta == 1.0);
}

TEST_CASE("implicit cost worked cases") {
  RegularizerSpec spec = RegularizerSpec::uniform(PenaltyKind::l1, 1.0, 2);
  FactorSet bal;
  bal.factors = {DenseTensor::from_rows({{4.0}}), DenseTensor::from_rows({{4.0}})};
  CHECK(implicit_cost(bal, spec) == doctest::Approx(8.0));
  CHECK(spec.total(bal) == doctest::Approx(8.0));
  FactorSet unbal;
  unbal.factors = {DenseTensor::from_rows({{2.0}}), DenseTensor::from_rows({{8.0}})};
  CHECK(implicit_cost(unbal, spec) == doctest::Approx(8.0));
  CHECK(spec.total(unbal) == doctest::Approx(10.0));
  FactorSet zero;
  zero.factors = {DenseTensor::from_rows({{0.0, 2.0}}), DenseTensor::from_rows({{5.0, 8.0}})};
  CHECK(implicit_cost(zero, spec) == doctest::Approx(8.0));
}

TEST_CASE("ill-posedness curve") {
  FactorSet f;
  f.factors = {uniform({6, 2}), uniform({5, 2})};
  DenseTensor m = uniform({6, 5});
  const std::vector<double> shrinks{1.0, 0.1, 0.01, 1e-4};
  auto pts = illposedness_demo(f, m, 0.5, PenaltyKind::l1, shrinks, BetaSpec(1.0));
  const double loss = beta_divergence(m, reconstruct(f), BetaSpec(1.0));
  for (std::size_t k = 1; k < pts.size(); ++k) {
    CHECK(pts[k].objective <= pts[k - 1].objective);
    CHECK(pts[k].penalty < pts[k - 1].penalty);
    CHECK(pts[k].penalty == doctest::Approx(pts[0].penalty * shrinks[k]));
  }
  CHECK(rel(pts.back().objective, loss) < 1e-3);
  auto flat = illposedness_demo(f, m, 0.0, PenaltyKind::l1, shrinks, BetaSpec(1.0));
  for (const auto& p : flat) CHECK(p.objective == doctest::Approx(loss).epsilon(1e-12));
}
