#include <cmath>
#include <random>

#include "doctest.h"
#include "hrsi/models.hpp"
#include "hrsi/rng.hpp"

using namespace hrsi;

namespace {

DenseTensor uniform_data(std::vector<std::size_t> shape, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DenseTensor t(std::move(shape));
  for (double& v : t.values()) v = u(g);
  return t;
}

SolverConfig quick(BalancingMode mode, std::size_t outer = 30) {
  SolverConfig c;
  c.outer_iterations = outer;
  c.inner_iterations = 3;
  c.balancing = mode;
  c.init_first_factor_scale = 100.0;
  c.seed = 5;
  return c;
}

void check_balanced_rows(const Fit& fit) {
  for (const auto& row : fit.trace.rows) {
    if (!row.balanced) continue;
    double explicit_penalty = 0.0;
    for (double p : row.penalties) explicit_penalty += p;
    CHECK(std::abs(row.implicit_cost - explicit_penalty) <= 1e-10 * explicit_penalty);
    CHECK(row.objective <= row.pre_balance_objective * (1.0 + 1e-12));
    CHECK(std::abs(row.data_fit - row.pre_balance_data_fit) <= 1e-9 * row.pre_balance_data_fit);
  }
}

constexpr BalancingMode kModes[] = {BalancingMode::none, BalancingMode::init_only,
                                    BalancingMode::every_iteration};

}  // namespace

TEST_CASE("enum names round-trip") {
  for (BalancingMode m : kModes) CHECK(parse_balancing_mode(to_string(m)) == m);
  CHECK(to_string(BalancingMode::init_only) == "init");
  CHECK(parse_ntd_balance("sinkhorn") == NtdBalanceKind::sinkhorn);
  CHECK(parse_sparse_target("mode3") == SparseTarget::mode3);
  CHECK_THROWS(parse_balancing_mode("sometimes"));
}

TEST_CASE("config validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.beta = 3.0;
  CHECK_THROWS(c.validate());
  c = SolverConfig{};
  c.epsilon = -1.0;
  CHECK_THROWS(c.validate());
  c = SolverConfig{};
  c.init_first_factor_scale = 0.0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("random init is reproducible and scaled") {
  SolverConfig c;
  c.seed = 9;
  c.init_first_factor_scale = 100.0;
  FactorSet a = random_init({4, 5}, {2, 2}, false, c), b = random_init({4, 5}, {2, 2}, false, c);
  CHECK(a.factors == b.factors);
  double mx = 0.0;
  for (double v : a.factors[0].values()) mx = std::max(mx, v);
  CHECK(mx > 1.0);
  CHECK(mx <= 100.0);
  c.seed = 10;
  CHECK_FALSE(random_init({4, 5}, {2, 2}, false, c).factors == a.factors);
  FactorSet t = random_init({3, 4, 5}, {2, 3, 2}, true, c);
  REQUIRE(t.core);
  CHECK(t.core->shape() == std::vector<std::size_t>{2, 3, 2});
}

TEST_CASE("sparse NMF is monotone in every balancing mode") {
  DenseTensor m = uniform_data({12, 10}, 1);
  for (BalancingMode mode : kModes) {
    Fit fit = solve_snmf(m, 3, 0.5, 0.05, quick(mode));
    CHECK(fit.trace.rows.size() == 31);
    CHECK(fit.trace.monotone());
    check_balanced_rows(fit);
    for (const auto& x : fit.model.factors)
      for (double v : x.values()) CHECK(v >= 1e-16);
  }
}

TEST_CASE("balancing beats no balancing from an unbalanced start") {
  DenseTensor m = uniform_data({15, 15}, 2);
  const double none = solve_snmf(m, 3, 1.0, 1e-4, quick(BalancingMode::none, 40)).trace.rows.back().objective;
  const double every =
      solve_snmf(m, 3, 1.0, 1e-4, quick(BalancingMode::every_iteration, 40)).trace.rows.back().objective;
  CHECK(every < none);
}

TEST_CASE("other beta and penalty combinations for NMF") {
  DenseTensor m = uniform_data({8, 9}, 3);
  for (double beta : {0.0, 1.0, 1.5, 2.0}) {
    SolverConfig c = quick(BalancingMode::every_iteration, 15);
    c.beta = beta;
    RegularizerSpec spec = RegularizerSpec::uniform(PenaltyKind::l2_squared, 0.1, 2);
    Fit fit = solve_nmf(m, 2, spec, c);
    CHECK(fit.trace.monotone());
    check_balanced_rows(fit);
  }
  // beta = 0 needs squared l2 on both blocks.
  SolverConfig c = quick(BalancingMode::none, 5);
  c.beta = 0.0;
  CHECK_THROWS(solve_nmf(m, 2, RegularizerSpec::uniform(PenaltyKind::l1, 0.1, 2), c));
}

TEST_CASE("unregularised NMF runs without balancing and refuses it otherwise") {
  DenseTensor m = uniform_data({6, 6}, 4);
  RegularizerSpec zero = RegularizerSpec::uniform(PenaltyKind::l1, 0.0, 2);
  CHECK_THROWS(solve_nmf(m, 2, zero, quick(BalancingMode::every_iteration, 5)));
  Fit fit = solve_nmf(m, 2, zero, quick(BalancingMode::none, 20));
  CHECK(fit.trace.monotone());
}

TEST_CASE("runs are deterministic") {
  DenseTensor m = uniform_data({10, 7}, 5);
  Fit a = solve_snmf(m, 2, 0.3, 0.3, quick(BalancingMode::every_iteration, 10));
  Fit b = solve_snmf(m, 2, 0.3, 0.3, quick(BalancingMode::every_iteration, 10));
  CHECK(a.trace.same_values(b.trace));
  CHECK(a.model.factors == b.model.factors);
}

TEST_CASE("explicit init and stopping tolerance") {
  DenseTensor m = uniform_data({6, 5}, 6);
  FactorSet init;
  init.factors = {DenseTensor::matrix(6, 2, 0.5), DenseTensor::matrix(5, 2, 0.5)};
  init.factors[0](0, 0) = 0.9;
  SolverConfig c = quick(BalancingMode::every_iteration, 500);
  c.relative_tolerance = 1e-6;
  Fit fit = solve_snmf(m, 2, 0.1, 0.1, c, init);
  CHECK(fit.trace.rows.size() < 501);
  FactorSet bad = init;
  bad.factors[0] = DenseTensor::matrix(6, 3, 0.5);
  CHECK_THROWS(solve_snmf(m, 2, 0.1, 0.1, c, bad));
  DenseTensor neg = m;
  neg[0] = -1.0;
  CHECK_THROWS(solve_snmf(neg, 2, 0.1, 0.1, c));
}

TEST_CASE("stop-balancing policy") {
  DenseTensor m = uniform_data({10, 10}, 7);
  SolverConfig c = quick(BalancingMode::every_iteration, 30);
  c.stop_balancing_below_epsilon = true;
  Fit fit = solve_snmf(m, 4, 2.0, 2.0, c);
  CHECK(fit.trace.monotone());
  bool stopped = false;
  for (const auto& row : fit.trace.rows) {
    if (!row.balanced) stopped = true;
    if (stopped) CHECK_FALSE(row.balanced);
  }
}

TEST_CASE("ridge CPD with HALS") {
  DenseTensor t = uniform_data({6, 5, 4}, 8);
  for (BalancingMode mode : kModes) {
    Fit fit = solve_rncpd(t, 3, 0.05, quick(mode, 20));
    CHECK(fit.trace.monotone());
    check_balanced_rows(fit);
    CHECK(fit.model.factors.size() == 3);
  }
  // Scaling weights by dimension divides each block weight by m_i.
  SolverConfig c = quick(BalancingMode::none, 2);
  c.scale_mu_by_dimension = true;
  Fit fit = solve_rncpd(t, 2, 0.6, c);
  CHECK(fit.spec.blocks[0].weight == doctest::Approx(0.1));
  CHECK(fit.spec.blocks[2].weight == doctest::Approx(0.15));
}

TEST_CASE("sparse Tucker") {
  DenseTensor t = uniform_data({5, 4, 4}, 9);
  for (BalancingMode mode : kModes)
    for (NtdBalanceKind kind : {NtdBalanceKind::scalar, NtdBalanceKind::sinkhorn}) {
      SolverConfig c = quick(mode, 15);
      c.ntd_balance = kind;
      Fit fit = solve_sntd(t, {3, 2, 2}, 0.05, c);
      CHECK(fit.trace.monotone());
      REQUIRE(fit.model.core);
      if (kind == NtdBalanceKind::scalar) check_balanced_rows(fit);
      else
        for (const auto& row : fit.trace.rows)
          if (row.balanced) CHECK(row.objective <= row.pre_balance_objective * (1.0 + 1e-12));
    }
  Fit m3 = solve_sntd(t, {3, 2, 2}, 0.05, quick(BalancingMode::every_iteration, 10), SparseTarget::mode3);
  CHECK(m3.trace.monotone());
  CHECK(m3.spec.blocks[2].kind == PenaltyKind::l1);
  CHECK(m3.spec.blocks[3].kind == PenaltyKind::l2_squared);

  SolverConfig sk = quick(BalancingMode::every_iteration, 5);
  sk.ntd_balance = NtdBalanceKind::sinkhorn;
  CHECK_THROWS(solve_sntd(t, {3, 2, 2}, 0.05, sk, SparseTarget::mode3));
  SolverConfig b2 = quick(BalancingMode::none, 5);
  b2.beta = 2.0;
  CHECK_THROWS(solve_sntd(t, {3, 2, 2}, 0.05, b2));

  RegularizerSpec spec = sntd_spec({5, 4, 4}, 0.2, SolverConfig{}, SparseTarget::core);
  REQUIRE(spec.size() == 4);
  CHECK(spec.blocks[3].kind == PenaltyKind::l1);
  CHECK(spec.blocks[0].weight == 0.2);
}

TEST_CASE("toy ALS follows the closed-form sweep") {
  const double y = 10.0, lambda = 1e-3;
  auto steps = toy_als(y, lambda, 50, 1.0, 10.0);
  REQUIRE(steps.size() == 51);
  double x1 = 1.0, x2 = 10.0;
  for (std::size_t k = 0; k <= 50; ++k) {
    CHECK(steps[k].x1 == doctest::Approx(x1).epsilon(1e-14));
    CHECK(steps[k].x2 == doctest::Approx(x2).epsilon(1e-14));
    const double cost = (y - x1 * x2) * (y - x1 * x2) + lambda * (x1 * x1 + x2 * x2);
    CHECK(steps[k].cost == doctest::Approx(cost).epsilon(1e-12));
    CHECK(steps[k].error == doctest::Approx(x1 - std::sqrt(y - lambda)).epsilon(1e-9));
    x1 = y * x2 / (x2 * x2 + lambda);
    x2 = y * x1 / (x1 * x1 + lambda);
  }
  for (std::size_t k = 1; k < steps.size(); ++k) CHECK(steps[k].cost <= steps[k - 1].cost);
  CHECK(steps[10].predicted_decrease ==
        doctest::Approx(16 * lambda * lambda / y * steps[10].error * steps[10].error));
  CHECK_THROWS(toy_als(-1.0, lambda, 5, 1.0, 1.0));
}

TEST_CASE("monotone over 20 seeds for every model and mode") {
  const DenseTensor m = uniform_data({9, 7}, 11), t = uniform_data({5, 4, 4}, 12);
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    for (BalancingMode mode : kModes) {
      SolverConfig c = quick(mode, 15);
      c.seed = seed;
      CHECK(solve_snmf(m, 3, 0.2, 0.02, c).trace.monotone());
      CHECK(solve_rncpd(t, 3, 0.05, c).trace.monotone());
      CHECK(solve_sntd(t, {3, 2, 2}, 0.05, c).trace.monotone());
    }
}

TEST_CASE("one more sweep barely moves a long run") {
  const DenseTensor m = uniform_data({8, 6}, 13);
  SolverConfig c = quick(BalancingMode::every_iteration, 5001);
  c.inner_iterations = 1;
  const Fit fit = solve_snmf(m, 2, 0.1, 0.1, c);
  const double a = fit.trace.rows[5000].objective, b = fit.trace.rows[5001].objective;
  CHECK(std::abs(a - b) < 1e-10 * a);
}
