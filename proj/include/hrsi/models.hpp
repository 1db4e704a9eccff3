#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hrsi/balancing.hpp"
#include "hrsi/tensor.hpp"

namespace hrsi {

enum class BalancingMode { none, init_only, every_iteration };
enum class NtdBalanceKind { scalar, sinkhorn };
/// Which Tucker block carries the l1 penalty; the others get squared l2.
enum class SparseTarget { core, mode3 };

std::string to_string(BalancingMode m);
std::string to_string(NtdBalanceKind k);
std::string to_string(SparseTarget t);
BalancingMode parse_balancing_mode(const std::string& s);
NtdBalanceKind parse_ntd_balance(const std::string& s);
SparseTarget parse_sparse_target(const std::string& s);

struct SolverConfig {
  double beta = 1.0;
  std::size_t outer_iterations = 500;
  std::size_t inner_iterations = 10;
  double epsilon = 1e-16;
  BalancingMode balancing = BalancingMode::every_iteration;
  NtdBalanceKind ntd_balance = NtdBalanceKind::scalar;
  std::size_t sinkhorn_sweeps = 10;
  /// Alternative floor policy: balancing stops for good once any parameter
  /// entry reaches the floor (below 2 eps).
  bool stop_balancing_below_epsilon = false;
  /// Use mu_i = mu / m_i for the factor blocks.
  bool scale_mu_by_dimension = false;
  bool initial_scaling = true;
  /// Multiplier applied to the first factor of a random initialisation.
  double init_first_factor_scale = 1.0;
  std::uint64_t seed = 0;
  /// Relative objective change below which the run stops; 0 disables.
  double relative_tolerance = 0.0;

  void validate() const;
};

struct TraceRow {
  std::size_t iteration = 0;
  double data_fit = 0.0;
  std::vector<double> penalties;  ///< mu_i g_i per block
  double objective = 0.0;
  double implicit_cost = 0.0;
  std::vector<double> levels;  ///< beta_q per column (one value for Tucker)
  /// Objective and data fit right before this iteration's balancing step.
  double pre_balance_objective = 0.0;
  double pre_balance_data_fit = 0.0;
  bool balanced = false;
  double seconds = 0.0;  ///< wall time since the start of the run
};

struct RunTrace {
  std::vector<TraceRow> rows;

  /// Largest relative increase obj_{k+1} - obj_k over obj_k (<= 0 when monotone).
  double worst_increase() const;
  bool monotone(double relative_slack = 1e-12) const;
  /// Equal in every field except timing.
  bool same_values(const RunTrace& other) const;
};

struct Fit {
  FactorSet model;
  RunTrace trace;
  RegularizerSpec spec;
  double initial_eta = 1.0;
};

/// Uniform[0,1] factors (and core when `core_ranks` is given); the first
/// factor is multiplied by cfg.init_first_factor_scale.
FactorSet random_init(const std::vector<std::size_t>& dims, const std::vector<std::size_t>& ranks,
                      bool with_core, const SolverConfig& cfg);

/// Two-block NMF min D_beta(M | X1 X2^T) + mu1 g1(X1) + mu2 g2(X2).
Fit solve_nmf(const DenseTensor& m, std::size_t rank, const RegularizerSpec& spec,
              const SolverConfig& cfg, std::optional<FactorSet> init = std::nullopt);

/// Sparse NMF: KL loss (cfg.beta) and l1 penalties on both factors.
Fit solve_snmf(const DenseTensor& m, std::size_t rank, double mu1, double mu2,
               const SolverConfig& cfg, std::optional<FactorSet> init = std::nullopt);

/// Ridge nonnegative CPD with squared Frobenius loss, solved by HALS.
/// cfg.beta is ignored.
Fit solve_rncpd(const DenseTensor& t, std::size_t rank, double mu, const SolverConfig& cfg,
                std::optional<FactorSet> init = std::nullopt);

/// Sparse nonnegative Tucker with KL loss: l1 on the sparse target and
/// squared l2 on every other block. Requires cfg.beta == 1.
Fit solve_sntd(const DenseTensor& t, const std::vector<std::size_t>& ranks, double mu,
               const SolverConfig& cfg, SparseTarget target = SparseTarget::core,
               std::optional<FactorSet> init = std::nullopt);

/// The penalties solve_sntd uses, exposed for diagnostics.
RegularizerSpec sntd_spec(const std::vector<std::size_t>& dims, double mu, const SolverConfig& cfg,
                          SparseTarget target);

// --- Toy alternating least squares --------------------------------------

struct ToyAlsStep {
  std::size_t iteration = 0;
  double x1 = 0.0, x2 = 0.0;
  double cost = 0.0;
  double error = 0.0;  ///< x1 - sqrt(y - lambda)
  /// error_{k+1} / error_k; NaN when the error is zero.
  double ratio = 0.0;
  /// Decrease of the cost across the next x1 update.
  double decrease = 0.0;
  /// 16 lambda^2 / y * error^2.
  double predicted_decrease = 0.0;
};

/// Alternating exact minimisation of (y - x1 x2)^2 + lambda (x1^2 + x2^2).
/// Row k holds the iterate after k full sweeps (row 0 is the start).
std::vector<ToyAlsStep> toy_als(double y, double lambda, std::size_t iterations, double x1_start,
                                double x2_start);

}  // namespace hrsi
