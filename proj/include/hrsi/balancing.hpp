#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hrsi/divergence.hpp"
#include "hrsi/tensor.hpp"

namespace hrsi {

enum class PenaltyKind { l1, l2_squared };

/// Penalty mu * g(X) on one block, g being an l_p^p norm.
struct BlockPenalty {
  PenaltyKind kind = PenaltyKind::l1;
  double weight = 0.0;

  int degree() const noexcept { return kind == PenaltyKind::l1 ? 1 : 2; }
  /// g on a vector of entries (unweighted).
  double norm(std::span<const double> x) const;
  /// g restricted to entries >= 2 eps; smaller ones count as zero.
  double projected_norm(std::span<const double> x, double epsilon) const;
};

/// One BlockPenalty per block. Tucker models list the factors first and the
/// core last, matching FactorSet::block.
struct RegularizerSpec {
  std::vector<BlockPenalty> blocks;

  static RegularizerSpec uniform(PenaltyKind kind, double weight, std::size_t n);
  std::size_t size() const noexcept { return blocks.size(); }
  /// Throws unless every weight is finite and >= 0, and > 0 when `strict`.
  void validate(bool strict) const;
  /// sum_i mu_i g_i(block i).
  double total(const FactorSet& f) const;
  std::vector<double> per_block(const FactorSet& f) const;
};

/// True when every entry is below the zero threshold (2 eps, or exactly 0
/// for eps = 0).
bool is_zero_vector(std::span<const double> x, double epsilon);
inline double zero_threshold(double epsilon) { return 2.0 * epsilon; }

// --- Closed-form scales --------------------------------------------------

struct ScaleSolution {
  std::vector<double> scales;
  double level = 0.0;  ///< weighted geometric mean of p_i a_i
};

/// Minimises sum_i lambda_i^{p_i} a_i subject to prod_i lambda_i = 1.
ScaleSolution optimal_scales(std::span<const double> a, std::span<const double> p);

// --- Column balancing ----------------------------------------------------

struct BalanceOptions {
  /// Solver floor. Entries below 2 eps are projected to zero before the
  /// scales are computed and the result is floored at eps again.
  double epsilon = 0.0;
};

struct ColumnBalance {
  double level = 0.0;
  std::vector<double> scales;
  bool zeroed = false;
};

struct BalanceReport {
  std::vector<ColumnBalance> columns;
  double penalty_before = 0.0;
  double penalty_after = 0.0;
};

struct BalanceResult {
  FactorSet factors;
  BalanceReport report;
};

/// Rescales each rank-one component so that p_i mu_i g_i(X_i[:,q]) is equal
/// across blocks, which minimises the penalty without changing the
/// reconstruction. Requires a CP/NMF factor set and all weights > 0.
BalanceResult balance_columns(const FactorSet& f, const RegularizerSpec& spec,
                              BalanceOptions options = {});

/// Per-column levels beta_q of the current iterate, without rescaling.
/// Zero columns report 0.
std::vector<double> column_levels(const FactorSet& f, const RegularizerSpec& spec,
                                  double epsilon = 0.0);

/// One global scale per block (factors and core), i.e. column balancing of
/// the vectorised blocks. Works for any per-block kinds.
BalanceResult balance_ntd_scalar(const FactorSet& f, const RegularizerSpec& spec,
                                 BalanceOptions options = {});

struct SinkhornResult {
  FactorSet factors;
  /// sum_i mu_i ||X_i||_F^2 + mu_G ||G||_1 after each sweep.
  std::vector<double> objective;
};

/// Alternating per-mode rescaling of core slices against factor columns for
/// an l1 core and squared-l2 factors. Each mode step is the exact two-block
/// balance of every slice q with its factor column, so the scaling objective
/// never increases.
SinkhornResult sinkhorn_balance_ntd(const FactorSet& f, const RegularizerSpec& spec,
                                    std::size_t sweeps = 10, BalanceOptions options = {});

// --- Initial scaling -----------------------------------------------------

struct InitialScaling {
  FactorSet factors;
  double eta = 1.0;
  /// Set when the reconstruction is zero and the input was returned as is.
  bool degenerate = false;
};

/// Multiplies every block by a common eta minimising
///   ||D - eta^n R||_F^2 + sum_i mu_i eta^{p_i} g_i(X_i)
/// where n is the number of blocks. eta = 1 is kept unless strictly beaten.
/// With include_penalty false only the data term is used; the solvers do
/// this, since a heavily unbalanced start would otherwise be shrunk to zero
/// before balancing gets a chance.
InitialScaling initial_scaling(const FactorSet& f, const DenseTensor& data,
                               const RegularizerSpec& spec, bool include_penalty = true);

// --- Implicit regularisation ---------------------------------------------

/// mu~ sum_q (prod_i g_i(X_i[:,q])^{1/p_i})^{1/S}, S = sum_i 1/p_i, with
/// mu~ = S prod_i (p_i mu_i)^{1/(p_i S)}. Equals the explicit penalty at
/// balanced points and lower-bounds it elsewhere.
double implicit_cost(const FactorSet& f, const RegularizerSpec& spec);

/// Same quantity treating each block (core included) as a single column.
double implicit_cost_vectorized(const FactorSet& f, const RegularizerSpec& spec);

// --- Ill-posedness -------------------------------------------------------

struct IllPosedPoint {
  double shrink = 1.0;
  double data_fit = 0.0;
  double penalty = 0.0;
  double objective = 0.0;
};

/// Objective along (lambda X1, X2 / lambda) for each lambda in `shrinks`,
/// with only X1 penalised: D_beta(M | X1 X2^T) + mu1 g(lambda X1).
std::vector<IllPosedPoint> illposedness_demo(const FactorSet& f, const DenseTensor& data,
                                             double mu1, PenaltyKind kind,
                                             std::span<const double> shrinks, BetaSpec beta);

}  // namespace hrsi
