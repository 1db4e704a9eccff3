#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hrsi/models.hpp"
#include "hrsi/tensor.hpp"

namespace hrsi {

enum class ModelType { snmf, rncpd, sntd };
std::string to_string(ModelType m);
ModelType parse_model_type(const std::string& s);

/// A synthetic experiment: data model, noise, hyperparameter grid, the
/// balancing modes to compare and the seeds to repeat over.
struct ExperimentSpec {
  ModelType model = ModelType::snmf;
  std::vector<std::size_t> dims;
  /// One rank for snmf/rncpd, the core shape for sntd.
  std::vector<std::size_t> true_ranks;
  std::vector<std::size_t> estimated_ranks;
  /// Fraction of exact zeros in each true factor / in the true core.
  double factor_sparsity = 0.0;
  double core_sparsity = 0.0;
  /// Target SNR in dB; +inf disables noise.
  double snr_db = 40.0;
  /// Swept weight: mu2 for snmf (mu1 fixed below), mu otherwise.
  std::vector<double> mu_grid;
  double mu1 = 1.0;
  std::vector<BalancingMode> modes;
  std::size_t seeds = 20;
  std::uint64_t first_seed = 0;
  SparseTarget target = SparseTarget::core;
  SolverConfig solver;
  /// Worker threads for the sweep; 0 uses the hardware concurrency.
  std::size_t threads = 1;

  /// The settings of the published synthetic experiment for each model.
  static ExperimentSpec defaults(ModelType model);
  void validate() const;
};

struct SyntheticData {
  DenseTensor data;    ///< noisy, Frobenius-normalised
  DenseTensor clean;   ///< noiseless reconstruction of the truth
  FactorSet truth;
  double noise_level = 0.0;  ///< Poisson alpha or Gaussian variance
  double realized_snr_db = std::numeric_limits<double>::infinity();
};

/// Poisson scaling alpha with expected SNR snr_db for clean data m:
/// alpha = 10^{snr/10} sum(m) / ||m||_F^2.
double poisson_alpha(const DenseTensor& m, double snr_db);
/// Gaussian variance with expected SNR snr_db.
double gaussian_variance(const DenseTensor& m, double snr_db);

SyntheticData gen_synthetic(const ExperimentSpec& spec, std::uint64_t seed);

// --- Metrics -------------------------------------------------------------

/// Factor match score of two CP/NMF factor sets with equal column counts:
/// best one-to-one matching (Hungarian) of the mean over components of
/// prod_i |cos(a_i[:,q], b_i[:,pi(q)])|. With `weighted`, each term is also
/// multiplied by 1 - |w_a - w_b| / max(w_a, w_b), w being the product of
/// column norms.
double fms(const FactorSet& a, const FactorSet& b, bool weighted = false);

/// As fms, but `estimate` may have more columns than `truth`; every true
/// component is matched to a distinct estimated one.
double fms_matched(const FactorSet& truth, const FactorSet& estimate, bool weighted = false);

/// Tucker factor sets: per mode, match factor columns by |cos| and average;
/// the score is the mean over modes.
double fms_tucker(const FactorSet& truth, const FactorSet& estimate);

/// Maximum-weight assignment of rows to distinct columns (rows <= cols).
/// Returns the column chosen for each row.
std::vector<std::size_t> hungarian_max(const std::vector<std::vector<double>>& score);

struct MetricsRow {
  ModelType model = ModelType::snmf;
  std::uint64_t seed = 0;
  double mu1 = 0.0;
  double mu2 = 0.0;  ///< mu for rncpd/sntd
  BalancingMode mode = BalancingMode::none;
  double final_objective = std::numeric_limits<double>::quiet_NaN();
  double final_data_fit = std::numeric_limits<double>::quiet_NaN();
  double sparsity_ratio = std::numeric_limits<double>::quiet_NaN();
  std::size_t components = 0;
  double core_sparsity = std::numeric_limits<double>::quiet_NaN();
  double fms = std::numeric_limits<double>::quiet_NaN();
  std::size_t iterations = 0;
  /// RunTrace::worst_increase of the run; <= 0 when the objective never rose.
  double worst_increase = std::numeric_limits<double>::quiet_NaN();
  double runtime = 0.0;
  std::string status = "ok";
};

/// ||X1||_0 / ||X2||_0 with entries >= 2 eps counted; NaN when X2 has none.
double sparsity_ratio(const FactorSet& f, double epsilon);
/// Components whose weight reaches 1000 eps: product of column l2 norms for
/// CP/NMF, l1 mass of the mode-1 core slice for Tucker.
std::size_t count_components(const FactorSet& f, double epsilon);
/// Fraction of core entries below 2 eps.
double core_sparsity(const FactorSet& f, double epsilon);

MetricsRow metrics(const Fit& fit, const FactorSet& truth, ModelType model, double epsilon);

// --- Sweeps --------------------------------------------------------------

struct SummaryRow {
  double mu = 0.0;
  BalancingMode mode = BalancingMode::none;
  std::size_t runs = 0;
  double objective_q1 = 0.0, objective_median = 0.0, objective_q3 = 0.0;
  double sparsity_ratio_median = 0.0;
  double components_median = 0.0;
  double core_sparsity_median = 0.0;
  double fms_median = 0.0;
};

struct SweepResult {
  std::vector<MetricsRow> rows;  ///< ordered by (seed, mu, mode)
  std::vector<SummaryRow> summary;  ///< ordered by (mu, mode)
};

/// Median of the non-NaN values (NaN when none).
double median(std::vector<double> v);
double quantile(std::vector<double> v, double q);

/// Runs every (seed, mu, mode) combination. Rows are assembled in a fixed
/// order whatever the thread count. `progress` is called after each run.
SweepResult run_sweep(const ExperimentSpec& spec,
                      const std::function<void(std::size_t, std::size_t)>& progress = {});

std::vector<SummaryRow> summarize(const ExperimentSpec& spec, const std::vector<MetricsRow>& rows);

/// Fits one configuration of the spec on the given data and init.
Fit run_single(const ExperimentSpec& spec, const DenseTensor& data, double mu,
               BalancingMode mode, std::uint64_t seed);

}  // namespace hrsi
