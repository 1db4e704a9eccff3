#include "hrsi/models.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "hrsi/divergence.hpp"
#include "hrsi/mm_updates.hpp"
#include "hrsi/rng.hpp"

namespace hrsi {

// --- Enum names ----------------------------------------------------------

std::string to_string(BalancingMode m) {
  switch (m) {
    case BalancingMode::none: return "none";
    case BalancingMode::init_only: return "init";
    case BalancingMode::every_iteration: return "every";
  }
  return "?";
}

std::string to_string(NtdBalanceKind k) {
  return k == NtdBalanceKind::scalar ? "scalar" : "sinkhorn";
}

std::string to_string(SparseTarget t) { return t == SparseTarget::core ? "core" : "mode3"; }

BalancingMode parse_balancing_mode(const std::string& s) {
  if (s == "none") return BalancingMode::none;
  if (s == "init" || s == "init_only") return BalancingMode::init_only;
  if (s == "every" || s == "every_iteration") return BalancingMode::every_iteration;
  throw std::invalid_argument("unknown balancing mode '" + s + "'");
}

NtdBalanceKind parse_ntd_balance(const std::string& s) {
  if (s == "scalar") return NtdBalanceKind::scalar;
  if (s == "sinkhorn") return NtdBalanceKind::sinkhorn;
  throw std::invalid_argument("unknown NTD balancing '" + s + "'");
}

SparseTarget parse_sparse_target(const std::string& s) {
  if (s == "core") return SparseTarget::core;
  if (s == "mode3") return SparseTarget::mode3;
  throw std::invalid_argument("unknown sparse target '" + s + "'");
}

void SolverConfig::validate() const {
  BetaSpec{beta};
  if (outer_iterations < 1 || inner_iterations < 1)
    throw std::invalid_argument("iteration counts must be at least 1");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw std::invalid_argument("epsilon must be positive");
  if (sinkhorn_sweeps < 1) throw std::invalid_argument("sinkhorn sweeps must be at least 1");
  if (!(relative_tolerance >= 0.0)) throw std::invalid_argument("relative tolerance must be >= 0");
  if (!(init_first_factor_scale > 0.0)) throw std::invalid_argument("init scale must be positive");
}

// --- RunTrace ------------------------------------------------------------

double RunTrace::worst_increase() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double prev = rows[k - 1].objective;
    worst = std::max(worst, (rows[k].objective - prev) / std::abs(prev));
  }
  return worst;
}

bool RunTrace::monotone(double relative_slack) const {
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double prev = rows[k - 1].objective;
    if (!(rows[k].objective <= prev + relative_slack * std::abs(prev))) return false;
  }
  return true;
}

bool RunTrace::same_values(const RunTrace& other) const {
  if (rows.size() != other.rows.size()) return false;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const TraceRow& a = rows[k];
    const TraceRow& b = other.rows[k];
    auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    if (a.iteration != b.iteration || !same(a.data_fit, b.data_fit) ||
        !same(a.objective, b.objective) || !same(a.implicit_cost, b.implicit_cost) ||
        !same(a.pre_balance_objective, b.pre_balance_objective) ||
        !same(a.pre_balance_data_fit, b.pre_balance_data_fit) || a.balanced != b.balanced ||
        a.penalties != b.penalties || a.levels != b.levels)
      return false;
  }
  return true;
}

// --- Initialisation ------------------------------------------------------

FactorSet random_init(const std::vector<std::size_t>& dims, const std::vector<std::size_t>& ranks,
                      bool with_core, const SolverConfig& cfg) {
  if (dims.size() != ranks.size()) throw std::invalid_argument("random_init: dims and ranks differ in length");
  auto rng = make_rng(cfg.seed, RngStream::init);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  FactorSet f;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    DenseTensor x = DenseTensor::matrix(dims[i], ranks[i]);
    for (double& v : x.values()) v = unif(rng);
    f.factors.push_back(std::move(x));
  }
  for (double& v : f.factors[0].values()) v *= cfg.init_first_factor_scale;
  if (with_core) {
    DenseTensor g(ranks);
    for (double& v : g.values()) v = unif(rng);
    f.core = std::move(g);
  }
  return f;
}

namespace {

using Clock = std::chrono::steady_clock;

void floor_blocks(FactorSet& f, double epsilon) {
  for (std::size_t b = 0; b < f.num_blocks(); ++b)
    for (double& v : f.block(b).values()) v = std::max(v, epsilon);
}

bool has_floored_entry(const FactorSet& f, double epsilon) {
  const double thr = zero_threshold(epsilon);
  for (std::size_t b = 0; b < f.num_blocks(); ++b)
    for (double v : f.block(b).values())
      if (v < thr) return true;
  return false;
}

bool all_positive(const RegularizerSpec& spec) {
  return std::all_of(spec.blocks.begin(), spec.blocks.end(),
                     [](const BlockPenalty& b) { return b.weight > 0.0; });
}

// One model instance of the meta-algorithm: block updates, data fit and the
// balancing step. The outer loop in run() is shared by all models.
class Problem {
 public:
  Problem(FactorSet model, RegularizerSpec spec, SolverConfig cfg)
      : model_(std::move(model)), spec_(std::move(spec)), cfg_(std::move(cfg)) {}
  virtual ~Problem() = default;

  virtual const DenseTensor& data() const = 0;
  /// cfg.inner_iterations updates of block b.
  virtual void update_block(std::size_t b) = 0;
  virtual double data_fit() const = 0;
  virtual void balance() = 0;
  virtual double implicit() const = 0;
  virtual std::vector<double> levels() const = 0;

  Fit run();

 protected:
  FactorSet model_;
  RegularizerSpec spec_;
  SolverConfig cfg_;
};

Fit Problem::run() {
  const auto start = Clock::now();
  Fit fit;
  if (cfg_.initial_scaling) {
    InitialScaling s = initial_scaling(model_, data(), spec_, false);
    model_ = std::move(s.factors);
    fit.initial_eta = s.eta;
  }
  floor_blocks(model_, cfg_.epsilon);

  const bool can_balance = cfg_.balancing != BalancingMode::none;
  if (can_balance && !all_positive(spec_))
    throw std::invalid_argument("balancing requires every penalty weight to be positive");
  bool balancing_active = can_balance;

  auto record = [&](std::size_t k, double pre_fit, double pre_obj, bool balanced) {
    TraceRow row;
    row.iteration = k;
    row.data_fit = data_fit();
    row.penalties = spec_.per_block(model_);
    row.objective = row.data_fit;
    for (double v : row.penalties) row.objective += v;
    row.implicit_cost = all_positive(spec_) ? implicit() : std::numeric_limits<double>::quiet_NaN();
    if (all_positive(spec_)) row.levels = levels();
    row.pre_balance_data_fit = pre_fit;
    row.pre_balance_objective = pre_obj;
    row.balanced = balanced;
    row.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    fit.trace.rows.push_back(std::move(row));
  };
  auto objective_now = [&](double fit_value) {
    double v = fit_value;
    for (double p : spec_.per_block(model_)) v += p;
    return v;
  };
  auto maybe_balance = [&]() {
    if (!balancing_active) return false;
    if (cfg_.stop_balancing_below_epsilon && has_floored_entry(model_, cfg_.epsilon)) {
      balancing_active = false;
      return false;
    }
    balance();
    return true;
  };

  {
    const double pre_fit = data_fit();
    const double pre_obj = objective_now(pre_fit);
    const bool balanced = maybe_balance();
    record(0, pre_fit, pre_obj, balanced);
  }
  if (cfg_.balancing == BalancingMode::init_only) balancing_active = false;

  for (std::size_t k = 1; k <= cfg_.outer_iterations; ++k) {
    for (std::size_t b = 0; b < model_.num_blocks(); ++b) update_block(b);
    const double pre_fit = data_fit();
    const double pre_obj = objective_now(pre_fit);
    const bool balanced = maybe_balance();
    record(k, pre_fit, pre_obj, balanced);
    if (cfg_.relative_tolerance > 0.0) {
      const auto& rows = fit.trace.rows;
      const double prev = rows[rows.size() - 2].objective, cur = rows.back().objective;
      if (std::abs(prev - cur) <= cfg_.relative_tolerance * std::abs(prev)) break;
    }
  }
  fit.model = std::move(model_);
  fit.spec = spec_;
  return fit;
}

// --- NMF -------------------------------------------------------------------

class NmfProblem final : public Problem {
 public:
  NmfProblem(const DenseTensor& m, FactorSet init, RegularizerSpec spec, SolverConfig cfg)
      : Problem(std::move(init), std::move(spec), std::move(cfg)), m_(m), mt_(transpose(m)) {}

  const DenseTensor& data() const override { return m_; }

  void update_block(std::size_t b) override {
    DenseTensor& x = model_.factors[b];
    const DenseTensor& target = b == 0 ? m_ : mt_;
    const DenseTensor mixing = transpose(model_.factors[1 - b]);
    const BlockPenalty& pen = spec_.blocks[b];
    for (std::size_t it = 0; it < cfg_.inner_iterations; ++it) {
      const BlockProblem bp{target, mixing, x, pen.weight, cfg_.beta, pen.degree(), cfg_.epsilon};
      x = mm_update(bp);
    }
  }

  double data_fit() const override {
    return beta_divergence(m_, cp_reconstruct(model_), BetaSpec(cfg_.beta));
  }

  void balance() override {
    model_ = balance_columns(model_, spec_, {cfg_.epsilon}).factors;
  }
  double implicit() const override { return implicit_cost(model_, spec_); }
  std::vector<double> levels() const override { return column_levels(model_, spec_, cfg_.epsilon); }

 private:
  const DenseTensor& m_;
  DenseTensor mt_;
};

// --- Ridge CPD -------------------------------------------------------------

class CpProblem final : public Problem {
 public:
  CpProblem(const DenseTensor& t, FactorSet init, RegularizerSpec spec, SolverConfig cfg)
      : Problem(std::move(init), std::move(spec), std::move(cfg)), t_(t) {
    for (std::size_t i = 0; i < t.order(); ++i) unfolded_.push_back(unfold(t, i));
  }

  const DenseTensor& data() const override { return t_; }

  void update_block(std::size_t b) override {
    const std::size_t r = model_.rank();
    DenseTensor g = DenseTensor::matrix(r, r, 1.0);
    for (std::size_t j = 0; j < model_.order(); ++j) {
      if (j == b) continue;
      const DenseTensor gj = gram(model_.factors[j]);
      for (std::size_t k = 0; k < g.size(); ++k) g[k] *= gj[k];
    }
    const DenseTensor cross = matmul(unfolded_[b], khatri_rao_except(model_.factors, b));
    DenseTensor& x = model_.factors[b];
    for (std::size_t it = 0; it < cfg_.inner_iterations; ++it)
      x = hals_update_ridge(x, g, cross, spec_.blocks[b].weight, cfg_.epsilon);
  }

  double data_fit() const override {
    const DenseTensor r = cp_reconstruct(model_);
    double acc = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) acc += (t_[k] - r[k]) * (t_[k] - r[k]);
    return acc;
  }

  void balance() override { model_ = balance_columns(model_, spec_, {cfg_.epsilon}).factors; }
  double implicit() const override { return implicit_cost(model_, spec_); }
  std::vector<double> levels() const override { return column_levels(model_, spec_, cfg_.epsilon); }

 private:
  const DenseTensor& t_;
  std::vector<DenseTensor> unfolded_;
};

// --- Sparse Tucker ---------------------------------------------------------

class TuckerProblem final : public Problem {
 public:
  TuckerProblem(const DenseTensor& t, FactorSet init, RegularizerSpec spec, SolverConfig cfg)
      : Problem(std::move(init), std::move(spec), std::move(cfg)), t_(t) {
    for (std::size_t i = 0; i < t.order(); ++i) unfolded_.push_back(unfold(t, i));
  }

  const DenseTensor& data() const override { return t_; }

  void update_block(std::size_t b) override {
    const BlockPenalty& pen = spec_.blocks[b];
    if (b == model_.order()) {
      DenseTensor& g = *model_.core;
      for (std::size_t it = 0; it < cfg_.inner_iterations; ++it)
        g = mm_update_core(g, model_.factors, t_, pen.weight, pen.degree(), cfg_.epsilon);
      return;
    }
    DenseTensor partial = *model_.core;
    for (std::size_t j = 0; j < model_.order(); ++j)
      if (j != b) partial = mode_product(partial, model_.factors[j], j);
    const DenseTensor mixing = unfold(partial, b);
    DenseTensor& x = model_.factors[b];
    for (std::size_t it = 0; it < cfg_.inner_iterations; ++it) {
      const BlockProblem bp{unfolded_[b], mixing, x, pen.weight, 1.0, pen.degree(), cfg_.epsilon};
      x = mm_update(bp);
    }
  }

  double data_fit() const override {
    return beta_divergence(t_, tucker_reconstruct(model_), BetaSpec(1.0));
  }

  void balance() override {
    if (cfg_.ntd_balance == NtdBalanceKind::scalar)
      model_ = balance_ntd_scalar(model_, spec_, {cfg_.epsilon}).factors;
    else
      model_ = sinkhorn_balance_ntd(model_, spec_, cfg_.sinkhorn_sweeps, {cfg_.epsilon}).factors;
  }
  double implicit() const override { return implicit_cost_vectorized(model_, spec_); }
  std::vector<double> levels() const override {
    std::vector<double> a, p;
    for (std::size_t b = 0; b < model_.num_blocks(); ++b) {
      a.push_back(spec_.blocks[b].weight *
                  spec_.blocks[b].projected_norm(model_.block(b).values(), cfg_.epsilon));
      p.push_back(spec_.blocks[b].degree());
      if (!(a.back() > 0.0)) return {0.0};
    }
    return {optimal_scales(a, p).level};
  }

 private:
  const DenseTensor& t_;
  std::vector<DenseTensor> unfolded_;
};

void check_data(const DenseTensor& t, std::size_t order, const char* who) {
  if (t.order() != order)
    throw std::invalid_argument(std::string(who) + ": data has order " + std::to_string(t.order()) +
                                ", expected " + std::to_string(order));
  if (!t.is_nonnegative()) throw std::invalid_argument(std::string(who) + ": data has negative entries");
}

void check_init(const FactorSet& f, const std::vector<std::size_t>& dims,
                const std::vector<std::size_t>& ranks, bool with_core, const char* who) {
  f.validate();
  bool ok = f.order() == dims.size() && static_cast<bool>(f.core) == with_core;
  for (std::size_t i = 0; ok && i < dims.size(); ++i)
    ok = f.factors[i].rows() == dims[i] && f.factors[i].cols() == ranks[i];
  if (!ok) throw std::invalid_argument(std::string(who) + ": initialisation does not match the problem");
  for (std::size_t b = 0; b < f.num_blocks(); ++b)
    if (!f.block(b).is_nonnegative())
      throw std::invalid_argument(std::string(who) + ": initialisation has negative entries");
}

}  // namespace

// --- Public solvers ------------------------------------------------------

Fit solve_nmf(const DenseTensor& m, std::size_t rank, const RegularizerSpec& spec,
              const SolverConfig& cfg, std::optional<FactorSet> init) {
  cfg.validate();
  check_data(m, 2, "solve_nmf");
  if (rank < 1) throw std::invalid_argument("solve_nmf: rank must be >= 1");
  if (spec.size() != 2) throw std::invalid_argument("solve_nmf: expected two penalty blocks");
  spec.validate(false);
  const std::vector<std::size_t> dims{m.rows(), m.cols()}, ranks{rank, rank};
  RegularizerSpec s = spec;
  if (cfg.scale_mu_by_dimension)
    for (std::size_t i = 0; i < 2; ++i) s.blocks[i].weight /= static_cast<double>(dims[i]);
  FactorSet start = init ? *std::move(init) : random_init(dims, ranks, false, cfg);
  check_init(start, dims, ranks, false, "solve_nmf");
  for (const auto& pen : s.blocks) {
    const bool ok = (cfg.beta == 1.0) || (cfg.beta == 0.0 && pen.degree() == 2) || cfg.beta > 1.0;
    if (!ok) throw std::invalid_argument("solve_nmf: no update rule for this beta and penalty");
    if (cfg.beta != 1.0 && !(pen.weight > 0.0))
      throw std::invalid_argument("solve_nmf: beta != 1 requires positive penalty weights");
    if (cfg.beta == 1.0 && pen.degree() == 2 && !(pen.weight > 0.0))
      throw std::invalid_argument("solve_nmf: squared-l2 penalties require positive weights");
  }
  NmfProblem p(m, std::move(start), std::move(s), cfg);
  return p.run();
}

Fit solve_snmf(const DenseTensor& m, std::size_t rank, double mu1, double mu2,
               const SolverConfig& cfg, std::optional<FactorSet> init) {
  RegularizerSpec spec{{BlockPenalty{PenaltyKind::l1, mu1}, BlockPenalty{PenaltyKind::l1, mu2}}};
  return solve_nmf(m, rank, spec, cfg, std::move(init));
}

Fit solve_rncpd(const DenseTensor& t, std::size_t rank, double mu, const SolverConfig& cfg,
                std::optional<FactorSet> init) {
  cfg.validate();
  check_data(t, 3, "solve_rncpd");
  if (rank < 1) throw std::invalid_argument("solve_rncpd: rank must be >= 1");
  if (!std::isfinite(mu) || mu < 0.0) throw std::invalid_argument("solve_rncpd: mu must be >= 0");
  const std::vector<std::size_t> dims = t.shape(), ranks(3, rank);
  RegularizerSpec spec = RegularizerSpec::uniform(PenaltyKind::l2_squared, mu, 3);
  if (cfg.scale_mu_by_dimension)
    for (std::size_t i = 0; i < 3; ++i) spec.blocks[i].weight /= static_cast<double>(dims[i]);
  FactorSet start = init ? *std::move(init) : random_init(dims, ranks, false, cfg);
  check_init(start, dims, ranks, false, "solve_rncpd");
  CpProblem p(t, std::move(start), std::move(spec), cfg);
  return p.run();
}

RegularizerSpec sntd_spec(const std::vector<std::size_t>& dims, double mu, const SolverConfig& cfg,
                          SparseTarget target) {
  RegularizerSpec spec;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const bool sparse = target == SparseTarget::mode3 && i == 2;
    double w = mu;
    if (cfg.scale_mu_by_dimension) w /= static_cast<double>(dims[i]);
    spec.blocks.push_back({sparse ? PenaltyKind::l1 : PenaltyKind::l2_squared, w});
  }
  spec.blocks.push_back({target == SparseTarget::core ? PenaltyKind::l1 : PenaltyKind::l2_squared, mu});
  return spec;
}

Fit solve_sntd(const DenseTensor& t, const std::vector<std::size_t>& ranks, double mu,
               const SolverConfig& cfg, SparseTarget target, std::optional<FactorSet> init) {
  cfg.validate();
  check_data(t, 3, "solve_sntd");
  if (cfg.beta != 1.0) throw std::invalid_argument("solve_sntd: only the KL loss (beta = 1) is supported");
  if (ranks.size() != 3) throw std::invalid_argument("solve_sntd: expected three ranks");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("solve_sntd: mu must be positive");
  if (cfg.ntd_balance == NtdBalanceKind::sinkhorn && target != SparseTarget::core)
    throw std::invalid_argument("solve_sntd: Sinkhorn balancing needs the l1 penalty on the core");
  const std::vector<std::size_t> dims = t.shape();
  for (std::size_t i = 0; i < 3; ++i)
    if (ranks[i] < 1) throw std::invalid_argument("solve_sntd: ranks must be >= 1");
  FactorSet start = init ? *std::move(init) : random_init(dims, ranks, true, cfg);
  check_init(start, dims, ranks, true, "solve_sntd");
  TuckerProblem p(t, std::move(start), sntd_spec(dims, mu, cfg, target), cfg);
  return p.run();
}

}  // namespace hrsi
