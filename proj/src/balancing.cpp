#include "hrsi/balancing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hrsi {

namespace {

constexpr double kGoldenTol = 1e-10;
constexpr double kEtaLogBound = 13.815510557964274;  // log(1e6)

std::vector<double> degrees(const RegularizerSpec& spec) {
  std::vector<double> p;
  for (const auto& b : spec.blocks) p.push_back(b.degree());
  return p;
}

// Scales x in place, projecting sub-threshold entries to zero first and
// flooring the result at eps.
void scale_projected(std::span<double> x, double lambda, double epsilon) {
  const double thr = zero_threshold(epsilon);
  for (double& v : x) v = (v >= thr) ? std::max(epsilon, lambda * v) : epsilon;
  if (epsilon == 0.0)
    for (double& v : x) v = std::max(v, 0.0);
}

void check_blocks(const FactorSet& f, const RegularizerSpec& spec) {
  if (spec.size() != f.num_blocks())
    throw std::invalid_argument("regularizer spec has " + std::to_string(spec.size()) +
                                " blocks, factor set has " + std::to_string(f.num_blocks()));
}

}  // namespace

// --- Penalties -----------------------------------------------------------

double BlockPenalty::norm(std::span<const double> x) const { return lp_norm_pow(x, degree()); }

double BlockPenalty::projected_norm(std::span<const double> x, double epsilon) const {
  const double thr = zero_threshold(epsilon);
  double acc = 0.0;
  if (kind == PenaltyKind::l1) {
    for (double v : x)
      if (std::abs(v) >= thr) acc += std::abs(v);
  } else {
    for (double v : x)
      if (std::abs(v) >= thr) acc += v * v;
  }
  return acc;
}

RegularizerSpec RegularizerSpec::uniform(PenaltyKind kind, double weight, std::size_t n) {
  return RegularizerSpec{std::vector<BlockPenalty>(n, BlockPenalty{kind, weight})};
}

void RegularizerSpec::validate(bool strict) const {
  for (const auto& b : blocks) {
    if (!std::isfinite(b.weight) || b.weight < 0.0)
      throw std::invalid_argument("penalty weights must be finite and nonnegative");
    if (strict && b.weight == 0.0)
      throw std::invalid_argument("balancing requires every penalty weight to be positive");
  }
}

std::vector<double> RegularizerSpec::per_block(const FactorSet& f) const {
  check_blocks(f, *this);
  std::vector<double> out;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    out.push_back(blocks[b].weight * blocks[b].norm(f.block(b).values()));
  return out;
}

double RegularizerSpec::total(const FactorSet& f) const {
  double acc = 0.0;
  for (double v : per_block(f)) acc += v;
  return acc;
}

bool is_zero_vector(std::span<const double> x, double epsilon) {
  const double thr = zero_threshold(epsilon);
  if (thr == 0.0) return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
  return std::all_of(x.begin(), x.end(), [thr](double v) { return std::abs(v) < thr; });
}

// --- Closed-form scales --------------------------------------------------

ScaleSolution optimal_scales(std::span<const double> a, std::span<const double> p) {
  if (a.size() != p.size() || a.empty())
    throw std::invalid_argument("optimal_scales: a and p must be nonempty and of equal length");
  double s = 0.0, log_level = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] > 0.0) || !(p[i] > 0.0) || !std::isfinite(a[i]))
      throw std::invalid_argument("optimal_scales: a_i and p_i must be positive");
    s += 1.0 / p[i];
    log_level += std::log(p[i] * a[i]) / p[i];
  }
  log_level /= s;
  ScaleSolution out;
  out.level = std::exp(log_level);
  for (std::size_t i = 0; i < a.size(); ++i)
    out.scales.push_back(std::exp((log_level - std::log(p[i] * a[i])) / p[i]));
  return out;
}

// --- Column balancing ----------------------------------------------------

BalanceResult balance_columns(const FactorSet& f, const RegularizerSpec& spec,
                              BalanceOptions options) {
  if (f.core) throw std::invalid_argument("balance_columns: use the NTD balancing for Tucker");
  f.validate();
  check_blocks(f, spec);
  spec.validate(true);
  const std::vector<double> p = degrees(spec);
  const std::size_t n = f.order(), r = f.rank();

  BalanceResult out{f, {}};
  out.report.penalty_before = spec.total(f);
  std::vector<double> a(n);
  for (std::size_t q = 0; q < r; ++q) {
    ColumnBalance col;
    bool zero = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = f.factors[i].column(q);
      a[i] = spec.blocks[i].weight * spec.blocks[i].projected_norm(x, options.epsilon);
      zero = zero || is_zero_vector(x, options.epsilon) || a[i] == 0.0;
    }
    if (zero) {
      col.zeroed = true;
      col.scales.assign(n, 0.0);
      for (auto& x : out.factors.factors) std::ranges::fill(x.column(q), options.epsilon);
    } else {
      ScaleSolution sol = optimal_scales(a, p);
      for (std::size_t i = 0; i < n; ++i)
        scale_projected(out.factors.factors[i].column(q), sol.scales[i], options.epsilon);
      col.level = sol.level;
      col.scales = std::move(sol.scales);
    }
    out.report.columns.push_back(std::move(col));
  }
  out.report.penalty_after = spec.total(out.factors);
  return out;
}

std::vector<double> column_levels(const FactorSet& f, const RegularizerSpec& spec,
                                  double epsilon) {
  check_blocks(f, spec);
  const std::vector<double> p = degrees(spec);
  const std::size_t n = f.order(), r = f.rank();
  std::vector<double> levels(r, 0.0), a(n);
  for (std::size_t q = 0; q < r; ++q) {
    bool zero = false;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = spec.blocks[i].weight * spec.blocks[i].projected_norm(f.factors[i].column(q), epsilon);
      zero = zero || !(a[i] > 0.0);
    }
    if (!zero) levels[q] = optimal_scales(a, p).level;
  }
  return levels;
}

BalanceResult balance_ntd_scalar(const FactorSet& f, const RegularizerSpec& spec,
                                 BalanceOptions options) {
  f.validate();
  check_blocks(f, spec);
  spec.validate(true);
  const std::vector<double> p = degrees(spec);
  const std::size_t nb = f.num_blocks();

  BalanceResult out{f, {}};
  out.report.penalty_before = spec.total(f);
  std::vector<double> a(nb);
  bool zero = false;
  for (std::size_t b = 0; b < nb; ++b) {
    const auto x = f.block(b).values();
    a[b] = spec.blocks[b].weight * spec.blocks[b].projected_norm(x, options.epsilon);
    zero = zero || is_zero_vector(x, options.epsilon) || a[b] == 0.0;
  }
  ColumnBalance col;
  if (zero) {
    col.zeroed = true;
    col.scales.assign(nb, 0.0);
    for (std::size_t b = 0; b < nb; ++b) out.factors.block(b).fill(options.epsilon);
  } else {
    ScaleSolution sol = optimal_scales(a, p);
    for (std::size_t b = 0; b < nb; ++b)
      scale_projected(out.factors.block(b).values(), sol.scales[b], options.epsilon);
    col.level = sol.level;
    col.scales = std::move(sol.scales);
  }
  out.report.columns.push_back(std::move(col));
  out.report.penalty_after = spec.total(out.factors);
  return out;
}

// --- Sinkhorn-style NTD balancing ----------------------------------------

SinkhornResult sinkhorn_balance_ntd(const FactorSet& f, const RegularizerSpec& spec,
                                    std::size_t sweeps, BalanceOptions options) {
  if (!f.core) throw std::invalid_argument("sinkhorn_balance_ntd: missing core");
  f.validate();
  check_blocks(f, spec);
  spec.validate(true);
  if (sweeps == 0) throw std::invalid_argument("sinkhorn_balance_ntd: sweeps must be >= 1");
  const std::size_t n = f.order();
  for (std::size_t i = 0; i < n; ++i)
    if (spec.blocks[i].kind != PenaltyKind::l2_squared)
      throw std::invalid_argument("sinkhorn_balance_ntd: factors must carry squared-l2 penalties");
  if (spec.blocks[n].kind != PenaltyKind::l1)
    throw std::invalid_argument("sinkhorn_balance_ntd: core must carry an l1 penalty");

  const double eps = options.epsilon;
  const double thr = zero_threshold(eps);
  const double mu_core = spec.blocks[n].weight;

  // Work on projected copies; factor scales are tracked virtually so the
  // factor matrices are touched once at the end.
  DenseTensor core = *f.core;
  for (double& v : core.values())
    if (v < thr) v = 0.0;
  std::vector<std::vector<double>> norms(n), scales(n);
  for (std::size_t i = 0; i < n; ++i) {
    const DenseTensor& x = f.factors[i];
    for (std::size_t q = 0; q < x.cols(); ++q) {
      double acc = 0.0;
      for (double v : x.column(q))
        if (v >= thr) acc += v * v;
      norms[i].push_back(acc);
    }
    scales[i].assign(x.cols(), 1.0);
  }

  auto objective = [&]() {
    double acc = mu_core * lp_norm_pow(core.values(), 1.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t q = 0; q < norms[i].size(); ++q)
        acc += spec.blocks[i].weight * scales[i][q] * scales[i][q] * norms[i][q];
    return acc;
  };

  SinkhornResult out;
  const auto& shape = core.shape();
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t left = 1, right = 1;
      for (std::size_t k = 0; k < i; ++k) left *= shape[k];
      for (std::size_t k = i + 1; k < n; ++k) right *= shape[k];
      const std::size_t ri = shape[i];
      std::vector<double> mass(ri, 0.0);
      double* g = core.data();
      for (std::size_t rr = 0; rr < right; ++rr)
        for (std::size_t q = 0; q < ri; ++q)
          for (std::size_t l = 0; l < left; ++l) mass[q] += g[l + left * (q + ri * rr)];

      std::vector<double> slice_scale(ri);
      for (std::size_t q = 0; q < ri; ++q) {
        const double a1 = mu_core * mass[q];
        const double a2 = spec.blocks[i].weight * scales[i][q] * scales[i][q] * norms[i][q];
        if (!(a1 > 0.0) || !(a2 > 0.0)) {
          slice_scale[q] = 0.0;
          scales[i][q] = 0.0;
          continue;
        }
        const double level = std::cbrt(a1 * a1 * 2.0 * a2);  // (a1 sqrt(2 a2))^{2/3}
        slice_scale[q] = level / a1;
        scales[i][q] /= slice_scale[q];
      }
      for (std::size_t rr = 0; rr < right; ++rr)
        for (std::size_t q = 0; q < ri; ++q)
          for (std::size_t l = 0; l < left; ++l) g[l + left * (q + ri * rr)] *= slice_scale[q];
    }
    out.objective.push_back(objective());
  }

  out.factors = f;
  for (double& v : core.values()) v = std::max(v, eps);
  out.factors.core = std::move(core);
  for (std::size_t i = 0; i < n; ++i) {
    DenseTensor& x = out.factors.factors[i];
    for (std::size_t q = 0; q < x.cols(); ++q)
      scale_projected(x.column(q), scales[i][q], eps);
  }
  return out;
}

// --- Initial scaling -----------------------------------------------------

InitialScaling initial_scaling(const FactorSet& f, const DenseTensor& data,
                               const RegularizerSpec& spec, bool include_penalty) {
  check_blocks(f, spec);
  spec.validate(false);
  const DenseTensor recon = reconstruct(f);
  if (recon.shape() != data.shape())
    throw std::invalid_argument("initial_scaling: reconstruction shape differs from data");

  InitialScaling out{f, 1.0, false};
  double dd = 0.0, dr = 0.0, rr = 0.0;
  const auto dv = data.values(), rv = recon.values();
  for (std::size_t k = 0; k < dv.size(); ++k) {
    dd += dv[k] * dv[k];
    dr += dv[k] * rv[k];
    rr += rv[k] * rv[k];
  }
  if (rr == 0.0) {
    out.degenerate = true;
    return out;
  }
  const double nb = static_cast<double>(f.num_blocks());
  std::vector<double> weight, degree;
  for (std::size_t b = 0; b < spec.size(); ++b) {
    weight.push_back(include_penalty ? spec.blocks[b].weight * spec.blocks[b].norm(f.block(b).values()) : 0.0);
    degree.push_back(spec.blocks[b].degree());
  }
  auto phi = [&](double t) {
    const double en = std::exp(nb * t);
    double v = dd - 2.0 * en * dr + en * en * rr;
    for (std::size_t b = 0; b < weight.size(); ++b) v += weight[b] * std::exp(degree[b] * t);
    return v;
  };

  constexpr int kGrid = 240;
  const double step = 2.0 * kEtaLogBound / kGrid;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kGrid; ++k) {
    const double v = phi(-kEtaLogBound + k * step);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  double lo = -kEtaLogBound + std::max(best - 1, 0) * step;
  double hi = -kEtaLogBound + std::min(best + 1, kGrid) * step;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo), d = lo + inv_phi * (hi - lo);
  double fc = phi(c), fd = phi(d);
  while (hi - lo > kGoldenTol) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = phi(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = phi(d);
    }
  }
  const double t = 0.5 * (lo + hi);
  // The expanded quadratic loses about 1e-16 of dd + rr to cancellation, so
  // a gain below that is noise and eta = 1 stands.
  double scale = dd + rr;
  for (double w : weight) scale += w;
  if (!(phi(t) < phi(0.0) - 1e-13 * scale)) return out;
  out.eta = std::exp(t);
  for (std::size_t b = 0; b < f.num_blocks(); ++b)
    for (double& v : out.factors.block(b).values()) v *= out.eta;
  return out;
}

// --- Implicit regularisation ---------------------------------------------

namespace {

double implicit_from_norms(const std::vector<std::vector<double>>& g, const RegularizerSpec& spec) {
  spec.validate(true);
  const std::size_t n = spec.size();
  double s = 0.0, log_mu = 0.0;
  for (const auto& b : spec.blocks) s += 1.0 / b.degree();
  for (const auto& b : spec.blocks) log_mu += std::log(b.degree() * b.weight) / (b.degree() * s);
  const double mu_tilde = s * std::exp(log_mu);
  double acc = 0.0;
  for (std::size_t q = 0; q < g.front().size(); ++q) {
    double log_prod = 0.0;
    bool zero = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(g[i][q] > 0.0)) zero = true;
      else log_prod += std::log(g[i][q]) / spec.blocks[i].degree();
    }
    if (!zero) acc += std::exp(log_prod / s);
  }
  return mu_tilde * acc;
}

}  // namespace

double implicit_cost(const FactorSet& f, const RegularizerSpec& spec) {
  if (f.core) throw std::invalid_argument("implicit_cost: use implicit_cost_vectorized for Tucker");
  check_blocks(f, spec);
  std::vector<std::vector<double>> g(f.order());
  for (std::size_t i = 0; i < f.order(); ++i)
    for (std::size_t q = 0; q < f.rank(); ++q)
      g[i].push_back(spec.blocks[i].norm(f.factors[i].column(q)));
  return implicit_from_norms(g, spec);
}

double implicit_cost_vectorized(const FactorSet& f, const RegularizerSpec& spec) {
  check_blocks(f, spec);
  std::vector<std::vector<double>> g(f.num_blocks());
  for (std::size_t b = 0; b < f.num_blocks(); ++b)
    g[b].push_back(spec.blocks[b].norm(f.block(b).values()));
  return implicit_from_norms(g, spec);
}

// --- Ill-posedness -------------------------------------------------------

std::vector<IllPosedPoint> illposedness_demo(const FactorSet& f, const DenseTensor& data,
                                             double mu1, PenaltyKind kind,
                                             std::span<const double> shrinks, BetaSpec beta) {
  if (f.core || f.order() != 2)
    throw std::invalid_argument("illposedness_demo: expects a two-block matrix model");
  f.validate();
  const BlockPenalty pen{kind, mu1};
  std::vector<IllPosedPoint> curve;
  for (double lambda : shrinks) {
    if (!(lambda > 0.0)) throw std::invalid_argument("illposedness_demo: shrink must be positive");
    FactorSet g = f;
    for (double& v : g.factors[0].values()) v *= lambda;
    for (double& v : g.factors[1].values()) v /= lambda;
    IllPosedPoint pt;
    pt.shrink = lambda;
    pt.data_fit = beta_divergence(data, cp_reconstruct(g), beta);
    pt.penalty = mu1 * pen.norm(g.factors[0].values());
    pt.objective = pt.data_fit + pt.penalty;
    curve.push_back(pt);
  }
  return curve;
}

}  // namespace hrsi
