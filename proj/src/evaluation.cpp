#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hrsi/balancing.hpp"
#include "hrsi/experiments.hpp"

namespace hrsi {

namespace {

double column_norm(const DenseTensor& x, std::size_t q) {
  return std::sqrt(lp_norm_pow(x.column(q), 2.0));
}

double abs_cosine(const DenseTensor& a, std::size_t p, const DenseTensor& b, std::size_t q) {
  const auto ca = a.column(p), cb = b.column(q);
  double dot = 0.0;
  for (std::size_t i = 0; i < ca.size(); ++i) dot += ca[i] * cb[i];
  const double den = column_norm(a, p) * column_norm(b, q);
  return den > 0.0 ? std::abs(dot) / den : 0.0;
}

double component_weight(const FactorSet& f, std::size_t q) {
  double w = 1.0;
  for (const auto& x : f.factors) w *= column_norm(x, q);
  return w;
}

double matched_mean(const std::vector<std::vector<double>>& score) {
  const std::vector<std::size_t> pick = hungarian_max(score);
  double acc = 0.0;
  for (std::size_t i = 0; i < pick.size(); ++i) acc += score[i][pick[i]];
  return acc / static_cast<double>(pick.size());
}

}  // namespace

std::vector<std::size_t> hungarian_max(const std::vector<std::vector<double>>& score) {
  const std::size_t n = score.size();
  if (n == 0) return {};
  const std::size_t m = score.front().size();
  if (m < n) throw std::invalid_argument("hungarian_max: more rows than columns");
  // Shortest augmenting path on costs -score, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> match(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = -score[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> out(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (match[j] != 0) out[match[j] - 1] = j - 1;
  return out;
}

double fms_matched(const FactorSet& truth, const FactorSet& estimate, bool weighted) {
  if (truth.core || estimate.core) throw std::invalid_argument("fms: use fms_tucker for Tucker models");
  truth.validate();
  estimate.validate();
  if (truth.order() != estimate.order()) throw std::invalid_argument("fms: mode counts differ");
  for (std::size_t i = 0; i < truth.order(); ++i)
    if (truth.factors[i].rows() != estimate.factors[i].rows())
      throw std::invalid_argument("fms: factor row counts differ");
  const std::size_t ra = truth.rank(), rb = estimate.rank();
  if (rb < ra) throw std::invalid_argument("fms: estimate has fewer components than the truth");
  std::vector<std::vector<double>> score(ra, std::vector<double>(rb, 1.0));
  for (std::size_t p = 0; p < ra; ++p)
    for (std::size_t q = 0; q < rb; ++q) {
      for (std::size_t i = 0; i < truth.order(); ++i)
        score[p][q] *= abs_cosine(truth.factors[i], p, estimate.factors[i], q);
      if (weighted) {
        const double wa = component_weight(truth, p), wb = component_weight(estimate, q);
        const double hi = std::max(wa, wb);
        score[p][q] *= hi > 0.0 ? 1.0 - std::abs(wa - wb) / hi : 1.0;
      }
    }
  return matched_mean(score);
}

double fms(const FactorSet& a, const FactorSet& b, bool weighted) {
  if (a.rank() != b.rank()) throw std::invalid_argument("fms: column counts differ");
  return fms_matched(a, b, weighted);
}

double fms_tucker(const FactorSet& truth, const FactorSet& estimate) {
  if (truth.order() != estimate.order()) throw std::invalid_argument("fms_tucker: mode counts differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.order(); ++i) {
    const DenseTensor& a = truth.factors[i];
    const DenseTensor& b = estimate.factors[i];
    if (a.rows() != b.rows() || b.cols() < a.cols())
      throw std::invalid_argument("fms_tucker: incompatible factor shapes");
    std::vector<std::vector<double>> score(a.cols(), std::vector<double>(b.cols()));
    for (std::size_t p = 0; p < a.cols(); ++p)
      for (std::size_t q = 0; q < b.cols(); ++q) score[p][q] = abs_cosine(a, p, b, q);
    acc += matched_mean(score);
  }
  return acc / static_cast<double>(truth.order());
}

double sparsity_ratio(const FactorSet& f, double epsilon) {
  if (f.order() < 2) throw std::invalid_argument("sparsity_ratio: needs two factors");
  const double thr = zero_threshold(epsilon);
  auto nnz = [thr](const DenseTensor& x) {
    return static_cast<double>(std::count_if(x.values().begin(), x.values().end(),
                                             [thr](double v) { return v >= thr && v != 0.0; }));
  };
  const double den = nnz(f.factors[1]);
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return nnz(f.factors[0]) / den;
}

std::size_t count_components(const FactorSet& f, double epsilon) {
  const double thr = 1000.0 * epsilon;
  std::size_t count = 0;
  if (f.core) {
    const DenseTensor slices = unfold(*f.core, 0);
    for (std::size_t q = 0; q < slices.rows(); ++q) {
      double mass = 0.0;
      for (std::size_t j = 0; j < slices.cols(); ++j) mass += std::abs(slices(q, j));
      if (mass >= thr) ++count;
    }
    return count;
  }
  for (std::size_t q = 0; q < f.rank(); ++q)
    if (component_weight(f, q) >= thr) ++count;
  return count;
}

double core_sparsity(const FactorSet& f, double epsilon) {
  if (!f.core) return std::numeric_limits<double>::quiet_NaN();
  const double thr = zero_threshold(epsilon);
  const auto v = f.core->values();
  const auto zeros = std::count_if(v.begin(), v.end(), [thr](double x) { return x < thr; });
  return static_cast<double>(zeros) / static_cast<double>(v.size());
}

MetricsRow metrics(const Fit& fit, const FactorSet& truth, ModelType model, double epsilon) {
  MetricsRow row;
  row.model = model;
  if (!fit.trace.rows.empty()) {
    row.final_objective = fit.trace.rows.back().objective;
    row.final_data_fit = fit.trace.rows.back().data_fit;
    row.iterations = fit.trace.rows.back().iteration;
    row.runtime = fit.trace.rows.back().seconds;
  }
  row.worst_increase = fit.trace.worst_increase();
  row.components = count_components(fit.model, epsilon);
  if (model == ModelType::snmf) row.sparsity_ratio = sparsity_ratio(fit.model, epsilon);
  if (model == ModelType::sntd) {
    row.core_sparsity = core_sparsity(fit.model, epsilon);
    row.fms = fms_tucker(truth, fit.model);
  } else {
    row.fms = fms_matched(truth, fit.model);
  }
  return row;
}

double quantile(std::vector<double> v, double q) {
  std::erase_if(v, [](double x) { return std::isnan(x); });
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

}  // namespace hrsi
