#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "hrsi/experiments.hpp"
#include "hrsi/rng.hpp"

namespace hrsi {

std::string to_string(ModelType m) {
  switch (m) {
    case ModelType::snmf: return "snmf";
    case ModelType::rncpd: return "rncpd";
    case ModelType::sntd: return "sntd";
  }
  return "?";
}

ModelType parse_model_type(const std::string& s) {
  if (s == "snmf") return ModelType::snmf;
  if (s == "rncpd") return ModelType::rncpd;
  if (s == "sntd") return ModelType::sntd;
  throw std::invalid_argument("unknown model '" + s + "'");
}

namespace {

std::vector<double> logspace(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = n == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(n - 1);
    out.push_back(std::pow(10.0, std::log10(lo) + t * (std::log10(hi) - std::log10(lo))));
  }
  return out;
}

// Sets the round(fraction * size) smallest entries to exactly zero.
void hard_threshold(std::span<double> x, double fraction) {
  const auto zeros = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(x.size())));
  if (zeros == 0) return;
  std::vector<double> sorted(x.begin(), x.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(zeros - 1), sorted.end());
  const double cut = sorted[zeros - 1];
  std::size_t set = 0;
  for (double& v : x)
    if (v <= cut && set < zeros) {
      v = 0.0;
      ++set;
    }
}

bool has_zero_column(const DenseTensor& x) {
  for (std::size_t q = 0; q < x.cols(); ++q) {
    const auto c = x.column(q);
    if (std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; })) return true;
  }
  return false;
}

bool has_zero_slice(const DenseTensor& g) {
  for (std::size_t i = 0; i < g.order(); ++i)
    if (has_zero_column(transpose(unfold(g, i)))) return true;
  return false;
}

constexpr int kMaxResamples = 1000;

}  // namespace

ExperimentSpec ExperimentSpec::defaults(ModelType model) {
  ExperimentSpec s;
  s.model = model;
  s.modes = {BalancingMode::init_only, BalancingMode::every_iteration, BalancingMode::none};
  s.solver.outer_iterations = 500;
  s.solver.inner_iterations = 10;
  s.solver.epsilon = 1e-16;
  s.solver.init_first_factor_scale = 100.0;
  switch (model) {
    case ModelType::snmf:
      s.dims = {30, 30};
      s.true_ranks = {4};
      s.estimated_ranks = {4};
      s.factor_sparsity = 0.3;
      s.snr_db = 40.0;
      s.mu1 = 1.0;
      s.mu_grid = logspace(1e-6, 1e-3, 7);
      s.solver.beta = 1.0;
      break;
    case ModelType::rncpd:
      s.dims = {30, 30, 30};
      s.true_ranks = {4};
      s.estimated_ranks = {6};
      s.snr_db = 200.0;
      s.mu_grid = logspace(1e-4, 1e1, 11);
      s.solver.beta = 2.0;
      s.solver.outer_iterations = 50;
      break;
    case ModelType::sntd:
      s.dims = {30, 30, 30};
      s.true_ranks = {4, 4, 4};
      s.estimated_ranks = {6, 4, 4};
      s.core_sparsity = 0.7;
      s.snr_db = 40.0;
      s.mu_grid = logspace(0.03, 0.3, 9);
      s.solver.beta = 1.0;
      break;
  }
  return s;
}

void ExperimentSpec::validate() const {
  const std::size_t order = model == ModelType::snmf ? 2 : 3;
  if (dims.size() != order) throw std::invalid_argument("experiment: wrong number of dims for the model");
  for (std::size_t d : dims)
    if (d == 0) throw std::invalid_argument("experiment: dims must be positive");
  const std::size_t nranks = model == ModelType::sntd ? 3 : 1;
  if (true_ranks.size() != nranks || estimated_ranks.size() != nranks)
    throw std::invalid_argument("experiment: sntd takes three ranks, other models one");
  for (std::size_t r : true_ranks)
    if (r == 0) throw std::invalid_argument("experiment: ranks must be positive");
  for (std::size_t r : estimated_ranks)
    if (r == 0) throw std::invalid_argument("experiment: ranks must be positive");
  if (!(factor_sparsity >= 0.0 && factor_sparsity < 1.0) || !(core_sparsity >= 0.0 && core_sparsity < 1.0))
    throw std::invalid_argument("experiment: sparsity fractions must lie in [0, 1)");
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("experiment: SNR must be a number (use +inf for no noise)");
  if (mu_grid.empty()) throw std::invalid_argument("experiment: mu grid must be nonempty");
  for (double mu : mu_grid)
    if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("experiment: mu values must be positive");
  if (!(mu1 > 0.0)) throw std::invalid_argument("experiment: mu1 must be positive");
  if (modes.empty()) throw std::invalid_argument("experiment: at least one balancing mode is needed");
  if (seeds == 0) throw std::invalid_argument("experiment: seeds must be >= 1");
  solver.validate();
}

double poisson_alpha(const DenseTensor& m, double snr_db) {
  const double energy = frobenius_norm_sq(m);
  if (!(energy > 0.0)) throw std::invalid_argument("poisson_alpha: data is zero");
  return std::pow(10.0, snr_db / 10.0) * sum(m) / energy;
}

double gaussian_variance(const DenseTensor& m, double snr_db) {
  return frobenius_norm_sq(m) / (static_cast<double>(m.size()) * std::pow(10.0, snr_db / 10.0));
}

SyntheticData gen_synthetic(const ExperimentSpec& spec, std::uint64_t seed) {
  spec.validate();
  auto rng = make_rng(seed, RngStream::truth);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  SyntheticData out;

  const bool tucker = spec.model == ModelType::sntd;
  for (std::size_t i = 0; i < spec.dims.size(); ++i) {
    const std::size_t r = tucker ? spec.true_ranks[i] : spec.true_ranks[0];
    DenseTensor x = DenseTensor::matrix(spec.dims[i], r);
    int tries = 0;
    do {
      if (++tries > kMaxResamples)
        throw std::runtime_error("gen_synthetic: sparsity leaves an all-zero factor column");
      for (double& v : x.values()) v = unif(rng);
      hard_threshold(x.values(), spec.factor_sparsity);
    } while (has_zero_column(x));
    out.truth.factors.push_back(std::move(x));
  }
  if (tucker) {
    DenseTensor g(spec.true_ranks);
    int tries = 0;
    do {
      if (++tries > kMaxResamples)
        throw std::runtime_error("gen_synthetic: sparsity leaves an all-zero core slice");
      for (double& v : g.values()) v = unif(rng);
      hard_threshold(g.values(), spec.core_sparsity);
    } while (has_zero_slice(g));
    out.truth.core = std::move(g);
  }
  out.clean = reconstruct(out.truth);

  DenseTensor noisy = out.clean;
  if (std::isfinite(spec.snr_db)) {
    auto noise_rng = make_rng(seed, RngStream::noise);
    double signal = 0.0, noise = 0.0;
    if (spec.model == ModelType::rncpd) {
      out.noise_level = gaussian_variance(out.clean, spec.snr_db);
      std::normal_distribution<double> gauss(0.0, std::sqrt(out.noise_level));
      for (std::size_t k = 0; k < noisy.size(); ++k) {
        const double e = gauss(noise_rng);
        noisy[k] = std::max(0.0, out.clean[k] + e);
        noise += e * e;
        signal += out.clean[k] * out.clean[k];
      }
    } else {
      out.noise_level = poisson_alpha(out.clean, spec.snr_db);
      for (std::size_t k = 0; k < noisy.size(); ++k) {
        const double mean = out.noise_level * out.clean[k];
        double draw = 0.0;
        if (mean > 0.0) {
          std::poisson_distribution<long long> pois(mean);
          draw = static_cast<double>(pois(noise_rng));
        }
        noisy[k] = draw;
        noise += (draw - mean) * (draw - mean);
        signal += mean * mean;
      }
    }
    out.realized_snr_db = 10.0 * std::log10(signal / noise);
  }
  const double norm = std::sqrt(frobenius_norm_sq(noisy));
  if (!(norm > 0.0)) throw std::runtime_error("gen_synthetic: generated data is zero");
  for (double& v : noisy.values()) v /= norm;
  out.data = std::move(noisy);
  return out;
}

}  // namespace hrsi
