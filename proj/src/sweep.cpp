#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "hrsi/experiments.hpp"

namespace hrsi {

Fit run_single(const ExperimentSpec& spec, const DenseTensor& data, double mu, BalancingMode mode,
               std::uint64_t seed) {
  SolverConfig cfg = spec.solver;
  cfg.seed = seed;
  cfg.balancing = mode;
  switch (spec.model) {
    case ModelType::snmf: return solve_snmf(data, spec.estimated_ranks[0], spec.mu1, mu, cfg);
    case ModelType::rncpd: return solve_rncpd(data, spec.estimated_ranks[0], mu, cfg);
    case ModelType::sntd: return solve_sntd(data, spec.estimated_ranks, mu, cfg, spec.target);
  }
  throw std::logic_error("run_single: unknown model");
}

SweepResult run_sweep(const ExperimentSpec& spec,
                      const std::function<void(std::size_t, std::size_t)>& progress) {
  spec.validate();
  std::vector<SyntheticData> datasets;
  for (std::size_t s = 0; s < spec.seeds; ++s) datasets.push_back(gen_synthetic(spec, spec.first_seed + s));

  struct Task {
    std::size_t seed_index, mu_index, mode_index;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < spec.seeds; ++s)
    for (std::size_t m = 0; m < spec.mu_grid.size(); ++m)
      for (std::size_t b = 0; b < spec.modes.size(); ++b) tasks.push_back({s, m, b});

  SweepResult out;
  out.rows.resize(tasks.size());
  std::atomic<std::size_t> next{0}, done{0};
  std::mutex progress_mutex;

  auto worker = [&]() {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const Task& task = tasks[t];
      const std::uint64_t seed = spec.first_seed + task.seed_index;
      const double mu = spec.mu_grid[task.mu_index];
      const BalancingMode mode = spec.modes[task.mode_index];
      MetricsRow row;
      try {
        const Fit fit = run_single(spec, datasets[task.seed_index].data, mu, mode, seed);
        row = metrics(fit, datasets[task.seed_index].truth, spec.model, spec.solver.epsilon);
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
      row.model = spec.model;
      row.seed = seed;
      row.mu1 = spec.model == ModelType::snmf ? spec.mu1 : mu;
      row.mu2 = mu;
      row.mode = mode;
      out.rows[t] = std::move(row);
      const std::size_t finished = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(finished, tasks.size());
      }
    }
  };

  std::size_t threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, tasks.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  out.summary = summarize(spec, out.rows);
  return out;
}

std::vector<SummaryRow> summarize(const ExperimentSpec& spec, const std::vector<MetricsRow>& rows) {
  std::vector<SummaryRow> out;
  for (double mu : spec.mu_grid)
    for (BalancingMode mode : spec.modes) {
      std::vector<double> obj, ratio, comp, core, score;
      for (const auto& r : rows) {
        if (r.mu2 != mu || r.mode != mode || r.status != "ok") continue;
        obj.push_back(r.final_objective);
        ratio.push_back(r.sparsity_ratio);
        comp.push_back(static_cast<double>(r.components));
        core.push_back(r.core_sparsity);
        score.push_back(r.fms);
      }
      SummaryRow s;
      s.mu = mu;
      s.mode = mode;
      s.runs = obj.size();
      s.objective_q1 = quantile(obj, 0.25);
      s.objective_median = median(obj);
      s.objective_q3 = quantile(obj, 0.75);
      s.sparsity_ratio_median = median(ratio);
      s.components_median = median(comp);
      s.core_sparsity_median = median(core);
      s.fms_median = median(score);
      out.push_back(s);
    }
  return out;
}

}  // namespace hrsi
