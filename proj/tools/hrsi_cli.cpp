// Command-line front end: single fits, the toy study, sweeps and the
// ill-posedness demo. Run `hrsi --help` for the list.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hrsi/experiments.hpp"
#include "hrsi/io.hpp"
#include "hrsi/reports.hpp"

using namespace hrsi;

namespace {

struct Common {
  std::string data;
  std::size_t rank = 0;
  double beta = std::nan("");
  std::size_t outer = 0;
  std::size_t inner = 0;
  double epsilon = 1e-16;
  std::string balance = "every";
  std::string ntd_balance = "scalar";
  std::uint64_t seed = 0;
  double init_scale = 1.0;
  std::string trace;
  std::string plot;
  std::string out_dir;
  std::string config;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--data", c.data, "input data (.csv matrix or text tensor); synthetic data when omitted");
  app->add_option("--rank", c.rank, "number of components (first-mode rank for sntd)");
  app->add_option("--beta", c.beta, "beta-divergence (snmf only; rncpd is least squares, sntd KL)");
  app->add_option("--outer", c.outer, "outer iterations");
  app->add_option("--inner", c.inner, "inner iterations per block");
  app->add_option("--epsilon", c.epsilon, "entry floor")->capture_default_str();
  app->add_option("--balance", c.balance, "none | init | every")->capture_default_str();
  app->add_option("--seed", c.seed, "seed for the init and for synthetic data")->capture_default_str();
  app->add_option("--init-scale", c.init_scale, "multiplier for the first initial factor")->capture_default_str();
  app->add_option("--trace", c.trace, "write the per-iteration trace CSV");
  app->add_option("--plot", c.plot, "write an SVG of the trace");
  app->add_option("--out-dir", c.out_dir, "write the fitted blocks as text tensors");
  app->add_option("--config", c.config, "JSON experiment spec supplying defaults");
}

ExperimentSpec base_spec(ModelType model, const Common& c) {
  if (c.config.empty()) return ExperimentSpec::defaults(model);
  std::ifstream in(c.config);
  if (!in) throw std::runtime_error("cannot open " + c.config);
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentSpec s = parse_experiment_spec(ss.str());
  if (s.model != model) throw std::runtime_error("config describes model " + to_string(s.model));
  return s;
}

SolverConfig solver_config(const ExperimentSpec& spec, const Common& c) {
  SolverConfig cfg = spec.solver;
  if (!std::isnan(c.beta)) cfg.beta = c.beta;
  if (c.outer) cfg.outer_iterations = c.outer;
  if (c.inner) cfg.inner_iterations = c.inner;
  cfg.epsilon = c.epsilon;
  cfg.balancing = parse_balancing_mode(c.balance);
  cfg.ntd_balance = parse_ntd_balance(c.ntd_balance);
  cfg.seed = c.seed;
  cfg.init_first_factor_scale = c.init_scale;
  cfg.validate();
  return cfg;
}

DenseTensor load_or_generate(const ExperimentSpec& spec, const Common& c) {
  if (!c.data.empty()) return read_data_file(c.data);
  SyntheticData d = gen_synthetic(spec, c.seed);
  std::cerr << "no --data given: synthetic " << to_string(spec.model) << " data, seed " << c.seed
            << ", realised SNR " << d.realized_snr_db << " dB\n";
  return d.data;
}

void report(const Fit& fit, const Common& c) {
  const TraceRow& last = fit.trace.rows.back();
  std::printf("iterations      %zu\n", last.iteration);
  std::printf("objective       %s\n", format_double(last.objective).c_str());
  std::printf("data fit        %s\n", format_double(last.data_fit).c_str());
  for (std::size_t b = 0; b < last.penalties.size(); ++b)
    std::printf("penalty[%zu]      %s\n", b, format_double(last.penalties[b]).c_str());
  std::printf("initial eta     %s\n", format_double(fit.initial_eta).c_str());
  std::printf("components      %zu\n", count_components(fit.model, c.epsilon));
  if (fit.model.core) std::printf("core sparsity   %.4f\n", core_sparsity(fit.model, c.epsilon));
  std::printf("monotone        %s\n", fit.trace.monotone() ? "yes" : "no");

  if (!c.trace.empty()) {
    std::ostringstream os;
    write_trace_csv(os, fit.trace);
    write_text_file(c.trace, os.str());
  }
  if (!c.plot.empty()) write_text_file(c.plot, render_svg(trace_panels(fit.trace), 1));
  if (!c.out_dir.empty()) {
    std::filesystem::create_directories(c.out_dir);
    for (std::size_t b = 0; b < fit.model.num_blocks(); ++b) {
      const bool core = fit.model.core && b == fit.model.order();
      const std::string name = core ? "core.txt" : "factor_" + std::to_string(b) + ".txt";
      std::ostringstream os;
      write_tensor_text(os, fit.model.block(b));
      write_text_file((std::filesystem::path(c.out_dir) / name).string(), os.str());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Balanced regularised low-rank factorisations (sNMF, rNCPD, sNTD)"};
  app.require_subcommand(1);

  Common snmf_c;
  double mu1 = 1.0, mu2 = 1e-3;
  auto* snmf = app.add_subcommand("snmf", "sparse NMF: beta-divergence with l1 on both factors");
  add_common(snmf, snmf_c);
  snmf->add_option("--mu1", mu1, "l1 weight on X1")->capture_default_str();
  snmf->add_option("--mu2", mu2, "l1 weight on X2")->capture_default_str();
  snmf->add_option("--mu", mu2, "alias for --mu2");

  Common cp_c;
  double cp_mu = 1e-3;
  auto* rncpd = app.add_subcommand("rncpd", "ridge nonnegative CPD by HALS");
  add_common(rncpd, cp_c);
  rncpd->add_option("--mu", cp_mu, "ridge weight on every factor")->capture_default_str();

  Common td_c;
  double td_mu = 0.1;
  std::vector<std::size_t> td_ranks;
  std::string target = "core";
  auto* sntd = app.add_subcommand("sntd", "sparse nonnegative Tucker (KL)");
  add_common(sntd, td_c);
  sntd->add_option("--mu", td_mu, "weight shared by every block")->capture_default_str();
  sntd->add_option("--ranks", td_ranks, "core shape, three values")->expected(3);
  sntd->add_option("--ntd-balance", td_c.ntd_balance, "scalar | sinkhorn")->capture_default_str();
  sntd->add_option("--target", target, "block with the l1 penalty: core | mode3")->capture_default_str();

  double y = 10.0, lambda = 1e-3, x1 = 1.0, x2 = 1.0;
  std::size_t toy_iters = 20000;
  std::string toy_csv, toy_plot;
  auto* toy = app.add_subcommand("toy-als", "alternating minimisation of (y - x1 x2)^2 + lambda (x1^2 + x2^2)");
  toy->add_option("--y", y)->capture_default_str();
  toy->add_option("--lambda", lambda)->capture_default_str();
  toy->add_option("--iterations", toy_iters)->capture_default_str();
  toy->add_option("--x1", x1, "starting x1")->capture_default_str();
  toy->add_option("--x2", x2, "starting x2")->capture_default_str();
  toy->add_option("--csv", toy_csv, "per-iteration table");
  toy->add_option("--plot", toy_plot, "four-panel SVG");

  std::string sweep_config, sweep_model = "snmf", sweep_out = "sweep";
  std::size_t sweep_seeds = 0, sweep_threads = 0, sweep_outer = 0;
  bool quiet = false;
  auto* sweep = app.add_subcommand("sweep", "synthetic hyperparameter sweep over seeds, mu and balancing modes");
  sweep->add_option("--config", sweep_config, "JSON experiment spec");
  sweep->add_option("--model", sweep_model, "snmf | rncpd | sntd, when no config is given")->capture_default_str();
  sweep->add_option("--seeds", sweep_seeds, "override the number of seeds");
  sweep->add_option("--outer", sweep_outer, "override the outer iteration count");
  sweep->add_option("--threads", sweep_threads, "worker threads (0: hardware concurrency)");
  sweep->add_option("--out", sweep_out, "output prefix for .csv, _summary.csv, _timing.csv, .svg")
      ->capture_default_str();
  sweep->add_flag("--quiet", quiet, "no progress output");

  Common ill_c;
  double ill_mu1 = 1.0;
  std::string ill_csv;
  auto* ill = app.add_subcommand("demo-illposed", "objective along (t X1, X2 / t) with only X1 penalised");
  ill->add_option("--data", ill_c.data, "input matrix; synthetic sNMF data when omitted");
  ill->add_option("--rank", ill_c.rank, "rank of the random factors");
  ill->add_option("--mu1", ill_mu1, "l1 weight on X1")->capture_default_str();
  ill->add_option("--beta", ill_c.beta, "beta-divergence (default 1)");
  ill->add_option("--seed", ill_c.seed)->capture_default_str();
  ill->add_option("--csv", ill_csv, "write the curve");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*snmf) {
      ExperimentSpec spec = base_spec(ModelType::snmf, snmf_c);
      const DenseTensor m = load_or_generate(spec, snmf_c);
      SolverConfig cfg = solver_config(spec, snmf_c);
      report(solve_snmf(m, snmf_c.rank ? snmf_c.rank : spec.estimated_ranks[0], mu1, mu2, cfg), snmf_c);
    } else if (*rncpd) {
      ExperimentSpec spec = base_spec(ModelType::rncpd, cp_c);
      const DenseTensor t = load_or_generate(spec, cp_c);
      SolverConfig cfg = solver_config(spec, cp_c);
      report(solve_rncpd(t, cp_c.rank ? cp_c.rank : spec.estimated_ranks[0], cp_mu, cfg), cp_c);
    } else if (*sntd) {
      ExperimentSpec spec = base_spec(ModelType::sntd, td_c);
      const DenseTensor t = load_or_generate(spec, td_c);
      SolverConfig cfg = solver_config(spec, td_c);
      std::vector<std::size_t> ranks = td_ranks.empty() ? spec.estimated_ranks : td_ranks;
      if (td_c.rank) ranks[0] = td_c.rank;
      report(solve_sntd(t, ranks, td_mu, cfg, parse_sparse_target(target)), td_c);
    } else if (*toy) {
      auto steps = toy_als_report(y, lambda, toy_iters, x1, x2, toy_csv, toy_plot);
      const ToyAlsStep& last = steps.back();
      std::printf("x1 %s  x2 %s  x1*x2 - (y - lambda) %s  error %s\n", format_double(last.x1).c_str(),
                  format_double(last.x2).c_str(), format_double(last.x1 * last.x2 - (y - lambda)).c_str(),
                  format_double(last.error).c_str());
    } else if (*sweep) {
      ExperimentSpec spec;
      if (!sweep_config.empty()) {
        std::ifstream in(sweep_config);
        if (!in) throw std::runtime_error("cannot open " + sweep_config);
        std::stringstream ss;
        ss << in.rdbuf();
        spec = parse_experiment_spec(ss.str());
      } else {
        spec = ExperimentSpec::defaults(parse_model_type(sweep_model));
      }
      if (sweep_seeds) spec.seeds = sweep_seeds;
      if (sweep_outer) spec.solver.outer_iterations = sweep_outer;
      if (sweep->count("--threads")) spec.threads = sweep_threads;
      SweepResult result = run_sweep(spec, [&](std::size_t done, std::size_t total) {
        if (!quiet) std::fprintf(stderr, "\r%zu / %zu runs", done, total);
      });
      if (!quiet) std::fprintf(stderr, "\n");
      write_sweep_outputs(spec, result, sweep_out);
      std::printf("%-12s %-6s %-14s %-10s %-10s %-10s\n", "mu", "mode", "objective", "ratio", "components",
                  "core_sp");
      for (const auto& s : result.summary)
        std::printf("%-12.4g %-6s %-14.6g %-10.3f %-10.1f %-10.3f\n", s.mu, to_string(s.mode).c_str(),
                    s.objective_median, s.sparsity_ratio_median, s.components_median, s.core_sparsity_median);
      std::size_t errors = 0;
      for (const auto& r : result.rows) errors += r.status != "ok";
      if (errors) {
        std::fprintf(stderr, "%zu runs failed; see the status column\n", errors);
        return 1;
      }
    } else if (*ill) {
      ExperimentSpec spec = ExperimentSpec::defaults(ModelType::snmf);
      const DenseTensor m = load_or_generate(spec, ill_c);
      SolverConfig cfg;
      cfg.seed = ill_c.seed;
      const std::size_t r = ill_c.rank ? ill_c.rank : 4;
      FactorSet f = random_init({m.rows(), m.cols()}, {r, r}, false, cfg);
      std::vector<double> shrinks;
      for (int k = 0; k <= 6; ++k) shrinks.push_back(std::pow(10.0, -k));
      const BetaSpec beta(std::isnan(ill_c.beta) ? 1.0 : ill_c.beta);
      auto pts = illposedness_demo(f, m, ill_mu1, PenaltyKind::l1, shrinks, beta);
      std::ostringstream os;
      os << "shrink,data_fit,penalty,objective\n";
      for (const auto& p : pts)
        os << format_double(p.shrink) << ',' << format_double(p.data_fit) << ',' << format_double(p.penalty)
           << ',' << format_double(p.objective) << '\n';
      std::cout << os.str();
      if (!ill_csv.empty()) write_text_file(ill_csv, os.str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
