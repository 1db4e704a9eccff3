#include "hrsi/reports.hpp"

#include <cmath>
#include <sstream>

#include "hrsi/io.hpp"

namespace hrsi {

std::string mode_color(BalancingMode mode) {
  switch (mode) {
    case BalancingMode::init_only: return "#1f77b4";
    case BalancingMode::every_iteration: return "#d62728";
    case BalancingMode::none: return "#2ca02c";
  }
  return "#000000";
}

std::vector<Panel> toy_als_panels(double y, double lambda, const std::vector<ToyAlsStep>& steps) {
  Series cost{"cost", {}, {}, "#1f77b4"};
  Series x1{"x1", {}, {}, "#ff7f0e"}, x2{"x2", {}, {}, "#1f77b4"}, root{"sqrt(y-lambda)", {}, {}, "#333333"};
  Series prod{"x1 x2", {}, {}, "#1f77b4"}, target{"y-lambda", {}, {}, "#333333"};
  Series observed{"observed decrease", {}, {}, "#1f77b4"};
  Series predicted{"16 lambda^2/y e^2", {}, {}, "#d62728"};
  const double r = std::sqrt(y - lambda);
  for (const auto& s : steps) {
    const double k = static_cast<double>(s.iteration);
    cost.x.push_back(k);
    cost.y.push_back(s.cost);
    x1.x.push_back(k);
    x1.y.push_back(s.x1);
    x2.x.push_back(k);
    x2.y.push_back(s.x2);
    root.x.push_back(k);
    root.y.push_back(r);
    prod.x.push_back(k);
    prod.y.push_back(s.x1 * s.x2);
    target.x.push_back(k);
    target.y.push_back(y - lambda);
    observed.x.push_back(k);
    observed.y.push_back(s.decrease);
    predicted.x.push_back(k);
    predicted.y.push_back(s.predicted_decrease);
  }
  return {
      Panel{"cost", "iteration", "cost", false, true, {cost}},
      Panel{"individual values", "iteration", "value", false, false, {x1, x2, root}},
      Panel{"product", "iteration", "x1 x2", false, false, {prod, target}},
      Panel{"cost decrease per x1 update", "iteration", "decrease", false, true, {observed, predicted}},
  };
}

std::vector<ToyAlsStep> toy_als_report(double y, double lambda, std::size_t iterations, double x1_start,
                                       double x2_start, const std::string& csv_path,
                                       const std::string& svg_path) {
  std::vector<ToyAlsStep> steps = toy_als(y, lambda, iterations, x1_start, x2_start);
  if (!csv_path.empty()) {
    std::ostringstream os;
    write_toy_csv(os, y, lambda, steps);
    write_text_file(csv_path, os.str());
  }
  if (!svg_path.empty()) write_text_file(svg_path, render_svg(toy_als_panels(y, lambda, steps)));
  return steps;
}

std::vector<Panel> sweep_panels(const ExperimentSpec& spec, const std::vector<SummaryRow>& summary) {
  const std::string mu_name = spec.model == ModelType::snmf ? "mu2 (mu1 fixed)" : "mu";
  Panel loss{"final objective (median)", mu_name, "objective", true, true, {}};
  Panel metric{"", mu_name, "", true, false, {}};
  Panel extra{"nonzero mode-1 components (median)", mu_name, "components", true, false, {}};
  switch (spec.model) {
    case ModelType::snmf:
      metric.title = "sparsity ratio ||X1||_0 / ||X2||_0 (median)";
      metric.ylabel = "ratio";
      break;
    case ModelType::rncpd:
      metric.title = "nonzero components (median)";
      metric.ylabel = "components";
      break;
    case ModelType::sntd:
      metric.title = "core sparsity (median)";
      metric.ylabel = "fraction of zero entries";
      break;
  }
  for (BalancingMode mode : spec.modes) {
    Series l{to_string(mode), {}, {}, mode_color(mode), true};
    Series m = l, e = l;
    for (const auto& row : summary) {
      if (row.mode != mode) continue;
      l.x.push_back(row.mu);
      l.y.push_back(row.objective_median);
      m.x.push_back(row.mu);
      e.x.push_back(row.mu);
      e.y.push_back(row.components_median);
      switch (spec.model) {
        case ModelType::snmf: m.y.push_back(row.sparsity_ratio_median); break;
        case ModelType::rncpd: m.y.push_back(row.components_median); break;
        case ModelType::sntd: m.y.push_back(row.core_sparsity_median); break;
      }
    }
    loss.series.push_back(std::move(l));
    metric.series.push_back(std::move(m));
    extra.series.push_back(std::move(e));
  }
  std::vector<Panel> out{loss, metric};
  if (spec.model == ModelType::sntd) out.push_back(extra);
  return out;
}

std::vector<Panel> trace_panels(const RunTrace& trace) {
  Series obj{"objective", {}, {}, "#d62728"}, fit{"data fit", {}, {}, "#1f77b4"},
      pen{"penalty", {}, {}, "#2ca02c"};
  for (const auto& r : trace.rows) {
    const double k = static_cast<double>(r.iteration);
    double p = 0.0;
    for (double v : r.penalties) p += v;
    obj.x.push_back(k);
    obj.y.push_back(r.objective);
    fit.x.push_back(k);
    fit.y.push_back(r.data_fit);
    pen.x.push_back(k);
    pen.y.push_back(p);
  }
  return {Panel{"objective per outer iteration", "iteration", "value", false, true, {obj, fit, pen}}};
}

void write_sweep_outputs(const ExperimentSpec& spec, const SweepResult& result, const std::string& prefix) {
  std::ostringstream rows, summary, timing;
  write_sweep_csv(rows, result.rows);
  write_summary_csv(summary, result.summary);
  write_timing_csv(timing, result.rows);
  write_text_file(prefix + ".csv", rows.str());
  write_text_file(prefix + "_summary.csv", summary.str());
  write_text_file(prefix + "_timing.csv", timing.str());
  write_text_file(prefix + ".svg", render_svg(sweep_panels(spec, result.summary), 3));
}

}  // namespace hrsi
