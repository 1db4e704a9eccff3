#pragma once

#include <string>
#include <vector>

#include "hrsi/experiments.hpp"
#include "hrsi/models.hpp"
#include "hrsi/svg.hpp"

namespace hrsi {

/// Four panels of the toy study: cost, individual values against
/// sqrt(y - lambda), the product against y - lambda, and observed against
/// predicted cost decrease.
std::vector<Panel> toy_als_panels(double y, double lambda, const std::vector<ToyAlsStep>& steps);

/// Runs toy_als and writes the CSV and SVG files (empty path skips a file).
std::vector<ToyAlsStep> toy_als_report(double y, double lambda, std::size_t iterations, double x1_start,
                                       double x2_start, const std::string& csv_path,
                                       const std::string& svg_path);

/// Median loss against mu and the model's structural metric against mu,
/// one curve per balancing mode.
std::vector<Panel> sweep_panels(const ExperimentSpec& spec, const std::vector<SummaryRow>& summary);

/// Objective, data fit and penalty per outer iteration.
std::vector<Panel> trace_panels(const RunTrace& trace);

/// Writes <prefix>.csv, <prefix>_summary.csv, <prefix>_timing.csv and
/// <prefix>.svg for a finished sweep.
void write_sweep_outputs(const ExperimentSpec& spec, const SweepResult& result, const std::string& prefix);

std::string mode_color(BalancingMode mode);

}  // namespace hrsi
