#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hrsi/experiments.hpp"
#include "hrsi/models.hpp"
#include "hrsi/tensor.hpp"

namespace hrsi {

/// Shortest round-trip text for a double: 17 significant digits, with
/// "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double v);

// --- Tables (layouts documented in docs/formats.md) ----------------------

void write_trace_csv(std::ostream& os, const RunTrace& trace);
/// One row per run. Runtime is left out so that re-runs are byte-identical.
void write_sweep_csv(std::ostream& os, const std::vector<MetricsRow>& rows);
void write_timing_csv(std::ostream& os, const std::vector<MetricsRow>& rows);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);
void write_toy_csv(std::ostream& os, double y, double lambda, const std::vector<ToyAlsStep>& steps);

// --- Data ----------------------------------------------------------------

/// Comma-separated numeric matrix, one row per line, no header.
DenseTensor read_matrix_csv(std::istream& is);
void write_matrix_csv(std::ostream& os, const DenseTensor& m);

/// Text tensor: a first line "shape m_0 m_1 ...", then the values
/// whitespace-separated in storage order (first index fastest). Lines
/// starting with '#' are ignored.
DenseTensor read_tensor_text(std::istream& is);
void write_tensor_text(std::ostream& os, const DenseTensor& t);

/// Dispatches on the extension: ".csv" is a matrix, anything else a text tensor.
DenseTensor read_data_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

// --- Experiment specs ----------------------------------------------------

/// JSON mirroring ExperimentSpec. Missing keys keep the model defaults;
/// unknown keys are rejected.
ExperimentSpec parse_experiment_spec(const std::string& json_text);
std::string experiment_spec_to_json(const ExperimentSpec& spec);

}  // namespace hrsi
