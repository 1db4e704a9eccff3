#include "hrsi/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hrsi {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// --- Tables --------------------------------------------------------------

void write_trace_csv(std::ostream& os, const RunTrace& trace) {
  const std::size_t nb = trace.rows.empty() ? 0 : trace.rows.front().penalties.size();
  std::size_t nl = 0;
  for (const auto& r : trace.rows) nl = std::max(nl, r.levels.size());
  os << "iteration,data_fit";
  for (std::size_t b = 0; b < nb; ++b) os << ",penalty_" << b;
  os << ",objective,implicit_cost,pre_balance_data_fit,pre_balance_objective,balanced,seconds";
  for (std::size_t q = 0; q < nl; ++q) os << ",level_" << q;
  os << '\n';
  for (const auto& r : trace.rows) {
    os << r.iteration << ',' << format_double(r.data_fit);
    for (double p : r.penalties) os << ',' << format_double(p);
    os << ',' << format_double(r.objective) << ',' << format_double(r.implicit_cost) << ','
       << format_double(r.pre_balance_data_fit) << ',' << format_double(r.pre_balance_objective)
       << ',' << (r.balanced ? 1 : 0) << ',' << format_double(r.seconds);
    for (std::size_t q = 0; q < nl; ++q)
      os << ',' << (q < r.levels.size() ? format_double(r.levels[q]) : std::string("nan"));
    os << '\n';
  }
}

namespace {

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

void write_sweep_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << "model,seed,mu1,mu2,balance,final_objective,final_data_fit,sparsity_ratio,components,"
        "core_sparsity,fms,iterations,worst_increase,status\n";
  for (const auto& r : rows) {
    os << to_string(r.model) << ',' << r.seed << ',' << format_double(r.mu1) << ','
       << format_double(r.mu2) << ',' << to_string(r.mode) << ',' << format_double(r.final_objective)
       << ',' << format_double(r.final_data_fit) << ',' << format_double(r.sparsity_ratio) << ','
       << r.components << ',' << format_double(r.core_sparsity) << ',' << format_double(r.fms) << ','
       << r.iterations << ',' << format_double(r.worst_increase) << ',' << quoted(r.status) << '\n';
  }
}

void write_timing_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << "model,seed,mu2,balance,runtime_seconds\n";
  for (const auto& r : rows)
    os << to_string(r.model) << ',' << r.seed << ',' << format_double(r.mu2) << ','
       << to_string(r.mode) << ',' << format_double(r.runtime) << '\n';
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "mu,balance,runs,objective_q1,objective_median,objective_q3,sparsity_ratio_median,"
        "components_median,core_sparsity_median,fms_median\n";
  for (const auto& r : rows)
    os << format_double(r.mu) << ',' << to_string(r.mode) << ',' << r.runs << ','
       << format_double(r.objective_q1) << ',' << format_double(r.objective_median) << ','
       << format_double(r.objective_q3) << ',' << format_double(r.sparsity_ratio_median) << ','
       << format_double(r.components_median) << ',' << format_double(r.core_sparsity_median) << ','
       << format_double(r.fms_median) << '\n';
}

void write_toy_csv(std::ostream& os, double y, double lambda, const std::vector<ToyAlsStep>& steps) {
  os << "iteration,x1,x2,x1x2,y_minus_lambda,sqrt_y_minus_lambda,cost,error,ratio,decrease,"
        "predicted_decrease\n";
  const double target = std::sqrt(y - lambda);
  for (const auto& s : steps)
    os << s.iteration << ',' << format_double(s.x1) << ',' << format_double(s.x2) << ','
       << format_double(s.x1 * s.x2) << ',' << format_double(y - lambda) << ','
       << format_double(target) << ',' << format_double(s.cost) << ',' << format_double(s.error)
       << ',' << format_double(s.ratio) << ',' << format_double(s.decrease) << ','
       << format_double(s.predicted_decrease) << '\n';
}

// --- Data ----------------------------------------------------------------

namespace {

double parse_number(const std::string& token) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw std::runtime_error("not a number: '" + token + "'");
  }
  if (used != token.size()) throw std::runtime_error("not a number: '" + token + "'");
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

DenseTensor read_matrix_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_number(trim(cell)));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("matrix csv: rows have different lengths");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) throw std::runtime_error("matrix csv: no data");
  DenseTensor m = DenseTensor::matrix(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_matrix_csv(std::ostream& os, const DenseTensor& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_double(m(i, j));
    os << '\n';
  }
}

DenseTensor read_tensor_text(std::istream& is) {
  std::string line;
  std::vector<std::size_t> shape;
  std::vector<double> values;
  bool have_shape = false;
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string token;
    if (!have_shape) {
      ss >> token;
      if (token != "shape") throw std::runtime_error("tensor text: first line must start with 'shape'");
      while (ss >> token) {
        const double e = parse_number(token);
        if (!(e >= 1.0) || e != std::floor(e)) throw std::runtime_error("tensor text: bad extent");
        shape.push_back(static_cast<std::size_t>(e));
      }
      have_shape = true;
      continue;
    }
    while (ss >> token) values.push_back(parse_number(token));
  }
  if (!have_shape) throw std::runtime_error("tensor text: missing shape line");
  return DenseTensor(shape, std::move(values));
}

void write_tensor_text(std::ostream& os, const DenseTensor& t) {
  os << "shape";
  for (std::size_t e : t.shape()) os << ' ' << e;
  os << '\n';
  for (std::size_t k = 0; k < t.size(); ++k) os << format_double(t[k]) << '\n';
}

DenseTensor read_data_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  return csv ? read_matrix_csv(in) : read_tensor_text(in);
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << contents;
}

// --- Experiment specs ----------------------------------------------------

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw std::invalid_argument("unknown key '" + key + "' in " + where);
  }
}

double number_or_inf(const json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("expected a number or \"inf\"");
  }
  return v.get<double>();
}

void read_solver(const json& j, SolverConfig& cfg) {
  reject_unknown(j,
                 {"beta", "outer_iterations", "inner_iterations", "epsilon", "ntd_balance",
                  "sinkhorn_sweeps", "stop_balancing_below_epsilon", "scale_mu_by_dimension",
                  "initial_scaling", "init_first_factor_scale", "relative_tolerance"},
                 "solver");
  if (j.contains("beta")) cfg.beta = j["beta"].get<double>();
  if (j.contains("outer_iterations")) cfg.outer_iterations = j["outer_iterations"].get<std::size_t>();
  if (j.contains("inner_iterations")) cfg.inner_iterations = j["inner_iterations"].get<std::size_t>();
  if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
  if (j.contains("ntd_balance")) cfg.ntd_balance = parse_ntd_balance(j["ntd_balance"].get<std::string>());
  if (j.contains("sinkhorn_sweeps")) cfg.sinkhorn_sweeps = j["sinkhorn_sweeps"].get<std::size_t>();
  if (j.contains("stop_balancing_below_epsilon"))
    cfg.stop_balancing_below_epsilon = j["stop_balancing_below_epsilon"].get<bool>();
  if (j.contains("scale_mu_by_dimension")) cfg.scale_mu_by_dimension = j["scale_mu_by_dimension"].get<bool>();
  if (j.contains("initial_scaling")) cfg.initial_scaling = j["initial_scaling"].get<bool>();
  if (j.contains("init_first_factor_scale"))
    cfg.init_first_factor_scale = j["init_first_factor_scale"].get<double>();
  if (j.contains("relative_tolerance")) cfg.relative_tolerance = j["relative_tolerance"].get<double>();
}

}  // namespace

ExperimentSpec parse_experiment_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  reject_unknown(j,
                 {"model", "dims", "true_ranks", "estimated_ranks", "factor_sparsity", "core_sparsity",
                  "snr_db", "mu_grid", "mu1", "modes", "seeds", "first_seed", "target", "threads",
                  "solver"},
                 "experiment spec");
  try {
    const ModelType model = parse_model_type(j.value("model", std::string("snmf")));
    ExperimentSpec s = ExperimentSpec::defaults(model);
    if (j.contains("dims")) s.dims = j["dims"].get<std::vector<std::size_t>>();
    if (j.contains("true_ranks")) s.true_ranks = j["true_ranks"].get<std::vector<std::size_t>>();
    if (j.contains("estimated_ranks")) s.estimated_ranks = j["estimated_ranks"].get<std::vector<std::size_t>>();
    if (j.contains("factor_sparsity")) s.factor_sparsity = j["factor_sparsity"].get<double>();
    if (j.contains("core_sparsity")) s.core_sparsity = j["core_sparsity"].get<double>();
    if (j.contains("snr_db")) s.snr_db = number_or_inf(j["snr_db"]);
    if (j.contains("mu_grid")) s.mu_grid = j["mu_grid"].get<std::vector<double>>();
    if (j.contains("mu1")) s.mu1 = j["mu1"].get<double>();
    if (j.contains("modes")) {
      s.modes.clear();
      for (const auto& m : j["modes"]) s.modes.push_back(parse_balancing_mode(m.get<std::string>()));
    }
    if (j.contains("seeds")) s.seeds = j["seeds"].get<std::size_t>();
    if (j.contains("first_seed")) s.first_seed = j["first_seed"].get<std::uint64_t>();
    if (j.contains("target")) s.target = parse_sparse_target(j["target"].get<std::string>());
    if (j.contains("threads")) s.threads = j["threads"].get<std::size_t>();
    if (j.contains("solver")) read_solver(j["solver"], s.solver);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config has a wrongly typed value: ") + e.what());
  }
}

std::string experiment_spec_to_json(const ExperimentSpec& s) {
  json j;
  j["model"] = to_string(s.model);
  j["dims"] = s.dims;
  j["true_ranks"] = s.true_ranks;
  j["estimated_ranks"] = s.estimated_ranks;
  j["factor_sparsity"] = s.factor_sparsity;
  j["core_sparsity"] = s.core_sparsity;
  if (std::isinf(s.snr_db)) j["snr_db"] = "inf";
  else j["snr_db"] = s.snr_db;
  j["mu_grid"] = s.mu_grid;
  j["mu1"] = s.mu1;
  j["modes"] = json::array();
  for (auto m : s.modes) j["modes"].push_back(to_string(m));
  j["seeds"] = s.seeds;
  j["first_seed"] = s.first_seed;
  j["target"] = to_string(s.target);
  j["threads"] = s.threads;
  const SolverConfig& c = s.solver;
  j["solver"] = {{"beta", c.beta},
                 {"outer_iterations", c.outer_iterations},
                 {"inner_iterations", c.inner_iterations},
                 {"epsilon", c.epsilon},
                 {"ntd_balance", to_string(c.ntd_balance)},
                 {"sinkhorn_sweeps", c.sinkhorn_sweeps},
                 {"stop_balancing_below_epsilon", c.stop_balancing_below_epsilon},
                 {"scale_mu_by_dimension", c.scale_mu_by_dimension},
                 {"initial_scaling", c.initial_scaling},
                 {"init_first_factor_scale", c.init_first_factor_scale},
                 {"relative_tolerance", c.relative_tolerance}};
  return j.dump(2);
}

}  // namespace hrsi
