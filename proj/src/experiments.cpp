// Copyright 2026 The dptomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dptomo/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "csv.hpp"
#include "dptomo/measurement.hpp"
#include "dptomo/metrics.hpp"
#include "dptomo/witness.hpp"

namespace dptomo {
namespace {

using json = nlohmann::json;
using csv::format_double;

// ---------------------------------------------------------------------------
// JSON helpers. Every accessor takes the dotted field path so messages can
// name exactly what was wrong.
// ---------------------------------------------------------------------------

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("field `" + field + "`: " + what);
}

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(where.empty() ? "<root>" : where, "must be an object");
  for (const auto& item : obj.items()) {
    if (allowed.count(item.key()) == 0) {
      const std::string path = where.empty() ? item.key() : where + "." + item.key();
      fail(path, "unknown field");
    }
  }
}

std::string join(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

double get_number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(field, "must be finite");
  return d;
}

std::int64_t get_integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) fail(field, "must be an integer");
  return v.get<std::int64_t>();
}

bool get_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) fail(field, "must be true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& field) {
  if (!v.is_string()) fail(field, "must be a string");
  return v.get<std::string>();
}

const json& get_array(const json& v, const std::string& field) {
  if (!v.is_array()) fail(field, "must be an array");
  return v;
}

std::string indexed(const std::string& field, std::size_t i) {
  return field + "[" + std::to_string(i) + "]";
}

GridSpec default_grid(int modes) {
  return GridSpec::square(modes == 2 ? 7 : 6, 0.15);
}

GridSpec parse_grid(const json& g, const std::string& where, GridSpec base) {
  reject_unknown(g, where, {"kind", "nodes", "pitch", "radial_step", "angular_step"});
  if (g.contains("kind")) {
    const std::string kind = get_string(g["kind"], join(where, "kind"));
    if (kind == "square") {
      base.kind = GridSpec::Kind::kSquare;
    } else if (kind == "helical") {
      base.kind = GridSpec::Kind::kHelical;
      if (!g.contains("nodes")) base.nodes = 17;
    } else {
      fail(join(where, "kind"), "must be \"square\" or \"helical\"");
    }
  }
  if (g.contains("nodes")) {
    const auto n = get_integer(g["nodes"], join(where, "nodes"));
    if (n < 1 || n > 1000) fail(join(where, "nodes"), "must be in [1, 1000]");
    base.nodes = static_cast<int>(n);
  }
  if (g.contains("pitch")) {
    base.pitch = get_number(g["pitch"], join(where, "pitch"));
    if (!(base.pitch > 0.0)) fail(join(where, "pitch"), "must be > 0");
  }
  if (g.contains("radial_step")) {
    base.radial_step = get_number(g["radial_step"], join(where, "radial_step"));
    if (!(base.radial_step > 0.0)) fail(join(where, "radial_step"), "must be > 0");
  }
  if (g.contains("angular_step")) {
    base.angular_step = get_number(g["angular_step"], join(where, "angular_step"));
  }
  return base;
}

SolverConfig parse_solver(const json& s) {
  reject_unknown(s, "solver",
                 {"coeff_bound", "max_iterations", "primal_tol", "dual_tol", "admm_penalty",
                  "adapt_factor", "adapt_ratio", "adapt_interval", "relaxation", "box_scaling",
                  "tikhonov"});
  SolverConfig c;
  auto num = [&](const char* key, double& dst) {
    if (s.contains(key)) dst = get_number(s[key], std::string("solver.") + key);
  };
  auto integer = [&](const char* key, int& dst) {
    if (s.contains(key)) {
      const auto v = get_integer(s[key], std::string("solver.") + key);
      if (v < 1 || v > 100000000) fail(std::string("solver.") + key, "must be in [1, 1e8]");
      dst = static_cast<int>(v);
    }
  };
  num("coeff_bound", c.coeff_bound);
  integer("max_iterations", c.max_iterations);
  num("primal_tol", c.primal_tol);
  num("dual_tol", c.dual_tol);
  num("admm_penalty", c.admm_penalty);
  num("adapt_factor", c.adapt_factor);
  num("adapt_ratio", c.adapt_ratio);
  integer("adapt_interval", c.adapt_interval);
  num("relaxation", c.relaxation);
  num("box_scaling", c.box_scaling);
  num("tikhonov", c.tikhonov);
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    // validate() already names the field ("solver.<name> ...").
    const std::string msg = e.what();
    const auto sp = msg.find(' ');
    fail(msg.substr(0, sp), msg.substr(sp + 1));
  }
  return c;
}

std::vector<double> default_sigmas() {
  // 0 followed by 1e-4 .. 1e-1 in half-decade steps.
  std::vector<double> s{0.0};
  for (int k = 0; k <= 6; ++k) s.push_back(std::pow(10.0, -4.0 + 0.5 * k));
  return s;
}

bool uses_sweep(Experiment e) {
  return e == Experiment::kRepresentSweep || e == Experiment::kWitnessTable ||
         e == Experiment::kPurityTable;
}

// ---------------------------------------------------------------------------
// Cell bookkeeping.
// ---------------------------------------------------------------------------

std::string sanitize(std::string_view s) {
  std::string out;
  for (char c : s) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_';
  }
  return out;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

GridSpec with_axes(GridSpec g, int nodes, double step) {
  g.nodes = nodes;
  if (g.kind == GridSpec::Kind::kSquare) {
    g.pitch = step;
  } else {
    g.radial_step = step;
  }
  return g;
}

double grid_step(const GridSpec& g) {
  return g.kind == GridSpec::Kind::kSquare ? g.pitch : g.radial_step;
}

std::string grid_kind(const GridSpec& g) {
  return g.kind == GridSpec::Kind::kSquare ? "square" : "helical";
}

std::vector<int> nodes_axis(const ExperimentConfig& cfg) {
  return cfg.sweep_nodes.empty() ? std::vector<int>{cfg.grid.nodes} : cfg.sweep_nodes;
}

std::vector<double> steps_axis(const ExperimentConfig& cfg) {
  return cfg.sweep_steps.empty() ? std::vector<double>{grid_step(cfg.grid)} : cfg.sweep_steps;
}

std::string opt_number(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

// ---------------------------------------------------------------------------
// Representation cells, shared by represent / represent_sweep / witness_table
// / purity_table.
// ---------------------------------------------------------------------------

struct RepCell {
  std::string id;
  std::string state;
  GridSpec grid;
  int m = 0;
  FitResult fit;
  MetricReport metrics;
  double target_purity = 0.0;
  std::optional<double> witness_target;  // Tr(W rho) with W from the target
  std::optional<double> witness_approx;  // Tr(W rho^Appr), same W
  std::optional<double> witness_self;    // witness built from rho^Appr
  std::optional<double> negativity;
  std::optional<DensityMatrix> approx;
};

std::vector<RepCell> run_representation_cells(const ExperimentConfig& cfg) {
  const auto nodes = nodes_axis(cfg);
  const auto steps = steps_axis(cfg);
  const int n_states = static_cast<int>(cfg.state_specs.size());

  // Targets and bases are built once and shared read-only by the cells.
  std::vector<DensityMatrix> targets;
  for (const auto& s : cfg.state_specs) targets.push_back(named_state(s, cfg.space));
  std::vector<std::optional<ProbeBasis>> bases(nodes.size() * steps.size());
  parallel_for(static_cast<int>(bases.size()), cfg.threads, [&](int k) {
    const auto g = with_axes(cfg.grid, nodes[k / steps.size()], steps[k % steps.size()]);
    bases[k] = ProbeBasis::from_grid(g, cfg.space);
  });

  const int n_cells = n_states * static_cast<int>(bases.size());
  std::vector<RepCell> cells(n_cells);
  parallel_for(n_cells, cfg.threads, [&](int c) {
    const int si = c / static_cast<int>(bases.size());
    const int bi = c % static_cast<int>(bases.size());
    const ProbeBasis& basis = *bases[bi];
    const DensityMatrix& target = targets[si];
    RepCell& cell = cells[c];
    cell.state = cfg.state_specs[si];
    cell.grid = with_axes(cfg.grid, nodes[bi / steps.size()], steps[bi % steps.size()]);
    cell.m = basis.size();
    cell.id = "rep_s" + std::to_string(si) + "_g" + std::to_string(bi);
    cell.fit = fit_state(target, basis, cfg.solver);
    DensityMatrix approx = assemble(cell.fit.coefficients, basis).state;
    cell.metrics = compare(target, approx);
    cell.target_purity = purity(target);
    if (cfg.space.modes == 2) {
      const WitnessReport w = build_witness(target);
      cell.witness_target = w.trace_value;
      cell.witness_approx = evaluate_witness(w.witness, approx);
      const WitnessReport wa = build_witness(approx);
      cell.witness_self = wa.trace_value;
      cell.negativity = wa.negativity;
    }
    cell.approx = std::move(approx);
  });
  return cells;
}

void collect_states(const ExperimentConfig& cfg, std::vector<RepCell>& cells,
                    ExperimentResult& out) {
  for (auto& c : cells) {
    if (!c.fit.converged) ++out.nonconverged_cells;
    if (cfg.dump_states) out.states.push_back({c.id, *c.approx});
  }
}

// ---------------------------------------------------------------------------
// Noise perturbation of fitted coefficients.
// ---------------------------------------------------------------------------

RVector standard_normals(int m, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  RVector e(m);
  for (int i = 0; i < m; ++i) e(i) = dist(gen);
  return e;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public helpers.
// ---------------------------------------------------------------------------

std::string_view experiment_name(Experiment e) {
  switch (e) {
    case Experiment::kRepresent: return "represent";
    case Experiment::kRepresentSweep: return "represent_sweep";
    case Experiment::kNoiseSweep: return "noise_sweep";
    case Experiment::kReconstructSweep: return "reconstruct_sweep";
    case Experiment::kWitnessTable: return "witness_table";
    case Experiment::kPurityTable: return "purity_table";
    case Experiment::kGrid: return "grid";
  }
  return "unknown";
}

Experiment parse_experiment(std::string_view name) {
  for (auto e : {Experiment::kRepresent, Experiment::kRepresentSweep, Experiment::kNoiseSweep,
                 Experiment::kReconstructSweep, Experiment::kWitnessTable,
                 Experiment::kPurityTable, Experiment::kGrid}) {
    if (experiment_name(e) == name) return e;
  }
  throw ConfigError("field `experiment`: unknown experiment \"" + std::string(name) + "\"");
}

std::vector<std::string> default_states(int modes) {
  if (modes == 2) return {"entangled_cat:0.5", "bell_psi", "bell_phi"};
  return {"fock:1", "coherent:0.5", "even_cat:0.5", "superpos01"};
}

ExperimentConfig validate_config(std::string_view text, std::optional<Experiment> experiment) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  reject_unknown(root, "",
                 {"experiment", "states", "space", "grid", "sweep", "measurement_grid", "solver",
                  "n_rep_list", "noise_sigmas", "trials", "master_seed", "output_path",
                  "threads", "raw", "dump_states"});

  ExperimentConfig cfg;
  if (root.contains("experiment")) {
    cfg.experiment = parse_experiment(get_string(root["experiment"], "experiment"));
    if (experiment && *experiment != cfg.experiment) {
      fail("experiment", "\"" + std::string(experiment_name(cfg.experiment)) +
                             "\" conflicts with the requested \"" +
                             std::string(experiment_name(*experiment)) + "\"");
    }
  } else if (experiment) {
    cfg.experiment = *experiment;
  }

  int modes = 1;
  int truncation = -1;
  if (root.contains("space")) {
    const json& sp = root["space"];
    reject_unknown(sp, "space", {"modes", "truncation"});
    if (sp.contains("modes")) {
      const auto v = get_integer(sp["modes"], "space.modes");
      if (v != 1 && v != 2) fail("space.modes", "must be 1 or 2");
      modes = static_cast<int>(v);
    }
    if (sp.contains("truncation")) {
      const auto v = get_integer(sp["truncation"], "space.truncation");
      if (v < 2 || v > (modes == 2 ? 40 : 400)) {
        fail("space.truncation", modes == 2 ? "must be in [2, 40] for two modes"
                                            : "must be in [2, 400]");
      }
      truncation = static_cast<int>(v);
    }
  }
  if (truncation < 0) truncation = modes == 2 ? 10 : 12;
  cfg.space = HilbertSpec(modes, truncation);

  cfg.grid = default_grid(modes);
  if (root.contains("grid")) cfg.grid = parse_grid(root["grid"], "grid", cfg.grid);

  if (root.contains("measurement_grid")) {
    if (cfg.experiment != Experiment::kReconstructSweep) {
      fail("measurement_grid", "only valid for reconstruct_sweep");
    }
    cfg.measurement_grid = parse_grid(root["measurement_grid"], "measurement_grid", cfg.grid);
  }

  if (root.contains("sweep")) {
    if (!uses_sweep(cfg.experiment)) {
      fail("sweep", "only valid for represent_sweep, witness_table and purity_table");
    }
    const json& sw = root["sweep"];
    reject_unknown(sw, "sweep", {"nodes", "steps"});
    if (sw.contains("nodes")) {
      const json& a = get_array(sw["nodes"], "sweep.nodes");
      if (a.empty()) fail("sweep.nodes", "must be non-empty");
      for (std::size_t i = 0; i < a.size(); ++i) {
        const auto v = get_integer(a[i], indexed("sweep.nodes", i));
        if (v < 1 || v > 1000) fail(indexed("sweep.nodes", i), "must be in [1, 1000]");
        cfg.sweep_nodes.push_back(static_cast<int>(v));
      }
    }
    if (sw.contains("steps")) {
      const json& a = get_array(sw["steps"], "sweep.steps");
      if (a.empty()) fail("sweep.steps", "must be non-empty");
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double v = get_number(a[i], indexed("sweep.steps", i));
        if (!(v > 0.0)) fail(indexed("sweep.steps", i), "must be > 0");
        cfg.sweep_steps.push_back(v);
      }
    }
  }

  if (root.contains("states")) {
    const json& a = get_array(root["states"], "states");
    if (a.empty()) fail("states", "must be non-empty");
    for (std::size_t i = 0; i < a.size(); ++i) {
      cfg.state_specs.push_back(get_string(a[i], indexed("states", i)));
    }
  } else {
    cfg.state_specs = default_states(modes);
  }

  if (root.contains("solver")) cfg.solver = parse_solver(root["solver"]);

  if (root.contains("n_rep_list")) {
    const json& a = get_array(root["n_rep_list"], "n_rep_list");
    if (a.empty()) fail("n_rep_list", "must be non-empty");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto v = get_integer(a[i], indexed("n_rep_list", i));
      if (v < 0) fail(indexed("n_rep_list", i), "must be >= 0");
      cfg.n_rep_list.push_back(v);
    }
  } else {
    cfg.n_rep_list = {1000, 10000, 100000, 1000000};
  }

  if (root.contains("noise_sigmas")) {
    const json& a = get_array(root["noise_sigmas"], "noise_sigmas");
    if (a.empty()) fail("noise_sigmas", "must be non-empty");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double v = get_number(a[i], indexed("noise_sigmas", i));
      if (v < 0.0) fail(indexed("noise_sigmas", i), "must be >= 0");
      cfg.noise_sigmas.push_back(v);
    }
  } else {
    cfg.noise_sigmas = default_sigmas();
  }

  switch (cfg.experiment) {
    case Experiment::kNoiseSweep: cfg.trials = 200; break;
    case Experiment::kReconstructSweep: cfg.trials = 5; break;
    default: cfg.trials = 1; break;
  }
  if (root.contains("trials")) {
    const auto v = get_integer(root["trials"], "trials");
    if (v < 1 || v > 1000000) fail("trials", "must be in [1, 1e6]");
    cfg.trials = static_cast<int>(v);
  }
  if (root.contains("master_seed")) {
    const json& v = root["master_seed"];
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail("master_seed", "must be a non-negative integer");
    }
    cfg.master_seed = v.get<std::uint64_t>();
  }
  if (root.contains("output_path")) cfg.output_path = get_string(root["output_path"], "output_path");
  if (root.contains("threads")) {
    const auto v = get_integer(root["threads"], "threads");
    if (v < 1 || v > 1024) fail("threads", "must be in [1, 1024]");
    cfg.threads = static_cast<int>(v);
  }
  if (root.contains("raw")) cfg.raw = get_bool(root["raw"], "raw");
  if (root.contains("dump_states")) cfg.dump_states = get_bool(root["dump_states"], "dump_states");

  validate_config(cfg);
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  try {
    cfg.grid.validate();
  } catch (const InvalidArgument& e) {
    fail("grid", e.what());
  }
  if (cfg.measurement_grid) {
    try {
      cfg.measurement_grid->validate();
    } catch (const InvalidArgument& e) {
      fail("measurement_grid", e.what());
    }
  }
  if (cfg.state_specs.empty()) fail("states", "must be non-empty");
  for (std::size_t i = 0; i < cfg.state_specs.size(); ++i) {
    try {
      named_state(cfg.state_specs[i], cfg.space);
    } catch (const Error& e) {
      fail(indexed("states", i), e.what());
    }
  }
  // Every probe (and measurement) amplitude must fit in the truncation.
  try {
    for (int n : nodes_axis(cfg)) {
      for (double s : steps_axis(cfg)) ProbeBasis::from_grid(with_axes(cfg.grid, n, s), HilbertSpec::single(cfg.space.truncation));
    }
  } catch (const Error& e) {
    fail("grid", e.what());
  }
  if (cfg.measurement_grid) {
    try {
      ProbeBasis::from_grid(*cfg.measurement_grid, HilbertSpec::single(cfg.space.truncation));
    } catch (const Error& e) {
      fail("measurement_grid", e.what());
    }
  }
  try {
    cfg.solver.validate();
  } catch (const InvalidArgument& e) {
    fail("solver", e.what());
  }
  if (cfg.experiment == Experiment::kReconstructSweep && cfg.n_rep_list.empty()) {
    fail("n_rep_list", "must be non-empty for reconstruct_sweep");
  }
  for (std::size_t i = 0; i < cfg.n_rep_list.size(); ++i) {
    if (cfg.n_rep_list[i] < 0) fail(indexed("n_rep_list", i), "must be >= 0");
  }
  if (cfg.experiment == Experiment::kNoiseSweep && cfg.noise_sigmas.empty()) {
    fail("noise_sigmas", "must be non-empty for noise_sweep");
  }
  for (std::size_t i = 0; i < cfg.noise_sigmas.size(); ++i) {
    if (!(cfg.noise_sigmas[i] >= 0.0) || !std::isfinite(cfg.noise_sigmas[i])) {
      fail(indexed("noise_sigmas", i), "must be a finite number >= 0");
    }
  }
  if (cfg.trials < 1) fail("trials", "must be >= 1");
  if (cfg.threads < 1) fail("threads", "must be >= 1");
  if (cfg.experiment == Experiment::kWitnessTable && cfg.space.modes != 2) {
    fail("space.modes", "witness_table needs two modes");
  }
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  // Shifted by the first sample so that identical samples aggregate to
  // exactly that value with zero spread.
  const double ref = values.front();
  double shift = 0.0;
  for (double v : values) shift += v - ref;
  s.mean = ref + shift / s.count;
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  if (s.count > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(acc / (s.count - 1));
  }
  return s;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = std::max(1, std::min(threads, n));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < n && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// Experiments.
// ---------------------------------------------------------------------------

ExperimentResult run_represent_sweep(const ExperimentConfig& cfg) {
  auto cells = run_representation_cells(cfg);
  ExperimentResult out;
  out.table.header = {"id",          "state",          "grid",          "nodes",
                      "step",        "angular_step",   "M",             "fidelity",
                      "purity",      "target_purity",  "hs_distance",   "min_eigenvalue",
                      "objective",   "iterations",     "converged",     "constraint_violation",
                      "witness_target", "witness_approx", "witness_self", "negativity"};
  std::map<std::string, PlotSeries> series;
  for (const auto& c : cells) {
    out.table.rows.push_back({c.id, c.state, grid_kind(c.grid), std::to_string(c.grid.nodes),
                              format_double(grid_step(c.grid)),
                              format_double(c.grid.angular_step), std::to_string(c.m),
                              format_double(c.metrics.fidelity), format_double(c.metrics.purity),
                              format_double(c.target_purity), format_double(c.metrics.hs_distance),
                              format_double(c.metrics.min_eigenvalue),
                              format_double(c.fit.objective), std::to_string(c.fit.iterations),
                              bool_str(c.fit.converged),
                              format_double(c.fit.constraint_violation),
                              opt_number(c.witness_target), opt_number(c.witness_approx),
                              opt_number(c.witness_self), opt_number(c.negativity)});
    const std::string name = "fidelity_" + sanitize(c.state) + "_N" + std::to_string(c.grid.nodes);
    auto& s = series[name];
    s.name = name;
    s.points.emplace_back(grid_step(c.grid), c.metrics.fidelity);
  }
  for (auto& [_, s] : series) out.plots.push_back(std::move(s));
  collect_states(cfg, cells, out);
  return out;
}

ExperimentResult run_witness_table(const ExperimentConfig& cfg) {
  if (cfg.space.modes != 2) throw ConfigError("field `space.modes`: witness_table needs two modes");
  auto cells = run_representation_cells(cfg);
  ExperimentResult out;
  out.table.header = {"state",        "n_rep_or_d", "trace_value", "negativity", "detected",
                      "nodes",        "trace_target", "trace_difference", "fidelity", "id"};
  std::map<std::string, PlotSeries> series;
  for (const auto& c : cells) {
    const double tv = *c.witness_approx;
    out.table.rows.push_back({c.state, format_double(grid_step(c.grid)), format_double(tv),
                              format_double(*c.negativity), bool_str(tv < -kDetectionTol),
                              std::to_string(c.grid.nodes), format_double(*c.witness_target),
                              format_double(tv - *c.witness_target),
                              format_double(c.metrics.fidelity), c.id});
    const std::string name = "witness_" + sanitize(c.state) + "_N" + std::to_string(c.grid.nodes);
    auto& s = series[name];
    s.name = name;
    s.points.emplace_back(grid_step(c.grid), tv);
  }
  for (auto& [_, s] : series) out.plots.push_back(std::move(s));
  collect_states(cfg, cells, out);
  return out;
}

ExperimentResult run_purity_table(const ExperimentConfig& cfg) {
  auto cells = run_representation_cells(cfg);
  ExperimentResult out;
  out.table.header = {"state", "nodes", "step", "purity", "target_purity", "fidelity", "id"};
  std::map<std::string, PlotSeries> series;
  for (const auto& c : cells) {
    out.table.rows.push_back({c.state, std::to_string(c.grid.nodes),
                              format_double(grid_step(c.grid)), format_double(c.metrics.purity),
                              format_double(c.target_purity), format_double(c.metrics.fidelity),
                              c.id});
    const std::string name = "purity_" + sanitize(c.state) + "_N" + std::to_string(c.grid.nodes);
    auto& s = series[name];
    s.name = name;
    s.points.emplace_back(grid_step(c.grid), c.metrics.purity);
  }
  for (auto& [_, s] : series) out.plots.push_back(std::move(s));
  collect_states(cfg, cells, out);
  return out;
}

ExperimentResult run_noise_sweep(const ExperimentConfig& cfg) {
  const int n_states = static_cast<int>(cfg.state_specs.size());
  const ProbeBasis basis = ProbeBasis::from_grid(cfg.grid, cfg.space);
  const int m = basis.size();

  std::vector<std::optional<DensityMatrix>> targets(n_states);
  std::vector<FitResult> fits(n_states);
  std::vector<double> base_fidelity(n_states);
  parallel_for(n_states, cfg.threads, [&](int si) {
    targets[si] = named_state(cfg.state_specs[si], cfg.space);
    fits[si] = fit_state(*targets[si], basis, cfg.solver);
    base_fidelity[si] = fidelity(*targets[si], assemble(fits[si].coefficients, basis).state);
  });

  // Cell = (state, trial). One standard-normal draw per cell is scaled by
  // every sigma (common random numbers), so the sigma ladder is compared on
  // identical noise directions.
  const auto& sig = cfg.noise_sigmas;
  const int n_sig = static_cast<int>(sig.size());
  struct Sample {
    double fidelity = 0.0;
    double purity = 0.0;
    double min_eig = 0.0;
    std::optional<DensityMatrix> state;
  };
  const bool keep_states = cfg.dump_states;
  std::vector<std::vector<Sample>> samples(n_states * cfg.trials, std::vector<Sample>(n_sig));
  parallel_for(n_states * cfg.trials, cfg.threads, [&](int c) {
    const int si = c / cfg.trials;
    const int trial = c % cfg.trials;
    const RVector eps = standard_normals(
        m, derive_seed(cfg.master_seed, static_cast<std::uint64_t>(si), static_cast<std::uint64_t>(trial)));
    for (int k = 0; k < n_sig; ++k) {
      const RVector x = sig[k] == 0.0 ? fits[si].coefficients
                                      : RVector(fits[si].coefficients + sig[k] * eps);
      Assembly a = assemble(x, basis);
      Sample& s = samples[c][k];
      s.fidelity = fidelity(*targets[si], a.state);
      s.purity = purity(a.state);
      s.min_eig = a.min_eigenvalue;
      if (keep_states) s.state = std::move(a.state);
    }
  });

  ExperimentResult out;
  for (const auto& f : fits) {
    if (!f.converged) ++out.nonconverged_cells;
  }
  const bool raw = cfg.raw || cfg.dump_states;
  if (raw) {
    out.table.header = {"id", "state", "sigma", "trial", "fidelity", "purity",
                        "min_eigenvalue_before_clip", "base_fidelity"};
  } else {
    out.table.header = {"state",         "sigma",         "trials",        "fidelity_mean",
                        "fidelity_std",  "fidelity_min",  "fidelity_max",  "purity_mean",
                        "base_fidelity"};
  }
  for (int si = 0; si < n_states; ++si) {
    PlotSeries series{"fidelity_" + sanitize(cfg.state_specs[si]), {}};
    for (int k = 0; k < n_sig; ++k) {
      std::vector<double> fid, pur;
      for (int t = 0; t < cfg.trials; ++t) {
        Sample& s = samples[si * cfg.trials + t][k];
        fid.push_back(s.fidelity);
        pur.push_back(s.purity);
        if (raw) {
          const std::string id = "noise_s" + std::to_string(si) + "_k" + std::to_string(k) +
                                 "_t" + std::to_string(t);
          out.table.rows.push_back({id, cfg.state_specs[si], format_double(sig[k]),
                                    std::to_string(t), format_double(s.fidelity),
                                    format_double(s.purity), format_double(s.min_eig),
                                    format_double(base_fidelity[si])});
          if (s.state) out.states.push_back({id, std::move(*s.state)});
        }
      }
      const Summary f = summarize(fid);
      if (!raw) {
        out.table.rows.push_back({cfg.state_specs[si], format_double(sig[k]),
                                  std::to_string(cfg.trials), format_double(f.mean),
                                  format_double(f.std), format_double(f.min),
                                  format_double(f.max), format_double(summarize(pur).mean),
                                  format_double(base_fidelity[si])});
      }
      series.points.emplace_back(sig[k], f.mean);
    }
    out.plots.push_back(std::move(series));
  }
  return out;
}

ExperimentResult run_reconstruct_sweep(const ExperimentConfig& cfg) {
  const int n_states = static_cast<int>(cfg.state_specs.size());
  const int n_nrep = static_cast<int>(cfg.n_rep_list.size());
  const ProbeBasis basis = ProbeBasis::from_grid(cfg.grid, cfg.space);
  const MeasurementSet meas = cfg.measurement_grid
                                  ? MeasurementSet::from_grid(*cfg.measurement_grid, cfg.space)
                                  : MeasurementSet(basis);
  const RMatrix exact_probes = probe_probability_matrix(basis, meas);
  const bool two_mode = cfg.space.modes == 2;

  struct StateInfo {
    std::optional<DensityMatrix> target;
    DataPattern exact_signal;
    double rep_fidelity = 0.0;
    bool rep_converged = true;
    std::optional<WitnessReport> witness;
  };
  std::vector<StateInfo> info(n_states);
  parallel_for(n_states, cfg.threads, [&](int si) {
    StateInfo& s = info[si];
    s.target = named_state(cfg.state_specs[si], cfg.space);
    s.exact_signal = probabilities(*s.target, meas);
    const FitResult rep = fit_state(*s.target, basis, cfg.solver);
    s.rep_fidelity = fidelity(*s.target, assemble(rep.coefficients, basis).state);
    s.rep_converged = rep.converged;
    if (two_mode) s.witness = build_witness(*s.target);
  });

  struct Cell {
    std::string id;
    FitResult fit;
    MetricReport metrics;
    std::optional<double> witness_self, witness_precise, negativity;
    std::optional<DensityMatrix> state;
  };
  const int n_cells = n_states * n_nrep * cfg.trials;
  std::vector<Cell> cells(n_cells);
  parallel_for(n_cells, cfg.threads, [&](int c) {
    const int si = c / (n_nrep * cfg.trials);
    const int ni = (c / cfg.trials) % n_nrep;
    const int trial = c % cfg.trials;
    const std::int64_t n_rep = cfg.n_rep_list[ni];
    const std::uint64_t seed =
        derive_seed(cfg.master_seed, (static_cast<std::uint64_t>(si) << 32) | static_cast<std::uint64_t>(ni),
                    static_cast<std::uint64_t>(trial));

    // Probe xi samples on stream xi + 1 of the cell seed, the signal on 0.
    RMatrix probes = exact_probes;
    if (n_rep > 0) {
      for (int xi = 0; xi < basis.size(); ++xi) {
        DataPattern exact;
        exact.values = exact_probes.col(xi);
        probes.col(xi) = sample_pattern(exact, n_rep, seed, static_cast<std::uint64_t>(xi) + 1).values;
      }
    }
    const DataPattern signal =
        n_rep > 0 ? sample_pattern(info[si].exact_signal, n_rep, seed, 0) : info[si].exact_signal;

    Cell& cell = cells[c];
    cell.id = "rec_s" + std::to_string(si) + "_n" + std::to_string(ni) + "_t" + std::to_string(trial);
    cell.fit = fit_pattern(signal, probes, basis, cfg.solver);
    DensityMatrix approx = assemble(cell.fit.coefficients, basis).state;
    cell.metrics = compare(*info[si].target, approx);
    if (two_mode) {
      const WitnessReport w = build_witness(approx);
      cell.witness_self = w.trace_value;
      cell.negativity = w.negativity;
      cell.witness_precise = evaluate_witness(info[si].witness->witness, approx);
    }
    if (cfg.dump_states) cell.state = std::move(approx);
  });

  ExperimentResult out;
  for (const auto& s : info) {
    if (!s.rep_converged) ++out.nonconverged_cells;
  }
  for (const auto& c : cells) {
    if (!c.fit.converged) ++out.nonconverged_cells;
  }
  const bool raw = cfg.raw || cfg.dump_states;
  if (raw) {
    out.table.header = {"id",          "state",          "n_rep",         "trial",
                        "fidelity",    "purity",         "min_eigenvalue", "objective",
                        "iterations",  "converged",      "constraint_violation",
                        "witness_self", "witness_precise", "negativity", "detected",
                        "representation_fidelity"};
  } else {
    out.table.header = {"state",             "n_rep",             "trials",
                        "fidelity_mean",     "fidelity_std",      "fidelity_min",
                        "fidelity_max",      "purity_mean",       "witness_self_mean",
                        "witness_self_max",  "witness_precise_mean", "witness_precise_max",
                        "nonconverged",      "representation_fidelity"};
  }
  for (int si = 0; si < n_states; ++si) {
    PlotSeries fid_series{"fidelity_" + sanitize(cfg.state_specs[si]), {}};
    PlotSeries wit_series{"witness_" + sanitize(cfg.state_specs[si]), {}};
    for (int ni = 0; ni < n_nrep; ++ni) {
      std::vector<double> fid, pur, wself, wprec;
      int nonconv = 0;
      for (int t = 0; t < cfg.trials; ++t) {
        Cell& c = cells[(si * n_nrep + ni) * cfg.trials + t];
        fid.push_back(c.metrics.fidelity);
        pur.push_back(c.metrics.purity);
        if (c.witness_self) wself.push_back(*c.witness_self);
        if (c.witness_precise) wprec.push_back(*c.witness_precise);
        if (!c.fit.converged) ++nonconv;
        if (raw) {
          const bool detected = c.witness_self && *c.witness_self < -kDetectionTol;
          out.table.rows.push_back(
              {c.id, cfg.state_specs[si], std::to_string(cfg.n_rep_list[ni]), std::to_string(t),
               format_double(c.metrics.fidelity), format_double(c.metrics.purity),
               format_double(c.metrics.min_eigenvalue), format_double(c.fit.objective),
               std::to_string(c.fit.iterations), bool_str(c.fit.converged),
               format_double(c.fit.constraint_violation), opt_number(c.witness_self),
               opt_number(c.witness_precise), opt_number(c.negativity),
               two_mode ? bool_str(detected) : std::string(),
               format_double(info[si].rep_fidelity)});
          if (c.state) out.states.push_back({c.id, std::move(*c.state)});
        }
      }
      const Summary f = summarize(fid);
      const auto x = static_cast<double>(cfg.n_rep_list[ni]);
      fid_series.points.emplace_back(x, f.mean);
      if (!raw) {
        const Summary ws = summarize(wself);
        const Summary wp = summarize(wprec);
        out.table.rows.push_back(
            {cfg.state_specs[si], std::to_string(cfg.n_rep_list[ni]), std::to_string(cfg.trials),
             format_double(f.mean), format_double(f.std), format_double(f.min),
             format_double(f.max), format_double(summarize(pur).mean),
             two_mode ? format_double(ws.mean) : std::string(),
             two_mode ? format_double(ws.max) : std::string(),
             two_mode ? format_double(wp.mean) : std::string(),
             two_mode ? format_double(wp.max) : std::string(), std::to_string(nonconv),
             format_double(info[si].rep_fidelity)});
      }
      if (two_mode) wit_series.points.emplace_back(x, summarize(wself).mean);
    }
    out.plots.push_back(std::move(fid_series));
    if (two_mode) out.plots.push_back(std::move(wit_series));
  }
  return out;
}

ExperimentResult run_grid_dump(const ExperimentConfig& cfg) {
  const ProbeBasis basis = ProbeBasis::from_grid(cfg.grid, cfg.space);
  ExperimentResult out;
  out.table.header = {"xi", "mode", "re", "im"};
  const auto& amps = basis.amplitudes();
  PlotSeries series{"grid", {}};
  for (std::size_t xi = 0; xi < amps.size(); ++xi) {
    for (std::size_t mode = 0; mode < amps[xi].size(); ++mode) {
      out.table.rows.push_back({std::to_string(xi), std::to_string(mode),
                                format_double(amps[xi][mode].re()),
                                format_double(amps[xi][mode].im())});
    }
  }
  // The layout of one mode (all modes share the grid).
  for (const auto& a : make_grid(cfg.grid)) series.points.emplace_back(a.re(), a.im());
  out.plots.push_back(std::move(series));
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  switch (cfg.experiment) {
    case Experiment::kRepresent: {
      ExperimentConfig one = cfg;
      one.sweep_nodes.clear();
      one.sweep_steps.clear();
      return run_represent_sweep(one);
    }
    case Experiment::kRepresentSweep: return run_represent_sweep(cfg);
    case Experiment::kNoiseSweep: return run_noise_sweep(cfg);
    case Experiment::kReconstructSweep: return run_reconstruct_sweep(cfg);
    case Experiment::kWitnessTable: return run_witness_table(cfg);
    case Experiment::kPurityTable: return run_purity_table(cfg);
    case Experiment::kGrid: return run_grid_dump(cfg);
  }
  throw ConfigError("field `experiment`: unsupported experiment");
}

void write_table(std::ostream& out, const Table& table) {
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
}

void write_plots(const std::string& dir, const std::vector<PlotSeries>& plots) {
  std::filesystem::create_directories(dir);
  for (const auto& s : plots) {
    std::ofstream f(std::filesystem::path(dir) / (s.name + ".csv"));
    if (!f) throw Error("cannot write plot file for series " + s.name);
    f << "x,y\n";
    for (const auto& [x, y] : s.points) f << format_double(x) << ',' << format_double(y) << '\n';
  }
}

void write_states(const std::string& dir, const std::vector<StateDump>& states) {
  std::filesystem::create_directories(dir);
  for (const auto& s : states) {
    std::ofstream f(std::filesystem::path(dir) / (s.id + ".csv"));
    if (!f) throw Error("cannot write state file " + s.id);
    write_density_csv(f, s.state);
  }
}

std::string describe_columns() {
  return R"(CSV columns by subcommand:
  represent, represent_sweep:
    id,state,grid,nodes,step,angular_step,M,fidelity,purity,target_purity,
    hs_distance,min_eigenvalue,objective,iterations,converged,
    constraint_violation,witness_target,witness_approx,witness_self,negativity
    (witness columns are empty for single-mode states; `step` is the square
    pitch or the helical radial step)
  witness_table:
    state,n_rep_or_d,trace_value,negativity,detected,nodes,trace_target,
    trace_difference,fidelity,id
    (trace_value = Tr(W rho_approx) with W built from the exact state)
  purity_table:
    state,nodes,step,purity,target_purity,fidelity,id
  noise_sweep (aggregated):
    state,sigma,trials,fidelity_mean,fidelity_std,fidelity_min,fidelity_max,
    purity_mean,base_fidelity
  noise_sweep --raw:
    id,state,sigma,trial,fidelity,purity,min_eigenvalue_before_clip,base_fidelity
  reconstruct_sweep (aggregated):
    state,n_rep,trials,fidelity_mean,fidelity_std,fidelity_min,fidelity_max,
    purity_mean,witness_self_mean,witness_self_max,witness_precise_mean,
    witness_precise_max,nonconverged,representation_fidelity
  reconstruct_sweep --raw:
    id,state,n_rep,trial,fidelity,purity,min_eigenvalue,objective,iterations,
    converged,constraint_violation,witness_self,witness_precise,negativity,
    detected,representation_fidelity
  grid:
    xi,mode,re,im
Plot series are written to <output>.plots/<series>.csv as `x,y`; with
--dump-states each row's reconstructed density matrix is written to
<output>.states/<id>.csv (--dump-states implies --raw for sweeps with trials).
)";
}

}  // namespace dptomo
