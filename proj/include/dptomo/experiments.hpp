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

// Config-driven experiment sweeps.
//
// Every experiment expands its configuration into an ordered list of cells,
// runs the cells on a bounded worker pool, and collects rows by cell index,
// so the table does not depend on scheduling or on the number of workers.
// All randomness is derived from `master_seed` through derive_seed().

#ifndef DPTOMO_EXPERIMENTS_HPP
#define DPTOMO_EXPERIMENTS_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dptomo/convex_fit.hpp"
#include "dptomo/probe_basis.hpp"

namespace dptomo {

/// Invalid configuration; the message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Experiment {
  kRepresent,
  kRepresentSweep,
  kNoiseSweep,
  kReconstructSweep,
  kWitnessTable,
  kPurityTable,
  kGrid,
};

std::string_view experiment_name(Experiment e);
/// Throws ConfigError for unknown names.
Experiment parse_experiment(std::string_view name);

struct ExperimentConfig {
  Experiment experiment = Experiment::kRepresent;
  std::vector<std::string> state_specs;
  HilbertSpec space = HilbertSpec::single(12);
  GridSpec grid;

  // Sweep axes for represent_sweep / witness_table / purity_table. `steps`
  // holds pitches (square) or radial steps (helical).
  std::vector<int> sweep_nodes;
  std::vector<double> sweep_steps;

  std::optional<GridSpec> measurement_grid;  // defaults to the probe grid
  SolverConfig solver;
  std::vector<std::int64_t> n_rep_list;
  std::vector<double> noise_sigmas;
  int trials = 1;
  std::uint64_t master_seed = 0;
  std::string output_path;  // empty: standard output

  // Run options (normally set from the command line).
  int threads = 1;
  bool raw = false;
  bool dump_states = false;
};

/// Parses a JSON document, applies defaults and checks every constraint.
/// Unknown fields are rejected. `experiment`, when given (the CLI
/// subcommand), selects the experiment; a conflicting `experiment` field in
/// the document is an error. Throws ConfigError.
ExperimentConfig validate_config(std::string_view text,
                                 std::optional<Experiment> experiment = std::nullopt);

/// Re-checks an in-memory config (after command-line overrides).
void validate_config(const ExperimentConfig& cfg);

/// Paper suites: {fock:1, coherent:0.5, even_cat:0.5, superpos01} on one
/// mode; {entangled_cat:0.5, bell_psi, bell_phi} on two.
std::vector<std::string> default_states(int modes);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// One plot series, written as a two-column `x,y` file.
struct PlotSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

/// A density matrix attached to a row (for --dump-states).
struct StateDump {
  std::string id;
  DensityMatrix state;
};

struct ExperimentResult {
  Table table;
  std::vector<PlotSeries> plots;
  std::vector<StateDump> states;
  int nonconverged_cells = 0;
};

ExperimentResult run_represent_sweep(const ExperimentConfig& cfg);
ExperimentResult run_noise_sweep(const ExperimentConfig& cfg);
ExperimentResult run_reconstruct_sweep(const ExperimentConfig& cfg);
ExperimentResult run_witness_table(const ExperimentConfig& cfg);
ExperimentResult run_purity_table(const ExperimentConfig& cfg);
ExperimentResult run_grid_dump(const ExperimentConfig& cfg);

/// Dispatches on cfg.experiment (`represent` is a one-cell represent sweep).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

void write_table(std::ostream& out, const Table& table);

/// Writes each series to `<dir>/<name>.csv` and each dumped state to
/// `<dir>/<id>.csv`; creates `dir` if needed.
void write_plots(const std::string& dir, const std::vector<PlotSeries>& plots);
void write_states(const std::string& dir, const std::vector<StateDump>& states);

/// Text for `--help`: CSV columns of each experiment.
std::string describe_columns();

/// Mean, sample standard deviation, min and max of a sample.
struct Summary {
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  int count = 0;
};
Summary summarize(const std::vector<double>& values);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Exceptions are
/// rethrown on the caller (the lowest failing index wins).
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace dptomo

#endif  // DPTOMO_EXPERIMENTS_HPP
