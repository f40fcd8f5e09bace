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

// tomo <subcommand> <config-path> [--seed N] [--output PATH] [--threads N]
//      [--raw] [--dump-states]
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error,
// 3 solver non-convergence in at least one cell (results are still written).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dptomo/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNonConvergence = 3;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<int> threads;
  bool raw = false;
  bool dump_states = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dptomo::ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(dptomo::Experiment experiment, const Options& opt) {
  dptomo::ExperimentConfig cfg;
  try {
    cfg = dptomo::validate_config(read_file(opt.config_path), experiment);
    if (opt.seed) cfg.master_seed = *opt.seed;
    if (opt.output) cfg.output_path = *opt.output;
    if (opt.threads) cfg.threads = *opt.threads;
    cfg.raw = cfg.raw || opt.raw;
    cfg.dump_states = cfg.dump_states || opt.dump_states;
    dptomo::validate_config(cfg);
  } catch (const dptomo::ConfigError& e) {
    std::cerr << "config error (" << opt.config_path << "): " << e.what() << '\n';
    return kExitConfig;
  }

  const dptomo::ExperimentResult result = dptomo::run_experiment(cfg);
  if (cfg.output_path.empty()) {
    dptomo::write_table(std::cout, result.table);
  } else {
    std::ofstream out(cfg.output_path);
    if (!out) throw dptomo::Error("cannot open output file '" + cfg.output_path + "'");
    dptomo::write_table(out, result.table);
    dptomo::write_plots(cfg.output_path + ".plots", result.plots);
  }
  if (cfg.dump_states) {
    const std::string dir =
        cfg.output_path.empty() ? std::string("tomo_states") : cfg.output_path + ".states";
    dptomo::write_states(dir, result.states);
  }
  if (result.nonconverged_cells > 0) {
    std::cerr << "warning: " << result.nonconverged_cells
              << " cell(s) did not converge; rows are flagged in the output\n";
    return kExitNonConvergence;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-pattern tomography with coherent-state probes"};
  app.footer(dptomo::describe_columns());
  app.require_subcommand(1);

  Options opt;
  std::optional<dptomo::Experiment> chosen;
  const struct {
    dptomo::Experiment e;
    const char* help;
  } commands[] = {
      {dptomo::Experiment::kRepresent, "Represent each state on one probe grid"},
      {dptomo::Experiment::kRepresentSweep, "Representation fidelity over grid parameters"},
      {dptomo::Experiment::kNoiseSweep, "Fidelity under Gaussian coefficient noise"},
      {dptomo::Experiment::kReconstructSweep, "Reconstruction from sampled data patterns"},
      {dptomo::Experiment::kWitnessTable, "Witness traces of two-mode representations"},
      {dptomo::Experiment::kPurityTable, "Purity of representations"},
      {dptomo::Experiment::kGrid, "Dump the probe grid as xi,mode,re,im"},
  };
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(std::string(dptomo::experiment_name(c.e)), c.help);
    sub->add_option("config", opt.config_path, "JSON config file")->required();
    sub->add_option("--seed", opt.seed, "Override master_seed");
    sub->add_option("--output", opt.output, "Output CSV path (default: stdout)");
    sub->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--raw", opt.raw, "Write per-trial rows instead of aggregates");
    sub->add_flag("--dump-states", opt.dump_states, "Write each row's density matrix");
    const auto e = c.e;
    sub->callback([&chosen, e] { chosen = e; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    return run(*chosen, opt);
  } catch (const dptomo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
