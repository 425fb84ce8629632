// Command line front end: run experiments from a config file, reproduce the
// named presets, or emit the rate analysis without running anything.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "indo/experiment.hpp"

namespace {

std::string dataset_root_or_env(const std::string& cli_value) {
  if (!cli_value.empty()) return cli_value;
  if (const char* env = std::getenv("INDO_DATA_DIR")) return env;
  return "";
}

void print_summary(const std::vector<indo::RunOutput>& outputs) {
  for (const auto& out : outputs) {
    const auto& trace = out.result.trace;
    std::printf("%-24s %5zu iterations   final metric %-13.6g %s-> %s\n",
                out.name.c_str(), trace.size(),
                trace.empty() ? 0.0 : trace.back().metric,
                out.result.aborted ? "[aborted] " : "",
                out.csv_path.string().c_str());
    if (out.result.aborted)
      std::printf("    reason: %s\n", out.result.abort_reason.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed consensus optimization simulator: proximal method "
               "of multipliers with an inexact Newton direction (Jacobi "
               "overrelaxation inner solver) and the block-Newton baseline"};
  app.require_subcommand(1);

  std::string config_path, run_output, rep_output = "traces", data_dir, preset,
                           analyze_out;

  CLI::App* run_cmd = app.add_subcommand("run", "execute a config file");
  run_cmd->add_option("config", config_path, "experiment config file")
      ->required();
  run_cmd->add_option("--output", run_output,
                      "override the [output] dir from the config");

  CLI::App* rep_cmd =
      app.add_subcommand("reproduce", "run a named experiment preset");
  rep_cmd->add_option("preset", preset, "fig1|fig2|fig3|fig4")->required();
  rep_cmd->add_option("--output", rep_output, "output directory");
  rep_cmd->add_option("--data", data_dir,
                      "dataset root (defaults to $INDO_DATA_DIR)");

  CLI::App* an_cmd = app.add_subcommand(
      "analyze", "emit the rate report for a config without running it");
  an_cmd->add_option("config", config_path, "experiment config file")
      ->required();
  an_cmd->add_option("--output", analyze_out,
                     "write the JSON report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      indo::ExperimentConfig cfg = indo::parse_config(config_path);
      if (!run_output.empty()) cfg.output_dir = run_output;
      print_summary(indo::run_experiment(cfg));
    } else if (rep_cmd->parsed()) {
      indo::ExperimentConfig cfg = indo::reproduce_preset(
          preset, dataset_root_or_env(data_dir), rep_output);
      print_summary(indo::run_experiment(cfg));
    } else if (an_cmd->parsed()) {
      indo::ExperimentConfig cfg = indo::parse_config(config_path);
      std::string report = indo::analyze_report(cfg);
      if (analyze_out.empty()) {
        std::cout << report;
      } else {
        std::ofstream out(analyze_out);
        out << report;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
