#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "indo/analysis.hpp"
#include "indo/pmm.hpp"

namespace indo {

/// Parameter expression from a config file: a plain number, "M", "m", or a
/// scalar multiple such as "0.01M" / "0.01*M", resolved against the
/// instance's curvature constants.
struct ParamExpr {
  enum class Ref { none, big_m, small_m };
  double scale = 1.0;
  Ref ref = Ref::none;

  double resolve(double m, double M) const;
  std::string label() const;  // e.g. "M", "0.01M", "2.5"
  static ParamExpr number(double v);
  static ParamExpr big_M(double scale = 1.0);
  static ParamExpr small_m(double scale = 1.0);
  static ParamExpr parse(const std::string& text);  // throws on bad syntax
};

struct RunSpec {
  std::string name;  // empty: derived from the method naming scheme
  Variant variant = Variant::indo;
  ParamExpr alpha = ParamExpr::big_M();
  ParamExpr eps = ParamExpr::big_M();
  bool gamma_practical = true;
  ParamExpr gamma = ParamExpr::number(1.0);
  InnerPolicy inner;
  bool warm_start = true;
  std::optional<D0Policy> d0;  // overrides warm_start when set
  ForcingNorm forcing_norm = ForcingNorm::two;
  bool check_gamma = true;
  int K = 100;
};

struct ProblemSpec {
  ProblemKind kind = ProblemKind::quadratic;
  int n = 100;
  std::uint64_t seed = 1;
  std::string dataset;  // logistic
  double reg = 1e-4;    // logistic
};

struct NetworkSpec {
  int nodes = 30;
  std::uint64_t seed = 1;
};

struct MonitorSpec {
  bool lyapunov = false;
  bool inequalities = false;
  bool rate_report = false;
  double zeta = 0.0;  // 0: auto for the inequality monitor
};

struct ExperimentConfig {
  ProblemSpec problem;
  NetworkSpec network;
  MonitorSpec monitors;
  std::string output_dir = "traces";
  std::string graph_export;  // optional edge-list file, relative to output_dir
  std::vector<RunSpec> runs;
};

/// Throws std::runtime_error with "<file>:<line>: ..." on syntax problems,
/// unknown sections/keys, or invalid values.
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& display_name);

/// The resolved solver settings and display name for one run entry.
struct ResolvedRun {
  std::string name;
  SolverConfig config;
  int K = 0;
};
ResolvedRun resolve_run(const RunSpec& spec, const ProblemInstance& inst,
                        const Network& net);

struct RunOutput {
  std::string name;
  SolverConfig config;
  RunResult result;
  std::filesystem::path csv_path;
  std::filesystem::path sidecar_path;
};

/// Builds the network and problem, executes every run, and writes one CSV
/// trace plus one JSON sidecar per run. Deterministic end to end; solver
/// aborts are recorded in the sidecar with the partial trace kept.
std::vector<RunOutput> run_experiment(const ExperimentConfig& config);

/// Named experiment presets behind the `reproduce` CLI subcommand. fig1 is
/// the simulated quadratic study; fig2-fig4 are the Mushrooms, LSVT and
/// Parkinson's logistic studies and need dataset files under `dataset_root`.
ExperimentConfig reproduce_preset(const std::string& name,
                                  const std::string& dataset_root,
                                  const std::string& output_dir);

/// Rate analysis only (no runs executed): JSON text with the resolved
/// parameters and the RateReport per run entry.
std::string analyze_report(const ExperimentConfig& config);

/// Serialized trace schema used by run_experiment.
void write_trace_csv(const std::vector<TraceRecord>& trace, std::ostream& out);

}  // namespace indo
