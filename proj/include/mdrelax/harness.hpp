#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mdrelax/hbpc.hpp"
#include "mdrelax/relaxation.hpp"
#include "mdrelax/types.hpp"

namespace mdrelax {

struct RunSpec {
  std::string problem = "oscillator";  // oscillator | kepler
  std::string tableau = "HB-I2DRK6-3s";
  int kmax = 4;
  bool relaxed = false;
  std::vector<double> dts;  // one entry for growth/trace, >= 4 for convergence
  double T_end = 10.0;
  std::string functional = "default";  // default | hamiltonian
  std::string corrector_scaling = "global";    // global | per-stage
  std::string quadrature_source = "iterate-k";  // iterate-k | serial-sweep
  std::string output_dir = ".";

  static RunSpec from_json_file(const std::string& path);
  void apply_json(const std::string& doc);
};

IVP problem_from_spec(const RunSpec& spec);
HBPCConfig config_from_spec(const RunSpec& spec);

/// Outcome of a single run command; `completed` is false when the run
/// aborted before T_end (the CSV then holds the partial trajectory).
struct RunOutcome {
  std::string csv_path;
  bool completed = true;
  std::string failure;
  double failure_time = 0.0;
};

/// `t,error,eta` rows; error is the Euclidean distance to the reference at
/// each recorded (possibly relaxed) time.
RunOutcome cmd_growth(const RunSpec& spec);

/// `t,gamma` rows; a trailing `<t>,nan` row marks an aborted run.
RunOutcome cmd_gamma_trace(const RunSpec& spec);

struct ConvergenceRow {
  double dt;
  double error;
  double eta_drift;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double p_obs = 0.0;
  int p_expected = 0;
  std::string csv_path;
};

/// Runs every dt in the spec, writes `dt,error,eta_drift`, and fits the
/// log-log slope over rows with error in [1e-11, 1e-1]. Throws
/// InsufficientAsymptoticRange when fewer than 3 rows land in that window.
ConvergenceReport cmd_convergence(const RunSpec& spec);

enum class PlotKind { growth, convergence };

/// Emits a self-contained Python plot script for the given CSVs.
std::string cmd_plot(const std::vector<std::string>& csv_paths, PlotKind kind,
                     const std::string& out_path);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Convergence-order fit restricted to rows with error in [1e-11, 1e-1];
/// throws InsufficientAsymptoticRange when fewer than 3 rows qualify.
double fit_window_slope(const std::vector<ConvergenceRow>& rows);

}  // namespace mdrelax
