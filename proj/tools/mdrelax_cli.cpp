#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "mdrelax/harness.hpp"
#include "mdrelax/tableau.hpp"

using namespace mdrelax;

namespace {

void add_run_options(CLI::App* cmd, RunSpec& spec, std::string& config_path,
                     bool multi_dt) {
  cmd->add_option("--config", config_path, "JSON config file (flags override)");
  cmd->add_option("--problem", spec.problem, "oscillator | kepler");
  cmd->add_option("--tableau", spec.tableau,
                  "HB-I2DRK6-3s | HB-I2DRK8-4s | HB-I3DRK6-2s");
  cmd->add_option("--kmax", spec.kmax, "number of correction sweeps");
  cmd->add_flag("--relaxed", spec.relaxed, "apply relaxation after each step");
  if (multi_dt)
    cmd->add_option("--dt", spec.dts, "step sizes (geometric sequence)");
  else
    cmd->add_option("--dt", spec.dts, "step size")->expected(1);
  cmd->add_option("--tend", spec.T_end, "final time");
  cmd->add_option("--functional", spec.functional, "default | hamiltonian");
  cmd->add_option("--corrector-scaling", spec.corrector_scaling,
                  "global | per-stage");
  cmd->add_option("--quadrature-source", spec.quadrature_source,
                  "iterate-k | serial-sweep");
  cmd->add_option("--out", spec.output_dir, "output directory");
}

RunSpec resolve_spec(CLI::App* cmd, const RunSpec& cli_spec,
                     const std::string& config_path) {
  RunSpec spec;
  if (!config_path.empty()) spec = RunSpec::from_json_file(config_path);
  // CLI values win over file values when the flag was actually given
  auto take = [&](const char* flag, auto member) {
    if (cmd->count(flag)) spec.*member = cli_spec.*member;
  };
  take("--problem", &RunSpec::problem);
  take("--tableau", &RunSpec::tableau);
  take("--kmax", &RunSpec::kmax);
  take("--relaxed", &RunSpec::relaxed);
  take("--dt", &RunSpec::dts);
  take("--tend", &RunSpec::T_end);
  take("--functional", &RunSpec::functional);
  take("--corrector-scaling", &RunSpec::corrector_scaling);
  take("--quadrature-source", &RunSpec::quadrature_source);
  take("--out", &RunSpec::output_dir);
  return spec;
}

int report_outcome(const RunOutcome& out) {
  std::cout << "wrote " << out.csv_path << "\n";
  if (!out.completed) {
    std::cerr << "run aborted at t = " << out.failure_time << ": "
              << out.failure << "\n";
    return 1;
  }
  return 0;
}

std::vector<double> default_dts(const std::string& problem) {
  double d0 = problem == "kepler" ? 0.2 : 0.4;
  std::vector<double> dts;
  for (int i = 0; i < 6; ++i) dts.push_back(d0 / (1 << i));
  return dts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HBPC multiderivative integrator with relaxation"};
  app.require_subcommand(1);

  RunSpec cli_spec;
  std::string config_path;

  auto* growth = app.add_subcommand("growth", "error growth over time (CSV)");
  auto* conv = app.add_subcommand("convergence", "convergence study (CSV)");
  auto* gamma = app.add_subcommand("gamma-trace", "per-step gamma (CSV)");
  add_run_options(growth, cli_spec, config_path, false);
  add_run_options(conv, cli_spec, config_path, true);
  add_run_options(gamma, cli_spec, config_path, false);

  auto* tab = app.add_subcommand("tableau", "tableau utilities");
  tab->require_subcommand(1);
  auto* dump = tab->add_subcommand("dump", "print a builtin tableau as JSON");
  std::string tab_name;
  dump->add_option("--name", tab_name, "builtin tableau name")->required();

  auto* plot = app.add_subcommand("plot", "emit a plot script for CSVs");
  std::vector<std::string> csvs;
  std::string plot_kind = "growth";
  std::string plot_out = "plot.py";
  plot->add_option("csvs", csvs, "input CSV files")->required();
  plot->add_option("--kind", plot_kind, "growth | convergence");
  plot->add_option("--out", plot_out, "output script path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (growth->parsed()) {
      RunSpec spec = resolve_spec(growth, cli_spec, config_path);
      if (spec.dts.empty()) spec.dts = {0.2};
      return report_outcome(cmd_growth(spec));
    }
    if (conv->parsed()) {
      RunSpec spec = resolve_spec(conv, cli_spec, config_path);
      if (spec.dts.empty()) spec.dts = default_dts(spec.problem);
      auto report = cmd_convergence(spec);
      std::printf("expected order %d, fitted order %.3f\n", report.p_expected,
                  report.p_obs);
      std::cout << "wrote " << report.csv_path << "\n";
      return 0;
    }
    if (gamma->parsed()) {
      RunSpec spec = resolve_spec(gamma, cli_spec, config_path);
      if (spec.dts.empty()) spec.dts = {0.2};
      return report_outcome(cmd_gamma_trace(spec));
    }
    if (dump->parsed()) {
      std::cout << builtin(tab_name).to_json() << "\n";
      return 0;
    }
    if (plot->parsed()) {
      PlotKind kind = plot_kind == "convergence" ? PlotKind::convergence
                                                 : PlotKind::growth;
      std::cout << "wrote " << cmd_plot(csvs, kind, plot_out) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
