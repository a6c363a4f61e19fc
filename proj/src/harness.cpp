#include "mdrelax/harness.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <fstream>
#include <sstream>

#include "mdrelax/reference.hpp"
#include "mdrelax/tableau.hpp"

namespace mdrelax {

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string run_tag(const RunSpec& spec, double dt) {
  std::ostringstream os;
  os << spec.problem << "_" << spec.tableau << "_kmax=" << spec.kmax
     << "_relaxed=" << (spec.relaxed ? 1 : 0) << "_dt=" << fmt(dt)
     << "_Tend=" << fmt(spec.T_end);
  return os.str();
}

std::string out_path(const RunSpec& spec, const std::string& base) {
  std::filesystem::create_directories(spec.output_dir);
  return (std::filesystem::path(spec.output_dir) / base).string();
}

struct RunResult {
  Trajectory traj;
  bool completed = true;
  std::string failure;
  double failure_time = 0.0;
};

RunResult run_one(const RunSpec& spec, double dt) {
  const IVP ivp = problem_from_spec(spec);
  const HBPCConfig cfg = config_from_spec(spec);
  RunResult r;
  try {
    r.traj = integrate(ivp, cfg, dt, spec.T_end, spec.relaxed);
  } catch (const IntegrationAborted& e) {
    r.traj = e.partial;
    r.completed = false;
    r.failure = e.what();
    r.failure_time = e.time;
  }
  return r;
}

}  // namespace

RunSpec RunSpec::from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  RunSpec spec;
  spec.apply_json(ss.str());
  return spec;
}

void RunSpec::apply_json(const std::string& doc) {
  auto j = nlohmann::json::parse(doc);
  if (j.contains("problem")) problem = j["problem"].get<std::string>();
  if (j.contains("tableau")) tableau = j["tableau"].get<std::string>();
  if (j.contains("kmax")) kmax = j["kmax"].get<int>();
  if (j.contains("relaxed")) relaxed = j["relaxed"].get<bool>();
  if (j.contains("dt")) {
    dts.clear();
    if (j["dt"].is_array())
      dts = j["dt"].get<std::vector<double>>();
    else
      dts.push_back(j["dt"].get<double>());
  }
  if (j.contains("tend")) T_end = j["tend"].get<double>();
  if (j.contains("functional")) functional = j["functional"].get<std::string>();
  if (j.contains("corrector_scaling"))
    corrector_scaling = j["corrector_scaling"].get<std::string>();
  if (j.contains("quadrature_source"))
    quadrature_source = j["quadrature_source"].get<std::string>();
  if (j.contains("out")) output_dir = j["out"].get<std::string>();
}

IVP problem_from_spec(const RunSpec& spec) {
  if (spec.problem == "oscillator") return oscillator();
  if (spec.problem == "kepler")
    return kepler(spec.functional == "hamiltonian"
                      ? KeplerFunctional::hamiltonian
                      : KeplerFunctional::angular_momentum);
  throw std::invalid_argument("unknown problem " + spec.problem);
}

HBPCConfig config_from_spec(const RunSpec& spec) {
  HBPCConfig cfg;
  cfg.tableau = builtin(spec.tableau);
  cfg.kmax = spec.kmax;
  cfg.corrector_scaling = spec.corrector_scaling == "per-stage"
                              ? CorrectorScaling::per_stage
                              : CorrectorScaling::global;
  cfg.quadrature_source = spec.quadrature_source == "serial-sweep"
                              ? QuadratureSource::serial_sweep
                              : QuadratureSource::iterate_k;
  return cfg;
}

RunOutcome cmd_growth(const RunSpec& spec) {
  if (spec.dts.size() != 1)
    throw std::invalid_argument("growth needs exactly one dt");
  const double dt = spec.dts[0];
  const IVP ivp = problem_from_spec(spec);
  const auto ref = reference_for(ivp, spec.T_end);
  RunResult r = run_one(spec, dt);

  RunOutcome out;
  out.csv_path = out_path(spec, "growth_" + run_tag(spec, dt) + ".csv");
  out.completed = r.completed;
  out.failure = r.failure;
  out.failure_time = r.failure_time;
  std::ofstream os(out.csv_path);
  os << "t,error,eta\n";
  // one row per accepted step; the trivial t = 0 record is not emitted
  for (size_t i = 1; i < r.traj.records.size(); ++i) {
    const auto& rec = r.traj.records[i];
    os << fmt(rec.t) << "," << fmt((rec.w - ref.eval(rec.t)).norm()) << ","
       << fmt(rec.eta) << "\n";
  }
  return out;
}

RunOutcome cmd_gamma_trace(const RunSpec& spec) {
  if (spec.dts.size() != 1)
    throw std::invalid_argument("gamma-trace needs exactly one dt");
  const double dt = spec.dts[0];
  RunResult r = run_one(spec, dt);

  RunOutcome out;
  out.csv_path = out_path(spec, "gamma_" + run_tag(spec, dt) + ".csv");
  out.completed = r.completed;
  out.failure = r.failure;
  out.failure_time = r.failure_time;
  std::ofstream os(out.csv_path);
  os << "t,gamma\n";
  for (size_t i = 1; i < r.traj.records.size(); ++i)
    os << fmt(r.traj.records[i].t) << "," << fmt(r.traj.records[i].gamma)
       << "\n";
  if (!r.completed) os << fmt(r.failure_time) << ",nan\n";
  return out;
}

double loglog_slope(const std::vector<double>& x,
                    const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 2 || y.size() != n)
    throw std::invalid_argument("loglog_slope needs >= 2 matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceReport cmd_convergence(const RunSpec& spec) {
  const auto& dts = spec.dts;
  if (dts.size() < 4)
    throw std::invalid_argument("convergence needs >= 4 dt values");
  for (size_t i = 0; i + 2 < dts.size(); ++i) {
    const double r1 = dts[i + 1] / dts[i], r2 = dts[i + 2] / dts[i + 1];
    if (std::abs(r1 - r2) > 1e-9 * r1 || r1 >= 1.0)
      throw std::invalid_argument("dt list must be a decreasing geometric "
                                  "sequence");
  }

  const IVP ivp = problem_from_spec(spec);
  const auto ref = reference_for(ivp, spec.T_end);
  const double eta0 = ivp.eta(ivp.w0);

  ConvergenceReport report;
  report.rows.resize(dts.size());
#pragma omp parallel for schedule(dynamic)
  for (size_t i = 0; i < dts.size(); ++i) {
    RunResult r = run_one(spec, dts[i]);
    const auto& last = r.traj.records.back();
    double max_drift = 0.0;
    for (const auto& rec : r.traj.records)
      max_drift = std::max(max_drift, std::abs(rec.eta - eta0));
    // an aborted run reports the error at the failure point; it will sit far
    // outside the fit window
    report.rows[i] = {dts[i], (last.w - ref.eval(last.t)).norm(), max_drift};
  }

  const HBPCConfig cfg = config_from_spec(spec);
  report.p_expected = std::min(spec.kmax + cfg.tableau.m, cfg.tableau.q);

  report.csv_path =
      out_path(spec, "convergence_" + run_tag(spec, dts[0]) + ".csv");
  std::ofstream os(report.csv_path);
  os << "dt,error,eta_drift\n";
  for (const auto& row : report.rows)
    os << fmt(row.dt) << "," << fmt(row.error) << "," << fmt(row.eta_drift)
       << "\n";

  report.p_obs = fit_window_slope(report.rows);
  return report;
}

double fit_window_slope(const std::vector<ConvergenceRow>& rows) {
  std::vector<double> fx, fy;
  for (const auto& row : rows)
    if (row.error >= 1e-11 && row.error <= 1e-1) {
      fx.push_back(row.dt);
      fy.push_back(row.error);
    }
  if (fx.size() < 3)
    throw InsufficientAsymptoticRange(
        "only " + std::to_string(fx.size()) +
        " rows inside the [1e-11, 1e-1] fit window");
  return loglog_slope(fx, fy);
}

std::string cmd_plot(const std::vector<std::string>& csv_paths, PlotKind kind,
                     const std::string& out_path) {
  if (csv_paths.empty()) throw MalformedCSV("no CSV files given");
  for (const auto& p : csv_paths) {
    std::ifstream is(p);
    std::string header;
    if (!is || !std::getline(is, header) || header.empty())
      throw MalformedCSV("empty or unreadable CSV: " + p);
    std::string line;
    if (!std::getline(is, line) || line.empty())
      throw MalformedCSV("CSV has no data rows: " + p);
  }

  std::ostringstream py;
  py << "#!/usr/bin/env python3\n"
     << "import csv\n"
     << "import matplotlib.pyplot as plt\n\n"
     << "files = [\n";
  for (const auto& p : csv_paths) py << "    " << std::quoted(p) << ",\n";
  py << "]\n\n"
     << "def load(path):\n"
     << "    with open(path) as f:\n"
     << "        rows = list(csv.DictReader(f))\n"
     << "    return rows\n\n"
     << "fig, ax = plt.subplots()\n";
  if (kind == PlotKind::growth) {
    py << "labels = [\"With relaxation\", \"Without relaxation\"]\n"
       << "for i, path in enumerate(files):\n"
       << "    rows = load(path)\n"
       << "    t = [float(r[\"t\"]) for r in rows]\n"
       << "    e = [float(r[\"error\"]) for r in rows if r[\"error\"]]\n"
       << "    label = labels[i] if len(files) == 2 else path\n"
       << "    ax.plot(t[:len(e)], e, label=label)\n"
       << "ax.set_xlabel(\"Time t\")\n"
       << "ax.set_ylabel(\"Numerical error\")\n";
  } else {
    py << "for path in files:\n"
       << "    rows = load(path)\n"
       << "    dt = [float(r[\"dt\"]) for r in rows]\n"
       << "    e = [float(r[\"error\"]) for r in rows]\n"
       << "    label = path\n"
       << "    if \"kmax=\" in path:\n"
       << "        label = \"$k_{max}=\" + "
          "path.split(\"kmax=\")[1].split(\"_\")[0] + \"$\"\n"
       << "    ax.loglog(dt, e, marker=\"o\", label=label)\n"
       << "ax.set_xlabel(\"$\\\\Delta t$\")\n"
       << "ax.set_ylabel(\"Numerical error\")\n";
  }
  py << "ax.grid(True, which=\"both\")\n"
     << "ax.legend()\n"
     << "plt.savefig(" << std::quoted(out_path + ".png") << ", dpi=150)\n";

  std::ofstream os(out_path);
  os << py.str();
  return out_path;
}

}  // namespace mdrelax
