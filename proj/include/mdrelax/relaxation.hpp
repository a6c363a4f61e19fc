#pragma once

#include <string>
#include <vector>

#include "mdrelax/hbpc.hpp"
#include "mdrelax/ivp.hpp"
#include "mdrelax/solvers.hpp"
#include "mdrelax/types.hpp"

namespace mdrelax {

struct RelaxedStep {
  double gamma = 1.0;
  Vec w_relaxed;
  double t_next = 0.0;
  double eta_drift = 0.0;
};

/// Projects one step result back onto the eta level set of w_n by solving
/// eta(w_n + gamma d) = eta(w_n) for the scalar gamma. A zero increment is
/// degenerate and reports gamma = 1.
RelaxedStep relax(const IVP& ivp, const Vec& w_n, const Vec& w_next,
                  double t_n, double dt, const RootSettings& settings = {});

struct RunRecord {
  double t = 0.0;
  Vec w;
  double eta = 0.0;
  double gamma = 1.0;
  int newton_iters = 0;
};

struct Trajectory {
  std::vector<RunRecord> records;
};

/// Step failure during integrate(); carries the partial trajectory and the
/// underlying solver error for post-mortem inspection.
struct IntegrationAborted : StepFailed {
  Trajectory partial;
  std::exception_ptr cause;
  IntegrationAborted(const std::string& msg, double t, Trajectory traj,
                     std::exception_ptr c)
      : StepFailed(msg, t), partial(std::move(traj)), cause(std::move(c)) {}
};

/// Fixed nominal step size; relaxed mode advances by gamma*dt per step, so
/// the grid is non-uniform. The final step is clamped to land on T_end
/// (relaxation still applied, so the achieved end time may differ by the
/// relaxation residue). Throws IntegrationAborted when a step fails.
Trajectory integrate(const IVP& ivp, const HBPCConfig& cfg, double dt,
                     double T_end, bool relaxed,
                     const RootSettings& root = {});

/// CSV export, header `t,error,eta,gamma,newton_iters`; the error column is
/// left empty when no reference is supplied.
void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          const std::function<Vec(double)>& reference = {});

}  // namespace mdrelax
