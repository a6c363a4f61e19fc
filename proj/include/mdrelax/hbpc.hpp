#pragma once

#include <vector>

#include "mdrelax/ivp.hpp"
#include "mdrelax/solvers.hpp"
#include "mdrelax/tableau.hpp"
#include "mdrelax/types.hpp"

namespace mdrelax {

enum class CorrectorScaling { global, per_stage };
enum class QuadratureSource { iterate_k, serial_sweep };

struct HBPCConfig {
  MDTableau tableau;
  int kmax = 0;
  CorrectorScaling corrector_scaling = CorrectorScaling::global;
  QuadratureSource quadrature_source = QuadratureSource::iterate_k;
  NewtonSettings newton;
  // Selects among root branches of the stage equations when several exist
  // (strongly nonlinear steps). 0 is the plain warm start; nonzero values
  // deterministically jitter the Newton starting points. integrate() retries
  // a failed step with nonzero seeds before giving up.
  int branch_seed = 0;
};

/// One predictor/corrector iterate: the s stage vectors plus their cached
/// derivative towers, towers[d-1][l] = F_d(stages[l]).
struct StageBlock {
  int k = 0;
  std::vector<Vec> stages;
  std::vector<std::vector<Vec>> towers;  // [m][s]
};

struct StepDiagnostics {
  int newton_predict = 0;
  int newton_correct = 0;
};

StageBlock predict(const IVP& ivp, const Vec& w_n, double dt,
                   const HBPCConfig& cfg, StepDiagnostics* diag = nullptr);

/// Quadrature term I_l from the cached towers of one iterate.
Vec quadrature(const StageBlock& block, double dt, const MDTableau& tableau,
               int l);

StageBlock correct(const IVP& ivp, const Vec& w_n, double dt,
                   const HBPCConfig& cfg, const StageBlock& block_k,
                   StepDiagnostics* diag = nullptr);

Vec update(const IVP& ivp, const Vec& w_n, double dt, const HBPCConfig& cfg,
           const StageBlock& block_last, const StageBlock& block_prev);

Vec hbpc_step(const IVP& ivp, const Vec& w_n, double t_n, double dt,
              const HBPCConfig& cfg, StepDiagnostics* diag = nullptr);

/// Fully coupled solve of the background multiderivative RK equations.
/// Test oracle and reference generator only.
Vec background_rk_step(const IVP& ivp, const Vec& w_n, double dt,
                       const MDTableau& tableau, const NewtonSettings& newton);

}  // namespace mdrelax
