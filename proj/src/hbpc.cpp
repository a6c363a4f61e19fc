#include "mdrelax/hbpc.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <random>

namespace mdrelax {

namespace {

// sum_{d=1}^m (-1)^{d-1} theta^d / d! * F_d(w)
Vec taylor_sum(const IVP& ivp, const Vec& w, double theta, int m) {
  Vec acc = Vec::Zero(w.size());
  double coeff = 1.0;
  for (int d = 1; d <= m; ++d) {
    coeff *= (d == 1) ? theta : -theta / d;
    acc += coeff * ivp.tower(d, w);
  }
  return acc;
}

// same sum over cached towers of stage l
Vec taylor_sum_cached(const StageBlock& block, int l, double theta, int m) {
  Vec acc = Vec::Zero(block.stages[l].size());
  double coeff = 1.0;
  for (int d = 1; d <= m; ++d) {
    coeff *= (d == 1) ? theta : -theta / d;
    acc += coeff * block.towers[d - 1][l];
  }
  return acc;
}

// Explicit RK4 substep integration of w' = Phi(w); used only to seed Newton
// with a state close to the stage solution when the warm start fails.
Vec rk4_guess(const IVP& ivp, const Vec& w_n, double horizon) {
  const int nsub = 64;
  const double h = horizon / nsub;
  Vec w = w_n;
  for (int i = 0; i < nsub; ++i) {
    Vec k1 = ivp.tower(1, w);
    Vec k2 = ivp.tower(1, w + 0.5 * h * k1);
    Vec k3 = ivp.tower(1, w + 0.5 * h * k2);
    Vec k4 = ivp.tower(1, w + h * k3);
    w += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return w;
}

// Undamped Newton with a fixed iteration budget. On strongly nonlinear stage
// equations (eccentric Kepler steps) the backtracking line search can stall
// in a local minimum of the residual norm that is not a root, while the
// plain iteration, free to increase the residual transiently, still lands on
// a root. Used only as a fallback after damped_newton has given up.
template <typename Residual>
NewtonResult plain_newton(const Residual& residual, const Vec& x0,
                          const NewtonSettings& settings) {
  Vec x = x0;
  for (int iter = 0; iter < settings.max_iter; ++iter) {
    Vec r = residual(x);
    if (!r.allFinite())
      throw NewtonDiverged("plain newton: non-finite residual", x,
                           std::numeric_limits<double>::quiet_NaN(), iter);
    const double rn = r.norm();
    if (rn <= settings.tol) return {x, iter};
    Mat J = fd_jacobian([&](const Vec& y) { return residual(y); }, x);
    Eigen::FullPivLU<Mat> lu(J);
    if (!lu.isInvertible())
      throw NewtonDiverged("plain newton: singular Jacobian", x, rn, iter);
    x += lu.solve(-r);
  }
  throw NewtonDiverged("plain newton: max iterations", x,
                       residual(x).norm(), settings.max_iter);
}

// Global homotopy H(x, sigma) = F(x) - (1 - sigma) F(x0): at sigma = 0 the
// root is exactly x0, at sigma = 1 it is a root of F. Tracking sigma from 0
// to 1 with adaptive increments follows the root branch connected to x0,
// which keeps the solve on the solution the surrounding iteration expects
// even when F has several roots and Newton basins are chaotic. Each leg is
// accepted only when the iterate moved by no more than a few times the
// tangent Newton step for that leg; a larger move means Newton jumped to a
// different branch, so the leg is retried with a smaller increment. With the
// initial increment of 1 a well-behaved solve costs one damped Newton run
// plus one Jacobian, so the benign path stays cheap.
template <typename Residual>
NewtonResult tracked_newton(const Residual& residual, const Vec& x0,
                            const NewtonSettings& settings) {
  const Vec r0 = residual(x0);
  if (!r0.allFinite())
    throw NewtonDiverged("tracked newton: non-finite residual at start", x0,
                         std::numeric_limits<double>::quiet_NaN(), 0);
  if (r0.norm() <= settings.tol) return {x0, 0};

  // Failing legs are cheap to detect; a converging leg needs few iterations.
  NewtonSettings leg_settings = settings;
  leg_settings.max_iter = std::min(settings.max_iter, 100);

  Vec x = x0;
  double sigma = 0.0, dsig = 1.0;
  int iters = 0;
  for (int legs = 0; legs < 200 && sigma < 1.0; ++legs) {
    const double target = std::min(1.0, sigma + dsig);
    auto res_leg = [&](const Vec& y) -> Vec {
      return residual(y) - (1.0 - target) * r0;
    };
    bool accepted = false;
    try {
      Vec r_cur = res_leg(x);
      Mat J = fd_jacobian([&](const Vec& y) { return res_leg(y); }, x);
      Eigen::FullPivLU<Mat> lu(J);
      if (lu.isInvertible()) {
        const double step0 = lu.solve(r_cur).norm();
        auto r = damped_newton(res_leg, x, leg_settings);
        iters += r.iterations + 1;
        const double move = (r.solution - x).norm();
        if (move <= 4.0 * step0 + 1e-9 * (1.0 + x.norm())) {
          x = r.solution;
          sigma = target;
          dsig = std::min(1.0, 2.0 * dsig);
          accepted = true;
        }
      }
    } catch (const NewtonDiverged&) {
    } catch (const SingularJacobian&) {
    }
    if (!accepted) {
      dsig *= 0.5;
      if (dsig < 1e-3)
        throw NewtonDiverged("tracked newton: branch fold", x,
                             residual(x).norm(), iters);
    }
  }
  if (sigma < 1.0)
    throw NewtonDiverged("tracked newton: leg budget exhausted", x,
                         residual(x).norm(), iters);
  return {x, iters};
}

// Damped Newton can stall in a local residual minimum even when roots exist,
// and when several roots exist the first one found is not necessarily the
// meaningful one. After the damped attempts fail, a homotopy from the warm
// start (and then from the anchor) tracks the connected root branch. Only if
// the branch folds do undamped restarts from the guesses and from seeded
// perturbations of the anchor collect the reachable roots, and the one
// closest to the anchor (a cheap explicit approximation of the expected
// solution) is returned. Throws NewtonDiverged only when every attempt
// fails.
template <typename Residual>
NewtonResult robust_newton(const Residual& residual,
                           std::vector<Vec> guesses, const Vec& anchor,
                           const NewtonSettings& settings,
                           unsigned seed = 0) {
  std::mt19937 rng(0x9e3779b9u ^ (seed * 2654435761u));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  if (seed != 0) {
    // Branch selection: a small deterministic jitter of the starting points.
    // Where the equations are well behaved this converges to the same root;
    // where the Newton flow is chaotic it reaches a different branch.
    for (Vec& g : guesses) {
      const double scale = 0.05 * (1.0 + g.norm());
      for (int i = 0; i < g.size(); ++i) g[i] += scale * u(rng);
    }
  }

  NewtonDiverged last("", Vec(), 0.0, 0);
  bool found = false;
  NewtonResult best{Vec(), 0};
  double best_dist = std::numeric_limits<double>::infinity();
  int iters_total = 0;
  auto stash = [&](const NewtonResult& res) {
    iters_total += res.iterations;
    const double dist = (res.solution - anchor).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = res;
      found = true;
    }
    return dist;
  };
  // A trustworthy root lies within a small radius of the anchor; anything
  // farther out is a different branch of the stage equation and is kept only
  // as a candidate while the remaining starts are tried. Retry seeds exist
  // precisely because the anchored branch failed downstream, so for them the
  // first converged root is accepted to keep the retries diverse.
  const double radius = (seed == 0)
                            ? 0.02 * (1.0 + anchor.norm())
                            : std::numeric_limits<double>::infinity();
  for (const Vec& g : guesses) {
    try {
      auto res = tracked_newton(residual, g, settings);
      if (stash(res) <= radius) {
        best.iterations = iters_total;
        return best;
      }
    } catch (const NewtonDiverged& e) {
      last = e;
    }
  }
  try {
    auto res = tracked_newton(residual, anchor, settings);
    if (stash(res) <= radius) {
      best.iterations = iters_total;
      return best;
    }
  } catch (const NewtonDiverged& e) {
    last = e;
  }

  std::vector<Vec> starts = guesses;
  starts.push_back(anchor);
  const double scale = 0.5 * (1.0 + anchor.norm());
  for (int trial = 0; trial < 8; ++trial) {
    Vec g = anchor;
    for (int i = 0; i < g.size(); ++i) g[i] += scale * u(rng);
    starts.push_back(g);
  }
  for (const Vec& g : starts) {
    try {
      stash(plain_newton(residual, g, settings));
    } catch (const NewtonDiverged& e) {
      iters_total += settings.max_iter;
      last = e;
    }
  }
  if (found) {
    best.iterations = iters_total;
    return best;
  }
  throw last;
}

// Solves the implicit Taylor stage equation, starting from w_n, with an
// explicit Taylor guess and theta continuation as fallbacks before the
// perturbed restarts.
NewtonResult solve_taylor_stage(const IVP& ivp, const Vec& w_n, double theta,
                                int m, const NewtonSettings& settings,
                                unsigned seed) {
  auto make_residual = [&](double th) {
    return [&ivp, &w_n, th, m](const Vec& w) -> Vec {
      Vec acc = w - w_n;
      double coeff = 1.0;
      for (int d = 1; d <= m; ++d) {
        coeff *= (d == 1) ? th : -th / d;
        acc -= coeff * ivp.tower(d, w);
      }
      return acc;
    };
  };
  auto residual = make_residual(theta);

  // explicit Taylor step as a secondary guess
  Vec guess = w_n;
  double coeff = 1.0;
  for (int d = 1; d <= m; ++d) {
    coeff *= theta / d;
    guess += coeff * ivp.tower(d, w_n);
  }
  Vec anchor = w_n;
  try {
    anchor = rk4_guess(ivp, w_n, theta);
  } catch (const SingularState&) {
  }
  return robust_newton(residual, {w_n, guess}, anchor, settings, seed);
}

void fill_towers(const IVP& ivp, StageBlock& block, int m) {
  const int s = static_cast<int>(block.stages.size());
  block.towers.assign(m, std::vector<Vec>(s));
  for (int d = 1; d <= m; ++d)
    for (int l = 0; l < s; ++l)
      block.towers[d - 1][l] = ivp.tower(d, block.stages[l]);
}

}  // namespace

StageBlock predict(const IVP& ivp, const Vec& w_n, double dt,
                   const HBPCConfig& cfg, StepDiagnostics* diag) {
  const MDTableau& t = cfg.tableau;
  StageBlock block;
  block.k = 0;
  block.stages.assign(t.s, w_n);

  std::exception_ptr err;
  int iters_total = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : iters_total)
  for (int l = 0; l < t.s; ++l) {
    if (t.c[l] == 0.0) continue;  // Eq. trivially gives w^n
    const double theta = t.c[l] * dt;
    const unsigned seed =
        cfg.branch_seed == 0
            ? 0u
            : static_cast<unsigned>(cfg.branch_seed) * 1000003u + l + 1;
    try {
      auto res = solve_taylor_stage(ivp, w_n, theta, t.m, cfg.newton, seed);
      block.stages[l] = res.solution;
      iters_total += res.iterations;
    } catch (const NewtonDiverged&) {
#pragma omp critical
      if (!err)
        err = std::make_exception_ptr(
            PredictorFailed("predictor stage " + std::to_string(l + 1) +
                                " did not converge",
                            l + 1));
    }
  }
  if (err) std::rethrow_exception(err);
  if (diag) diag->newton_predict += iters_total;
  fill_towers(ivp, block, t.m);
  return block;
}

Vec quadrature(const StageBlock& block, double dt, const MDTableau& tableau,
               int l) {
  Vec acc = Vec::Zero(block.stages[0].size());
  double dtp = 1.0;
  for (int d = 1; d <= tableau.m; ++d) {
    dtp *= dt;
    for (int j = 0; j < tableau.s; ++j) {
      const double w = tableau.B[d - 1][l][j];
      if (w != 0.0) acc += (dtp * w) * block.towers[d - 1][j];
    }
  }
  return acc;
}

StageBlock correct(const IVP& ivp, const Vec& w_n, double dt,
                   const HBPCConfig& cfg, const StageBlock& block_k,
                   StepDiagnostics* diag) {
  const MDTableau& t = cfg.tableau;
  StageBlock next;
  next.k = block_k.k + 1;
  next.stages.assign(t.s, w_n);
  next.towers.assign(t.m, std::vector<Vec>(t.s));

  const bool serial = cfg.quadrature_source == QuadratureSource::serial_sweep;
  int iters_total = 0;
  std::exception_ptr err;

  auto solve_stage = [&](int l) {
    const double theta =
        cfg.corrector_scaling == CorrectorScaling::global ? dt : t.c[l] * dt;
    // quadrature over iterate k, or over the mixed sweep state
    Vec I_l;
    if (!serial) {
      I_l = quadrature(block_k, dt, t, l);
    } else {
      I_l = Vec::Zero(w_n.size());
      double dtp = 1.0;
      for (int d = 1; d <= t.m; ++d) {
        dtp *= dt;
        for (int j = 0; j < t.s; ++j) {
          const double w = t.B[d - 1][l][j];
          if (w == 0.0) continue;
          const Vec& f = (j < l) ? next.towers[d - 1][j] : block_k.towers[d - 1][j];
          I_l += (dtp * w) * f;
        }
      }
    }
    const Vec rhs = w_n - taylor_sum_cached(block_k, l, theta, t.m) + I_l;
    auto residual = [&](const Vec& w) -> Vec {
      return w - taylor_sum(ivp, w, theta, t.m) - rhs;
    };
    Vec anchor = w_n;
    try {
      anchor = rk4_guess(ivp, w_n, t.c[l] * dt);
    } catch (const SingularState&) {
    }
    const unsigned seed =
        cfg.branch_seed == 0
            ? 0u
            : static_cast<unsigned>(cfg.branch_seed) * 1000003u +
                  (next.k * 31 + l + 1);
    auto res = robust_newton(residual, {block_k.stages[l], w_n}, anchor,
                             cfg.newton, seed);
    next.stages[l] = res.solution;
    for (int d = 1; d <= t.m; ++d)
      next.towers[d - 1][l] = ivp.tower(d, next.stages[l]);
    return res.iterations;
  };

  if (serial) {
    for (int l = 0; l < t.s; ++l) {
      try {
        iters_total += solve_stage(l);
      } catch (const NewtonDiverged&) {
        throw CorrectorFailed("corrector stage " + std::to_string(l + 1) +
                                  " at iterate " + std::to_string(next.k) +
                                  " did not converge",
                              l + 1, next.k);
      }
    }
  } else {
#pragma omp parallel for schedule(dynamic) reduction(+ : iters_total)
    for (int l = 0; l < t.s; ++l) {
      try {
        iters_total += solve_stage(l);
      } catch (const NewtonDiverged&) {
#pragma omp critical
        if (!err)
          err = std::make_exception_ptr(CorrectorFailed(
              "corrector stage " + std::to_string(l + 1) + " at iterate " +
                  std::to_string(next.k) + " did not converge",
              l + 1, next.k));
      }
    }
    if (err) std::rethrow_exception(err);
  }
  if (diag) diag->newton_correct += iters_total;
  return next;
}

Vec update(const IVP& ivp, const Vec& w_n, double dt, const HBPCConfig& cfg,
           const StageBlock& block_last, const StageBlock& block_prev) {
  (void)ivp;
  const MDTableau& t = cfg.tableau;
  if (t.stiffly_accurate()) return block_last.stages[t.s - 1];

  Vec w = w_n;
  // b-weighted quadrature over the previous iterate
  double dtp = 1.0;
  for (int d = 1; d <= t.m; ++d) {
    dtp *= dt;
    for (int j = 0; j < t.s; ++j) {
      const double bw = t.b[d - 1][j];
      if (bw != 0.0) w += (dtp * bw) * block_prev.towers[d - 1][j];
    }
  }
  // Taylor difference over the last stage; dropped when both blocks are the
  // same iterate (kmax = 0 runs the update on the predictor block alone).
  if (block_last.k != block_prev.k) {
    const int l = t.s - 1;
    w += taylor_sum_cached(block_last, l, dt, t.m) -
         taylor_sum_cached(block_prev, l, dt, t.m);
  }
  return w;
}

Vec hbpc_step(const IVP& ivp, const Vec& w_n, double t_n, double dt,
              const HBPCConfig& cfg, StepDiagnostics* diag) {
  (void)t_n;
  StageBlock prev = predict(ivp, w_n, dt, cfg, diag);
  if (cfg.kmax == 0) return update(ivp, w_n, dt, cfg, prev, prev);
  StageBlock last = correct(ivp, w_n, dt, cfg, prev, diag);
  for (int k = 1; k < cfg.kmax; ++k) {
    prev = std::move(last);
    last = correct(ivp, w_n, dt, cfg, prev, diag);
  }
  return update(ivp, w_n, dt, cfg, last, prev);
}

Vec background_rk_step(const IVP& ivp, const Vec& w_n, double dt,
                       const MDTableau& tableau,
                       const NewtonSettings& newton) {
  const int s = tableau.s;
  const int n = static_cast<int>(w_n.size());

  auto residual = [&](const Vec& W) -> Vec {
    // towers of all stacked stages
    std::vector<std::vector<Vec>> F(tableau.m, std::vector<Vec>(s));
    for (int j = 0; j < s; ++j) {
      Vec wj = W.segment(j * n, n);
      for (int d = 1; d <= tableau.m; ++d) F[d - 1][j] = ivp.tower(d, wj);
    }
    Vec R(s * n);
    for (int l = 0; l < s; ++l) {
      Vec acc = W.segment(l * n, n) - w_n;
      double dtp = 1.0;
      for (int d = 1; d <= tableau.m; ++d) {
        dtp *= dt;
        for (int j = 0; j < s; ++j) {
          const double bw = tableau.B[d - 1][l][j];
          if (bw != 0.0) acc -= (dtp * bw) * F[d - 1][j];
        }
      }
      R.segment(l * n, n) = acc;
    }
    return R;
  };

  Vec W0(s * n);
  for (int j = 0; j < s; ++j) W0.segment(j * n, n) = w_n;
  Vec W;
  try {
    W = damped_newton(residual, W0, newton).solution;
  } catch (const NewtonDiverged& e) {
    throw BackgroundSolveFailed(std::string("background RK solve failed: ") +
                                e.what());
  }

  Vec w = w_n;
  double dtp = 1.0;
  for (int d = 1; d <= tableau.m; ++d) {
    dtp *= dt;
    for (int j = 0; j < s; ++j) {
      const double bw = tableau.b[d - 1][j];
      if (bw != 0.0) w += (dtp * bw) * ivp.tower(d, W.segment(j * n, n));
    }
  }
  return w;
}

}  // namespace mdrelax
