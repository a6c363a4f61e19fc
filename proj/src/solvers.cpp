#include "mdrelax/solvers.hpp"

#include "mdrelax/ivp.hpp"

#include <cmath>
#include <limits>

namespace mdrelax {

NewtonResult damped_newton(const std::function<Vec(const Vec&)>& residual,
                           const Vec& x0, const NewtonSettings& settings) {
  Vec x = x0;
  Vec r = residual(x);
  double rn = r.norm();
  for (int iter = 0; iter < settings.max_iter; ++iter) {
    if (rn <= settings.tol) return {x, iter};
    Mat J = (settings.jacobian_mode == JacobianMode::analytic &&
             settings.jacobian)
                ? settings.jacobian(x)
                : fd_jacobian(residual, x);
    Eigen::FullPivLU<Mat> lu(J);
    if (!lu.isInvertible())
      throw SingularJacobian("damped_newton: singular Jacobian");
    Vec dx = lu.solve(-r);

    double lambda = 1.0;
    while (true) {
      Vec xt = x + lambda * dx;
      Vec rt = residual(xt);
      double rtn = rt.norm();
      if (rtn <= settings.tol) return {xt, iter + 1};
      if (!rt.allFinite())
        throw NewtonDiverged("damped_newton: non-finite residual", x, rn,
                             iter);
      if (rtn < rn) {
        x = xt;
        r = rt;
        rn = rtn;
        break;
      }
      lambda *= 0.5;
      if (lambda < settings.lambda_min)
        throw NewtonDiverged("damped_newton: step underflow", x, rn, iter);
    }
  }
  throw NewtonDiverged("damped_newton: max iterations", x, rn,
                       settings.max_iter);
}

namespace {

// A few extra Newton steps while |g| still improves; the integrator-level
// eta drift accumulates over thousands of steps, so the root is driven to
// the rounding floor, not just to tol.
double polish(const std::function<double(double)>& g,
              const std::function<double(double)>& g_prime, double gamma,
              double gval, double lo, double hi) {
  for (int i = 0; i < 10; ++i) {
    double gp = g_prime(gamma);
    if (gp == 0.0) break;
    double cand = gamma - gval / gp;
    // Near-degenerate updates make g flat and noisy; a polish step that
    // leaves the bracket is following that noise, not the root.
    if (cand < lo || cand > hi) break;
    double gc = g(cand);
    if (std::abs(gc) < std::abs(gval)) {
      gamma = cand;
      gval = gc;
    } else {
      break;
    }
  }
  return gamma;
}

}  // namespace

double solve_gamma(const std::function<double(double)>& g,
                   const std::function<double(double)>& g_prime,
                   const RootSettings& settings) {
  const double lo = settings.gamma_lo, hi = settings.gamma_hi;

  // Plain Newton from 1 while it stays inside the bracket.
  double gamma = 1.0;
  double gval = g(gamma);
  for (int iter = 0; iter < settings.max_iter; ++iter) {
    if (std::abs(gval) <= settings.tol) {
      gamma = polish(g, g_prime, gamma, gval, lo, hi);
      if (gamma <= settings.gamma_min)
        throw RelaxationRootNotFound("solve_gamma: root below gamma_min");
      return gamma;
    }
    double gp = g_prime(gamma);
    if (gp == 0.0) break;
    double next = gamma - gval / gp;
    if (next < lo || next > hi) break;
    gamma = next;
    gval = g(gamma);
  }

  // Bracketed fallback: scan for the sign change nearest 1, then
  // Newton with bisection safeguard on that subinterval.
  const int nscan = 64;
  double best_a = 0.0, best_b = 0.0;
  double best_dist = std::numeric_limits<double>::infinity();
  double ga = g(lo);
  double a = lo;
  for (int i = 1; i <= nscan; ++i) {
    double b = lo + (hi - lo) * i / nscan;
    double gb = g(b);
    if ((ga < 0.0 && gb > 0.0) || (ga > 0.0 && gb < 0.0) || ga == 0.0) {
      double mid = 0.5 * (a + b);
      if (std::abs(mid - 1.0) < best_dist) {
        best_dist = std::abs(mid - 1.0);
        best_a = a;
        best_b = b;
      }
    }
    a = b;
    ga = gb;
  }
  if (std::abs(ga) <= settings.tol && std::abs(hi - 1.0) < best_dist) {
    best_a = best_b = hi;
    best_dist = std::abs(hi - 1.0);
  }
  if (!std::isfinite(best_dist))
    throw RelaxationRootNotFound("solve_gamma: no sign change in bracket");

  double xl = best_a, xh = best_b;
  double gl = g(xl);
  if (gl > 0.0) std::swap(xl, xh);
  gamma = 0.5 * (xl + xh);
  gval = g(gamma);
  for (int iter = 0; iter < settings.max_iter; ++iter) {
    if (std::abs(gval) <= settings.tol) {
      gamma = polish(g, g_prime, gamma, gval, lo, hi);
      if (gamma <= settings.gamma_min)
        throw RelaxationRootNotFound("solve_gamma: root below gamma_min");
      return gamma;
    }
    double gp = g_prime(gamma);
    double next = (gp != 0.0) ? gamma - gval / gp : gamma;
    if (gp == 0.0 || (next - xl) * (next - xh) > 0.0)
      next = 0.5 * (xl + xh);  // bisect
    gamma = next;
    gval = g(gamma);
    if (gval < 0.0)
      xl = gamma;
    else
      xh = gamma;
    if (std::abs(xh - xl) < 1e-16 && std::abs(gval) > settings.tol)
      throw RelaxationRootNotFound("solve_gamma: bracket collapsed");
  }
  throw RelaxationRootNotFound("solve_gamma: max iterations");
}

}  // namespace mdrelax
