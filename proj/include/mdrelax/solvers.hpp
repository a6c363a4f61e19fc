#pragma once

#include <cmath>
#include <functional>

#include "mdrelax/types.hpp"

namespace mdrelax {

enum class JacobianMode { finite_difference, analytic };

struct NewtonSettings {
  double tol = 1e-14;   // residual Euclidean norm
  int max_iter = 1000;
  double lambda_min = std::pow(2.0, -30);  // damping underflow limit
  JacobianMode jacobian_mode = JacobianMode::finite_difference;
  // used only when jacobian_mode == analytic
  std::function<Mat(const Vec&)> jacobian;
};

struct NewtonResult {
  Vec solution;
  int iterations = 0;
};

/// Damped Newton with step halving and dense LU. Throws NewtonDiverged
/// (carrying the last iterate) or SingularJacobian.
NewtonResult damped_newton(const std::function<Vec(const Vec&)>& residual,
                           const Vec& x0, const NewtonSettings& settings);

struct RootSettings {
  double tol = 1e-14;  // |g(gamma)|
  int max_iter = 100;
  double gamma_lo = 0.5;
  double gamma_hi = 1.5;
  double gamma_min = 0.1;
};

/// Root of g near 1: Newton from gamma = 1, with bisection fallback on the
/// tightest sign-change subinterval of [gamma_lo, gamma_hi] closest to 1.
/// Throws RelaxationRootNotFound when no admissible root exists there.
double solve_gamma(const std::function<double(double)>& g,
                   const std::function<double(double)>& g_prime,
                   const RootSettings& settings = {});

}  // namespace mdrelax
