#pragma once

#include <functional>
#include <string>

#include "mdrelax/types.hpp"

namespace mdrelax {

/// An autonomous initial value problem w' = F_1(w) together with its
/// derivative tower F_{d+1} = J_{F_d} F_1 and a conserved functional eta.
struct IVP {
  std::string name;
  int dim = 0;
  Vec w0;
  int m_max = 0;
  std::function<Vec(int d, const Vec&)> tower;  // d in 1..m_max
  std::function<double(const Vec&)> eta;
  std::function<Vec(const Vec&)> eta_grad;
};

/// Nonlinear oscillator: Phi(w) = (-w2, w1) / |w|^2, eta = |w|^2.
IVP oscillator();

/// Exact oscillator solution (cos t, sin t) for w0 = (1, 0).
Vec oscillator_exact(double t);

enum class KeplerFunctional { angular_momentum, hamiltonian };

/// Planar Kepler problem, w = (x, y, vx, vy),
/// w0 = (1/2, 0, 0, sqrt(1/3)), eta = angular momentum by default.
IVP kepler(KeplerFunctional functional = KeplerFunctional::angular_momentum);

/// Central-difference Jacobian of f at w.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& w,
                double h = 0.0);

/// Directional derivative of f at w along v by central differences.
Vec fd_directional(const std::function<Vec(const Vec&)>& f, const Vec& w,
                   const Vec& v, double h = 0.0);

}  // namespace mdrelax
