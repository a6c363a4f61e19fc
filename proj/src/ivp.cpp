#include "mdrelax/ivp.hpp"

#include <cmath>
#include <limits>

namespace mdrelax {

IVP oscillator() {
  IVP p;
  p.name = "oscillator";
  p.dim = 2;
  p.w0 = Vec(2);
  p.w0 << 1.0, 0.0;
  p.m_max = 3;
  // F1 = (-w2, w1)/r, F2 = -w/r^2, F3 = (w2, -w1)/r^3 with r = |w|^2.
  p.tower = [](int d, const Vec& w) -> Vec {
    const double r = w.squaredNorm();
    Vec out(2);
    switch (d) {
      case 1:
        out << -w[1] / r, w[0] / r;
        return out;
      case 2:
        out = -w / (r * r);
        return out;
      case 3:
        out << w[1], -w[0];
        return out / (r * r * r);
      default:
        throw std::invalid_argument("oscillator tower: d out of range");
    }
  };
  p.eta = [](const Vec& w) { return w.squaredNorm(); };
  p.eta_grad = [](const Vec& w) -> Vec { return 2.0 * w; };
  return p;
}

Vec oscillator_exact(double t) {
  Vec w(2);
  w << std::cos(t), std::sin(t);
  return w;
}

IVP kepler(KeplerFunctional functional) {
  IVP p;
  p.name = "kepler";
  p.dim = 4;
  p.w0 = Vec(4);
  p.w0 << 0.5, 0.0, 0.0, std::sqrt(1.0 / 3.0);
  p.m_max = 3;
  p.tower = [](int d, const Vec& w) -> Vec {
    const double R = w[0] * w[0] + w[1] * w[1];
    if (R == 0.0) throw SingularState("kepler: collision, |q| = 0");
    const double A = std::pow(R, -1.5);   // 1/|q|^3
    const double R5 = std::pow(R, -2.5);  // 1/|q|^5
    const double S = w[0] * w[2] + w[1] * w[3];
    Vec out(4);
    switch (d) {
      case 1:
        out << w[2], w[3], -w[0] * A, -w[1] * A;
        return out;
      case 2:
        out << -w[0] * A, -w[1] * A, -w[2] * A + 3.0 * w[0] * S * R5,
            -w[3] * A + 3.0 * w[1] * S * R5;
        return out;
      case 3: {
        const double V = w[2] * w[2] + w[3] * w[3];
        const double R7 = std::pow(R, -3.5);
        out[0] = -w[2] * A + 3.0 * w[0] * S * R5;
        out[1] = -w[3] * A + 3.0 * w[1] * S * R5;
        out[2] = -2.0 * w[0] / (R * R * R) + 6.0 * w[2] * S * R5 +
                 3.0 * w[0] * V * R5 - 15.0 * w[0] * S * S * R7;
        out[3] = -2.0 * w[1] / (R * R * R) + 6.0 * w[3] * S * R5 +
                 3.0 * w[1] * V * R5 - 15.0 * w[1] * S * S * R7;
        return out;
      }
      default:
        throw std::invalid_argument("kepler tower: d out of range");
    }
  };
  if (functional == KeplerFunctional::angular_momentum) {
    p.eta = [](const Vec& w) { return w[0] * w[3] - w[1] * w[2]; };
    p.eta_grad = [](const Vec& w) -> Vec {
      Vec g(4);
      g << w[3], -w[2], -w[1], w[0];
      return g;
    };
  } else {
    p.eta = [](const Vec& w) {
      const double R = w[0] * w[0] + w[1] * w[1];
      return 0.5 * (w[2] * w[2] + w[3] * w[3]) - 1.0 / std::sqrt(R);
    };
    p.eta_grad = [](const Vec& w) -> Vec {
      const double R = w[0] * w[0] + w[1] * w[1];
      const double A = std::pow(R, -1.5);
      Vec g(4);
      g << w[0] * A, w[1] * A, w[2], w[3];
      return g;
    };
  }
  return p;
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& w,
                double h) {
  const int n = static_cast<int>(w.size());
  if (h <= 0.0)
    h = std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + w.norm());
  Mat J;
  Vec e = w;
  for (int j = 0; j < n; ++j) {
    e[j] = w[j] + h;
    Vec fp = f(e);
    e[j] = w[j] - h;
    Vec fm = f(e);
    e[j] = w[j];
    if (J.size() == 0) J.resize(fp.size(), n);
    J.col(j) = (fp - fm) / (2.0 * h);
  }
  return J;
}

Vec fd_directional(const std::function<Vec(const Vec&)>& f, const Vec& w,
                   const Vec& v, double h) {
  if (h <= 0.0)
    h = std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + w.norm());
  const double vn = v.norm();
  if (vn == 0.0) return Vec::Zero(w.size());
  Vec u = v / vn;
  return (f(w + h * u) - f(w - h * u)) * (vn / (2.0 * h));
}

}  // namespace mdrelax
