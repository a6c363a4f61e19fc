#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <string>
#include <vector>

#include "mdrelax/types.hpp"

namespace mdrelax {

using Rational = boost::multiprecision::cpp_rational;

/// Multiderivative Butcher tableau with s stages and m derivative levels.
/// Coefficients are kept both as exact rationals and as doubles; the doubles
/// are what the integrator consumes, the rationals back exact validation and
/// the "num/den" fields of the JSON dump.
struct MDTableau {
  std::string name;
  int s = 0;  // stage count
  int m = 0;  // derivative count
  int q = 0;  // declared classical order

  std::vector<double> c;                            // abscissae, size s
  std::vector<std::vector<std::vector<double>>> B;  // [m][s][s]
  std::vector<std::vector<double>> b;               // [m][s]

  std::vector<Rational> c_rat;
  std::vector<std::vector<std::vector<Rational>>> B_rat;
  std::vector<std::vector<Rational>> b_rat;

  bool stiffly_accurate() const;

  // Serialized JSON document as specified for `tableau dump`.
  std::string to_json() const;
  static MDTableau from_json(const std::string& doc);
};

/// Builds the s-stage, m-derivative tableau whose row l makes the Hermite
/// quadrature on [0, c_l] with derivative data at all nodes exact for
/// polynomials of degree <= m*s - 1. Row systems are solved in exact
/// rational arithmetic. The update weights b reuse row s when c_s = 1,
/// otherwise they solve the same system with upper limit 1.
MDTableau hermite_birkhoff_tableau(const std::vector<Rational>& nodes, int m);

/// Double-node convenience overload; nodes are snapped to the nearest
/// rational with denominator <= 10^6 before the exact construction.
MDTableau hermite_birkhoff_tableau(const std::vector<double>& nodes, int m);

/// Named schemes: "HB-I2DRK6-3s", "HB-I2DRK8-4s", "HB-I3DRK6-2s".
MDTableau builtin(const std::string& name);

/// Largest k such that every row quadrature (and the b-row on [0,1]) is
/// exact for all monomials of degree <= k-1, to within 1e-12.
int verify_quadrature_order(const MDTableau& t);

}  // namespace mdrelax
