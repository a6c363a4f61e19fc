#include "mdrelax/tableau.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>

namespace mdrelax {

namespace {

// (d/dtau)^r tau^k evaluated at x, exactly.
Rational monomial_derivative(int k, int r, const Rational& x) {
  if (r > k) return 0;
  Rational coeff = 1;
  for (int i = 0; i < r; ++i) coeff *= (k - i);
  Rational p = 1;
  for (int i = 0; i < k - r; ++i) p *= x;
  return coeff * p;
}

Rational pow_rat(const Rational& x, int k) {
  Rational p = 1;
  for (int i = 0; i < k; ++i) p *= x;
  return p;
}

// Gaussian elimination with pivoting over the rationals.
std::vector<Rational> solve_rational(std::vector<std::vector<Rational>> A,
                                     std::vector<Rational> rhs) {
  const int n = static_cast<int>(rhs.size());
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    for (int r = col; r < n; ++r) {
      if (A[r][col] != 0) {
        piv = r;
        break;
      }
    }
    if (piv < 0) throw SingularSystem("singular Hermite quadrature system");
    std::swap(A[col], A[piv]);
    std::swap(rhs[col], rhs[piv]);
    for (int r = col + 1; r < n; ++r) {
      if (A[r][col] == 0) continue;
      Rational f = A[r][col] / A[col][col];
      for (int cc = col; cc < n; ++cc) A[r][cc] -= f * A[col][cc];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<Rational> x(n);
  for (int r = n - 1; r >= 0; --r) {
    Rational acc = rhs[r];
    for (int cc = r + 1; cc < n; ++cc) acc -= A[r][cc] * x[cc];
    x[r] = acc / A[r][r];
  }
  return x;
}

// Weights making  integral_0^upper g  =  sum_{d,j} x_{dj} g^{(d-1)}(c_j)
// exact for monomials up to degree m*s-1. Unknown (d,j) has flat index
// (d-1)*s + j.
std::vector<Rational> hermite_weights(const std::vector<Rational>& nodes,
                                      int m, const Rational& upper) {
  const int s = static_cast<int>(nodes.size());
  const int n = m * s;
  std::vector<std::vector<Rational>> A(n, std::vector<Rational>(n));
  std::vector<Rational> rhs(n);
  for (int k = 0; k < n; ++k) {
    rhs[k] = pow_rat(upper, k + 1) / (k + 1);
    for (int d = 1; d <= m; ++d)
      for (int j = 0; j < s; ++j)
        A[k][(d - 1) * s + j] = monomial_derivative(k, d - 1, nodes[j]);
  }
  return solve_rational(std::move(A), std::move(rhs));
}

Rational best_rational(double x, long long max_den) {
  // continued-fraction convergents
  if (x == 0.0) return 0;
  bool neg = x < 0;
  double v = std::abs(x);
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double frac = v;
  for (int it = 0; it < 64; ++it) {
    long long a = static_cast<long long>(std::floor(frac));
    long long p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    double rem = frac - static_cast<double>(a);
    if (rem < 1e-15) break;
    frac = 1.0 / rem;
  }
  Rational r(p1, q1);
  return neg ? -r : r;
}

std::string rat_str(const Rational& r) {
  std::ostringstream os;
  os << boost::multiprecision::numerator(r);
  if (boost::multiprecision::denominator(r) != 1)
    os << "/" << boost::multiprecision::denominator(r);
  return os.str();
}

Rational parse_rat(const std::string& s) {
  auto slash = s.find('/');
  using boost::multiprecision::cpp_int;
  if (slash == std::string::npos) return Rational(cpp_int(s));
  return Rational(cpp_int(s.substr(0, slash)), cpp_int(s.substr(slash + 1)));
}

}  // namespace

bool MDTableau::stiffly_accurate() const {
  for (int d = 0; d < m; ++d)
    for (int j = 0; j < s; ++j)
      if (b_rat[d][j] != B_rat[d][s - 1][j]) return false;
  return true;
}

MDTableau hermite_birkhoff_tableau(const std::vector<Rational>& nodes,
                                   int m) {
  const int s = static_cast<int>(nodes.size());
  if (s < 1 || m < 1) throw SingularSystem("need at least one node and m >= 1");
  if (m * s > 12) throw ConditioningError("m*s > 12");
  for (int i = 0; i + 1 < s; ++i)
    if (!(nodes[i] < nodes[i + 1]))
      throw SingularSystem("nodes must be distinct and ascending");

  MDTableau t;
  t.s = s;
  t.m = m;
  t.q = m * s;
  t.c_rat = nodes;
  t.B_rat.assign(m, std::vector<std::vector<Rational>>(
                        s, std::vector<Rational>(s, Rational(0))));
  t.b_rat.assign(m, std::vector<Rational>(s, Rational(0)));

  for (int l = 0; l < s; ++l) {
    if (nodes[l] == 0) continue;  // row of zeros integrates over [0,0]
    auto w = hermite_weights(nodes, m, nodes[l]);
    for (int d = 0; d < m; ++d)
      for (int j = 0; j < s; ++j) t.B_rat[d][l][j] = w[d * s + j];
  }
  if (nodes[s - 1] == 1) {
    for (int d = 0; d < m; ++d) t.b_rat[d] = t.B_rat[d][s - 1];
  } else {
    auto w = hermite_weights(nodes, m, Rational(1));
    for (int d = 0; d < m; ++d)
      for (int j = 0; j < s; ++j) t.b_rat[d][j] = w[d * s + j];
  }

  t.c.resize(s);
  for (int l = 0; l < s; ++l) t.c[l] = static_cast<double>(nodes[l]);
  t.B.assign(m, std::vector<std::vector<double>>(s, std::vector<double>(s)));
  t.b.assign(m, std::vector<double>(s));
  for (int d = 0; d < m; ++d)
    for (int l = 0; l < s; ++l) {
      t.b[d][l] = static_cast<double>(t.b_rat[d][l]);
      for (int j = 0; j < s; ++j)
        t.B[d][l][j] = static_cast<double>(t.B_rat[d][l][j]);
    }

  std::ostringstream nm;
  nm << "HB-" << s << "s-" << m << "d";
  t.name = nm.str();
  return t;
}

MDTableau hermite_birkhoff_tableau(const std::vector<double>& nodes, int m) {
  std::vector<Rational> rnodes;
  rnodes.reserve(nodes.size());
  for (double x : nodes) rnodes.push_back(best_rational(x, 1000000));
  return hermite_birkhoff_tableau(rnodes, m);
}

MDTableau builtin(const std::string& name) {
  MDTableau t;
  if (name == "HB-I2DRK6-3s") {
    t = hermite_birkhoff_tableau(
        std::vector<Rational>{0, Rational(1, 2), 1}, 2);
  } else if (name == "HB-I2DRK8-4s") {
    t = hermite_birkhoff_tableau(
        std::vector<Rational>{0, Rational(1, 3), Rational(2, 3), 1}, 2);
  } else if (name == "HB-I3DRK6-2s") {
    t = hermite_birkhoff_tableau(std::vector<Rational>{0, 1}, 3);
  } else {
    throw UnknownTableau("unknown tableau: " + name);
  }
  t.name = name;
  return t;
}

int verify_quadrature_order(const MDTableau& t) {
  const double tol = 1e-12;
  const int cap = 2 * t.m * t.s + 4;
  auto row_exact = [&](int deg, const std::vector<std::vector<double>>& rowsB,
                       int l, double upper) {
    double exact = std::pow(upper, deg + 1) / (deg + 1);
    double sum = 0.0;
    for (int d = 1; d <= t.m; ++d) {
      double fall = 1.0;
      for (int i = 0; i < d - 1; ++i) fall *= (deg - i);
      if (deg - (d - 1) < 0) continue;
      for (int j = 0; j < t.s; ++j)
        sum += rowsB[d - 1][j] * fall * std::pow(t.c[j], deg - d + 1);
    }
    (void)l;
    return std::abs(sum - exact) <= tol;
  };

  int k = 0;
  for (int deg = 0; deg < cap; ++deg) {
    bool ok = true;
    for (int l = 0; l < t.s && ok; ++l) {
      std::vector<std::vector<double>> rows(t.m);
      for (int d = 0; d < t.m; ++d) rows[d] = t.B[d][l];
      ok = row_exact(deg, rows, l, t.c[l]);
    }
    if (ok) {
      std::vector<std::vector<double>> rows(t.m);
      for (int d = 0; d < t.m; ++d) rows[d] = t.b[d];
      ok = row_exact(deg, rows, t.s, 1.0);
    }
    if (!ok) break;
    k = deg + 1;
  }
  return k;
}

std::string MDTableau::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["s"] = s;
  j["m"] = m;
  j["q"] = q;
  j["c"] = c;
  j["B"] = B;
  j["b"] = b;
  nlohmann::json rat;
  {
    std::vector<std::string> cr;
    for (auto& x : c_rat) cr.push_back(rat_str(x));
    rat["c"] = cr;
    std::vector<std::vector<std::vector<std::string>>> Br(m);
    std::vector<std::vector<std::string>> br(m);
    for (int d = 0; d < m; ++d) {
      Br[d].resize(s);
      for (int l = 0; l < s; ++l)
        for (int jj = 0; jj < s; ++jj)
          Br[d][l].push_back(rat_str(B_rat[d][l][jj]));
      for (int jj = 0; jj < s; ++jj) br[d].push_back(rat_str(b_rat[d][jj]));
    }
    rat["B"] = Br;
    rat["b"] = br;
  }
  j["rational"] = rat;
  return j.dump(2);
}

MDTableau MDTableau::from_json(const std::string& doc) {
  auto j = nlohmann::json::parse(doc);
  MDTableau t;
  t.name = j.at("name").get<std::string>();
  t.s = j.at("s").get<int>();
  t.m = j.at("m").get<int>();
  t.q = j.at("q").get<int>();
  t.c = j.at("c").get<std::vector<double>>();
  t.B = j.at("B").get<std::vector<std::vector<std::vector<double>>>>();
  t.b = j.at("b").get<std::vector<std::vector<double>>>();
  if (j.contains("rational")) {
    auto& rat = j["rational"];
    for (auto& srat : rat.at("c").get<std::vector<std::string>>())
      t.c_rat.push_back(parse_rat(srat));
    auto Br =
        rat.at("B").get<std::vector<std::vector<std::vector<std::string>>>>();
    auto br = rat.at("b").get<std::vector<std::vector<std::string>>>();
    t.B_rat.resize(t.m);
    t.b_rat.resize(t.m);
    for (int d = 0; d < t.m; ++d) {
      t.B_rat[d].resize(t.s);
      for (int l = 0; l < t.s; ++l)
        for (auto& e : Br[d][l]) t.B_rat[d][l].push_back(parse_rat(e));
      for (auto& e : br[d]) t.b_rat[d].push_back(parse_rat(e));
    }
  }
  return t;
}

}  // namespace mdrelax
