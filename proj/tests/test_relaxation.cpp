#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mdrelax/relaxation.hpp"
#include "mdrelax/tableau.hpp"

using namespace mdrelax;

namespace {

HBPCConfig make_cfg(const std::string& tableau, int kmax) {
  HBPCConfig cfg;
  cfg.tableau = builtin(tableau);
  cfg.kmax = kmax;
  return cfg;
}

}  // namespace

TEST_CASE("relax returns gamma = 1 when the step already conserves eta") {
  auto p = oscillator();
  Vec w_next(2);
  w_next << std::cos(0.2), std::sin(0.2);  // same eta level set as w0
  auto rs = relax(p, p.w0, w_next, 0.0, 0.2);
  CHECK(rs.gamma == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((rs.w_relaxed - w_next).norm() < 1e-12);
}

TEST_CASE("relax matches the quadratic closed form for the oscillator") {
  auto p = oscillator();
  auto cfg = make_cfg("HB-I2DRK6-3s", 2);
  const double dt = 0.2;
  Vec w_next = hbpc_step(p, p.w0, 0.0, dt, cfg);
  auto rs = relax(p, p.w0, w_next, 0.0, dt);
  Vec d = w_next - p.w0;
  const double gamma_exact = -2.0 * p.w0.dot(d) / d.squaredNorm();
  CHECK(rs.gamma == doctest::Approx(gamma_exact).epsilon(1e-10));
  CHECK(std::abs(p.eta(rs.w_relaxed) - 1.0) < 1e-14);
  CHECK(rs.t_next == doctest::Approx(rs.gamma * dt));
}

TEST_CASE("zero increment reports gamma = 1 by convention") {
  IVP p = oscillator();
  auto rs = relax(p, p.w0, p.w0, 1.0, 0.5);
  CHECK(rs.gamma == 1.0);
  CHECK(rs.t_next == 1.5);
}

TEST_CASE("unrelaxed integration uses a uniform grid") {
  auto p = oscillator();
  auto cfg = make_cfg("HB-I2DRK6-3s", 2);
  auto traj = integrate(p, cfg, 0.25, 2.0, false);
  REQUIRE(traj.records.size() == 9);  // initial state + 8 steps
  for (size_t i = 0; i < traj.records.size(); ++i)
    CHECK(traj.records[i].t == doctest::Approx(0.25 * i).epsilon(1e-14));
}

TEST_CASE("relaxed integration preserves eta to rounding accumulation") {
  auto p = oscillator();
  auto cfg = make_cfg("HB-I2DRK6-3s", 4);
  auto traj = integrate(p, cfg, 0.2, 20.0, true);
  double max_drift = 0.0;
  for (const auto& r : traj.records)
    max_drift = std::max(max_drift, std::abs(r.eta - 1.0));
  CHECK(max_drift <= 1e-12);
  // relaxed grid still reaches T_end
  CHECK(traj.records.back().t >= 20.0 - 1e-9);
  // gamma stays near one
  for (const auto& r : traj.records) CHECK(std::abs(r.gamma - 1.0) < 1e-3);
}

TEST_CASE("aborted runs carry a partial trajectory and the cause") {
  auto p = kepler();
  auto cfg = make_cfg("HB-I2DRK6-3s", 4);
  try {
    integrate(p, cfg, 0.5, 10.0, true);
    FAIL("expected IntegrationAborted");
  } catch (const IntegrationAborted& e) {
    CHECK(e.time < 10.0);
    CHECK(!e.partial.records.empty());
    REQUIRE(e.cause);
    CHECK_THROWS_AS(std::rethrow_exception(e.cause), RelaxationRootNotFound);
  }
}

TEST_CASE("trajectory CSV schema") {
  auto p = oscillator();
  auto cfg = make_cfg("HB-I2DRK6-3s", 2);
  auto traj = integrate(p, cfg, 0.5, 1.0, false);
  auto path = std::filesystem::temp_directory_path() / "traj_test.csv";
  write_trajectory_csv(traj, path.string(),
                       [](double t) { return oscillator_exact(t); });
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header == "t,error,eta,gamma,newton_iters");
  int rows = 0;
  std::string line;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 3);
  std::filesystem::remove(path);
}
