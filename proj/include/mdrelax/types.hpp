#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace mdrelax {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// tableau generation
struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConditioningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownTableau : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// nonlinear solvers
struct NewtonDiverged : std::runtime_error {
  Vec last_iterate;
  double residual_norm;
  int iterations;
  NewtonDiverged(const std::string& msg, Vec x, double rnorm, int iters)
      : std::runtime_error(msg),
        last_iterate(std::move(x)),
        residual_norm(rnorm),
        iterations(iters) {}
};
struct SingularJacobian : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RelaxationRootNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// problems
struct SingularState : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ReferenceDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// integrator
struct PredictorFailed : std::runtime_error {
  int stage;
  PredictorFailed(const std::string& msg, int l)
      : std::runtime_error(msg), stage(l) {}
};
struct CorrectorFailed : std::runtime_error {
  int stage;
  int iterate;
  CorrectorFailed(const std::string& msg, int l, int k)
      : std::runtime_error(msg), stage(l), iterate(k) {}
};
struct BackgroundSolveFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StepFailed : std::runtime_error {
  double time;
  StepFailed(const std::string& msg, double t)
      : std::runtime_error(msg), time(t) {}
};

// harness
struct InsufficientAsymptoticRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MalformedCSV : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mdrelax
