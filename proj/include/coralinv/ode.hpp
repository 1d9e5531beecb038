#pragma once

#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

namespace coralinv {

/// Right-hand side dy/dt = f(t, y), written into the third argument.
using DerivativeFn = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Raised when the adaptive controller would need a step below the configured
/// floor. In practice this flags a stiff parameter combination.
class StepUnderflow : public std::runtime_error {
 public:
  explicit StepUnderflow(double dt)
      : std::runtime_error("RKF45 step size underflow"), attempted_step_(dt) {}
  double attempted_step() const { return attempted_step_; }

 private:
  double attempted_step_;
};

struct Rkf45Options {
  // Per-component bound: |err_i| <= tolerance * |y_i| + absolute_floor.
  double tolerance = 1e-6;
  double absolute_floor = 1e-9;
  double safety = 0.9;
  double min_step = 5e-3;
  double max_growth = 5.0;
  double max_shrink = 0.2;
  bool clamp_nonnegative = true;
};

struct Rkf45Step {
  Eigen::VectorXd state;
  double taken_step = 0.0;
  double next_step = 0.0;
};

/// One accepted Runge-Kutta-Fehlberg 4(5) step starting from (t, y) with a
/// trial size dt. Rejected trials shrink dt and retry. The fifth-order
/// solution is propagated.
Rkf45Step rkf45_step(const Eigen::VectorXd& y, double t, double dt, const DerivativeFn& f,
                     const Rkf45Options& options = {});

struct Rkf45Integration {
  Eigen::VectorXd state;
  double next_step = 0.0;
  int accepted_steps = 0;
};

/// Integrates from t0 to t1 (t1 > t0) with adaptive steps, landing exactly on t1.
Rkf45Integration rkf45_integrate(const Eigen::VectorXd& y0, double t0, double t1,
                                 double initial_step, const DerivativeFn& f,
                                 const Rkf45Options& options = {});

}  // namespace coralinv
