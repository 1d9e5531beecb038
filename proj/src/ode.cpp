#include "coralinv/ode.hpp"

#include <algorithm>
#include <cmath>

namespace coralinv {
namespace {

// Fehlberg tableau.
constexpr double c2 = 1.0 / 4.0, c3 = 3.0 / 8.0, c4 = 12.0 / 13.0, c6 = 1.0 / 2.0;
constexpr double a21 = 1.0 / 4.0;
constexpr double a31 = 3.0 / 32.0, a32 = 9.0 / 32.0;
constexpr double a41 = 1932.0 / 2197.0, a42 = -7200.0 / 2197.0, a43 = 7296.0 / 2197.0;
constexpr double a51 = 439.0 / 216.0, a52 = -8.0, a53 = 3680.0 / 513.0, a54 = -845.0 / 4104.0;
constexpr double a61 = -8.0 / 27.0, a62 = 2.0, a63 = -3544.0 / 2565.0, a64 = 1859.0 / 4104.0,
                 a65 = -11.0 / 40.0;
constexpr double b41 = 25.0 / 216.0, b43 = 1408.0 / 2565.0, b44 = 2197.0 / 4104.0, b45 = -1.0 / 5.0;
constexpr double b51 = 16.0 / 135.0, b53 = 6656.0 / 12825.0, b54 = 28561.0 / 56430.0,
                 b55 = -9.0 / 50.0, b56 = 2.0 / 55.0;

}  // namespace

Rkf45Step rkf45_step(const Eigen::VectorXd& y, double t, double dt, const DerivativeFn& f,
                     const Rkf45Options& options) {
  const Eigen::Index n = y.size();
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), tmp(n);
  f(t, y, k1);
  while (true) {
    if (dt < options.min_step) throw StepUnderflow(dt);

    tmp = y + dt * a21 * k1;
    f(t + c2 * dt, tmp, k2);
    tmp = y + dt * (a31 * k1 + a32 * k2);
    f(t + c3 * dt, tmp, k3);
    tmp = y + dt * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * dt, tmp, k4);
    tmp = y + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + dt, tmp, k5);
    tmp = y + dt * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + c6 * dt, tmp, k6);

    const Eigen::VectorXd y4 = y + dt * (b41 * k1 + b43 * k3 + b44 * k4 + b45 * k5);
    Eigen::VectorXd y5 = y + dt * (b51 * k1 + b53 * k3 + b54 * k4 + b55 * k5 + b56 * k6);
    // Error relative to the allowed bound; accept when <= 1.
    const Eigen::ArrayXd scale =
        options.tolerance * y.cwiseAbs().cwiseMax(y5.cwiseAbs()).array() + options.absolute_floor;
    const double err = n == 0 ? 0.0 : ((y5 - y4).cwiseAbs().array() / scale).maxCoeff();

    if (std::isfinite(err) && err <= 1.0) {
      const double factor =
          err == 0.0 ? options.max_growth
                     : std::clamp(options.safety * std::pow(1.0 / err, 0.2),
                                  options.max_shrink, options.max_growth);
      if (options.clamp_nonnegative) y5 = y5.cwiseMax(0.0);
      return {std::move(y5), dt, dt * factor};
    }
    const double factor = std::isfinite(err)
                              ? std::clamp(options.safety * std::pow(1.0 / err, 0.25),
                                           options.max_shrink, 1.0)
                              : options.max_shrink;
    dt *= factor;
  }
}

Rkf45Integration rkf45_integrate(const Eigen::VectorXd& y0, double t0, double t1,
                                 double initial_step, const DerivativeFn& f,
                                 const Rkf45Options& options) {
  Rkf45Integration out{y0, initial_step, 0};
  double t = t0;
  double dt = std::max(initial_step, options.min_step);
  // Relative slack so the final partial step is not chased into underflow.
  const double eps = 1e-12 * std::max(1.0, std::abs(t1));
  while (t1 - t > eps) {
    const double remaining = t1 - t;
    const bool last = dt >= remaining;
    const double trial = last ? remaining : dt;
    Rkf45Options opts = options;
    // A short closing segment is allowed below the floor.
    if (last && remaining < options.min_step) opts.min_step = remaining * 0.5;
    Rkf45Step step = rkf45_step(out.state, t, trial, f, opts);
    out.state = std::move(step.state);
    t += step.taken_step;
    ++out.accepted_steps;
    // Keep the controller's suggestion rather than the clipped step length.
    dt = (last && step.taken_step == trial) ? std::max(dt, step.next_step) : step.next_step;
  }
  out.next_step = dt;
  return out;
}

}  // namespace coralinv
