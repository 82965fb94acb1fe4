#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "rhmpc/control_grid.hpp"
#include "rhmpc/errors.hpp"
#include "rhmpc/state_space.hpp"

namespace rhmpc {

// Time-varying vector field with exogenous input: f(t, x, u) -> dx/dt.
using DynamicsFn = std::function<Eigen::VectorXd(
    double, const Eigen::VectorXd&, const Eigen::VectorXd&)>;

namespace detail {

// One classical Runge-Kutta 4 step of f(t, x) over step h.
template <class F>
Eigen::VectorXd rk4_step(F&& f, double t, const Eigen::VectorXd& x, double h) {
  const Eigen::VectorXd k1 = f(t, x);
  const Eigen::VectorXd k2 = f(t + 0.5 * h, x + (0.5 * h) * k1);
  const Eigen::VectorXd k3 = f(t + 0.5 * h, x + (0.5 * h) * k2);
  const Eigen::VectorXd k4 = f(t + h, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Number of equal RK4 steps covering an interval of length len; throws unless
// dt_step divides len evenly (within roundoff slack).
inline int steps_for(double len, double dt_step) {
  if (!(dt_step > 0.0)) throw DimensionError("dt_step must be positive");
  const double ratio = len / dt_step;
  const int steps = static_cast<int>(std::lround(ratio));
  if (steps < 1 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio))
    throw DimensionError("dt_step must divide each control interval evenly");
  return steps;
}

}  // namespace detail

// Fixed-step RK4 integration of dx/dt = f(t, x, u) under the piecewise-constant
// input grid.  The trajectory is sampled at every dt_step point including both
// horizon endpoints.  `out` (optional) maps (t, x, u) to the recorded output.
inline Trajectory integrate_rk4(
    const DynamicsFn& f, const Eigen::VectorXd& x0, const ControlGrid& u_grid,
    double dt_step,
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&,
                                        const Eigen::VectorXd&)>& out = {}) {
  u_grid.validate();
  Trajectory traj;
  Eigen::VectorXd x = x0;
  double t = u_grid.t_begin();
  auto record = [&](double tr, const Eigen::VectorXd& xr,
                    const Eigen::VectorXd& ur) {
    traj.times.push_back(tr);
    traj.states.push_back(xr);
    if (out) traj.outputs.push_back(out(tr, xr, ur));
  };
  record(t, x, u_grid.values.cols() > 0
                   ? Eigen::VectorXd(u_grid.values.row(0).transpose())
                   : Eigen::VectorXd::Zero(0));
  for (int i = 0; i < u_grid.N; ++i) {
    const double len = u_grid.breakpoints[i + 1] - u_grid.breakpoints[i];
    const int steps = detail::steps_for(len, dt_step);
    const double h = len / steps;
    const Eigen::VectorXd u = u_grid.values.row(i).transpose();
    auto fu = [&](double tt, const Eigen::VectorXd& xx) {
      return f(tt, xx, u);
    };
    for (int s = 0; s < steps; ++s) {
      x = detail::rk4_step(fu, t, x, h);
      t = u_grid.breakpoints[i] + (s + 1) * h;
      if (!x.allFinite()) throw DivergenceError(t);
      record(t, x, u);
    }
    t = u_grid.breakpoints[i + 1];
  }
  return traj;
}

// Convenience overload for a continuous linear model; records y = C x + D u.
inline Trajectory integrate_rk4(const StateSpaceModel& m,
                                const Eigen::VectorXd& x0,
                                const ControlGrid& u_grid, double dt_step) {
  if (m.form != ModelForm::continuous)
    throw DimensionError("integrate_rk4 requires a continuous-form model");
  if (u_grid.n_u() != m.n_u)
    throw DimensionError("control grid input dimension mismatch");
  DynamicsFn f = [&m](double, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& u) { return m.A * x + m.B * u; };
  auto out = [&m](double, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return Eigen::VectorXd(m.C * x + m.D * u);
  };
  return integrate_rk4(f, x0, u_grid, dt_step, out);
}

}  // namespace rhmpc
