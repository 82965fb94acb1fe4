#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "rhmpc/control_grid.hpp"
#include "rhmpc/errors.hpp"
#include "rhmpc/ocp.hpp"
#include "rhmpc/state_space.hpp"

namespace rhmpc {

// Receding-horizon controller configuration.  The per-sample subproblem
// minimizes the output tracking error under weight W_y over a horizon of
// N_p samples, with the control piecewise constant on N_u intervals and box
// bounds on every channel.
struct RmpcConfig {
  Eigen::MatrixXd W_y;
  int N_p = 10;
  int N_u = 10;
  double dt_sample = 1.0;
  Eigen::VectorXd u_min, u_max;
  SolveOptions solver = default_solver_options();
  bool warm_start = true;

  // Per-sample budget: a short fixed iteration allowance with a single
  // penalty round (the subproblem carries no constraint lists), and the
  // cheap exact gradient.
  static SolveOptions default_solver_options() {
    SolveOptions o;
    o.max_iters = 30;
    o.penalty_rounds = 1;
    o.grad_mode = GradMode::adjoint;
    return o;
  }

  void validate(int n_y, int n_u) const {
    if (W_y.rows() != n_y || W_y.cols() != n_y)
      throw DimensionError("W_y must be n_y x n_y");
    if (!W_y.isApprox(W_y.transpose(), 1e-12))
      throw DimensionError("W_y must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W_y);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw DimensionError("W_y must be positive definite");
    if (N_p < 1 || N_u < 1 || N_u > N_p)
      throw DimensionError("horizons must satisfy 1 <= N_u <= N_p");
    if (!(dt_sample > 0.0)) throw DimensionError("dt_sample must be > 0");
    if (u_min.size() != n_u || u_max.size() != n_u)
      throw DimensionError("input bounds must be n_u vectors");
    for (int j = 0; j < n_u; ++j)
      if (!(u_min(j) < u_max(j)))
        throw DimensionError("input bounds must satisfy u_min < u_max");
    solver.validate();
  }
};

// Mutable controller memory carried between samples.
struct RmpcState {
  ControlGrid u_prev_grid;        // previous optimal plan (warm-start source)
  SolveResult last_result;        // diagnostics from the latest solve
  Eigen::VectorXd u_applied_prev; // last applied control (fallback/cold start)
  bool has_prev = false;
  bool last_fallback = false;

  static RmpcState initial(const Eigen::VectorXd& u_start) {
    RmpcState s;
    s.u_applied_prev = u_start;
    return s;
  }
};

// Assemble the per-sample tracking problem: horizon [0, N_p dt], linear
// dynamics, quadratic output-error running cost and an endpoint cost with the
// same weight, fixed initial state, constant-in-time box bounds, no
// constraint lists.
inline OcpProblem build_ocp(const StateSpaceModel& m,
                            const Eigen::VectorXd& x_hat,
                            const Eigen::VectorXd& r_mpc,
                            const RmpcConfig& cfg) {
  if (m.form != ModelForm::continuous)
    throw DimensionError("build_ocp requires a continuous-form model");
  cfg.validate(m.n_y, m.n_u);
  if (x_hat.size() != m.n_x) throw DimensionError("x_hat dimension mismatch");
  if (r_mpc.size() != m.n_y) throw DimensionError("r_mpc dimension mismatch");

  OcpProblem p;
  p.a = 0.0;
  p.b = cfg.N_p * cfg.dt_sample;
  p.n_x = m.n_x;
  p.n_u = m.n_u;
  p.dt_step = cfg.dt_sample / 10.0;

  const Eigen::MatrixXd A = m.A, B = m.B, C = m.C, D = m.D;
  const Eigen::MatrixXd W = cfg.W_y;
  const Eigen::VectorXd r = r_mpc;

  p.dynamics = [A, B](double, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& u) {
    return Eigen::VectorXd(A * x + B * u);
  };
  p.dynamics_jac_x = [A](double, const Eigen::VectorXd&,
                         const Eigen::VectorXd&) { return A; };
  p.dynamics_jac_u = [B](double, const Eigen::VectorXd&,
                         const Eigen::VectorXd&) { return B; };

  p.running_cost = [C, D, W, r](double, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u) {
    const Eigen::VectorXd e = C * x + D * u - r;
    return double(e.dot(W * e));
  };
  p.running_cost_grad_x = [C, D, W, r](double, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& u) {
    const Eigen::VectorXd e = C * x + D * u - r;
    return Eigen::VectorXd(2.0 * C.transpose() * (W * e));
  };
  p.running_cost_grad_u = [C, D, W, r](double, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& u) {
    const Eigen::VectorXd e = C * x + D * u - r;
    return Eigen::VectorXd(2.0 * D.transpose() * (W * e));
  };

  p.endpoint_cost = [C, W, r](const Eigen::VectorXd&,
                              const Eigen::VectorXd& xb) {
    const Eigen::VectorXd e = C * xb - r;
    return double(e.dot(W * e));
  };
  p.endpoint_cost_grad_xb = [C, W, r](const Eigen::VectorXd&,
                                      const Eigen::VectorXd& xb) {
    const Eigen::VectorXd e = C * xb - r;
    return Eigen::VectorXd(2.0 * C.transpose() * (W * e));
  };

  const Eigen::VectorXd lo = cfg.u_min, hi = cfg.u_max;
  p.u_min = [lo](double) { return lo; };
  p.u_max = [hi](double) { return hi; };

  p.xi_is_decision = false;
  return p;
}

// One receding-horizon sample: solve the tracking problem from the warm start
// (previous plan shifted one interval with the last interval duplicated; cold
// start is the bound-clipped previously applied control) and return the first
// interval's control, clipped to the box.  A diverging solve falls back to the
// previously applied control and raises state.last_fallback.
inline Eigen::VectorXd control_step(RmpcState& state, const StateSpaceModel& m,
                                    const Eigen::VectorXd& x_hat,
                                    const Eigen::VectorXd& r_mpc,
                                    const RmpcConfig& cfg) {
  OcpProblem p = build_ocp(m, x_hat, r_mpc, cfg);
  ControlGrid u0 = ControlGrid::uniform(p.a, p.b, cfg.N_u, m.n_u);
  if (state.u_applied_prev.size() != m.n_u)
    throw DimensionError("RmpcState must be initialized with an n_u vector");

  const Eigen::VectorXd cold =
      state.u_applied_prev.cwiseMax(cfg.u_min).cwiseMin(cfg.u_max);
  if (cfg.warm_start && state.has_prev &&
      state.u_prev_grid.N == cfg.N_u &&
      state.u_prev_grid.values.cols() == m.n_u) {
    for (int i = 0; i < cfg.N_u - 1; ++i)
      u0.values.row(i) = state.u_prev_grid.values.row(i + 1);
    u0.values.row(cfg.N_u - 1) =
        state.u_prev_grid.values.row(cfg.N_u - 1);
  } else {
    for (int i = 0; i < cfg.N_u; ++i) u0.values.row(i) = cold.transpose();
  }

  state.last_fallback = false;
  Eigen::VectorXd u_apply;
  try {
    SolveResult res = solve(p, u0, x_hat, cfg.solver);
    u_apply = res.u_star.values.row(0).transpose();
    state.u_prev_grid = res.u_star;
    state.last_result = std::move(res);
    state.has_prev = true;
  } catch (const DivergenceError&) {
    state.last_fallback = true;
    u_apply = cold;
  }
  u_apply = u_apply.cwiseMax(cfg.u_min).cwiseMin(cfg.u_max);
  state.u_applied_prev = u_apply;
  return u_apply;
}

}  // namespace rhmpc
