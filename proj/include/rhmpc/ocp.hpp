#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "rhmpc/control_grid.hpp"
#include "rhmpc/errors.hpp"
#include "rhmpc/integrate.hpp"
#include "rhmpc/state_space.hpp"

namespace rhmpc {

using EndpointCostFn =
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;
using EndpointGradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                                     const Eigen::VectorXd&)>;
using RunningCostFn = std::function<double(double, const Eigen::VectorXd&,
                                           const Eigen::VectorXd&)>;
using RunningGradFn = std::function<Eigen::VectorXd(
    double, const Eigen::VectorXd&, const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&,
                                                 const Eigen::VectorXd&)>;
using BoundFn = std::function<Eigen::VectorXd(double)>;

// Scalar path constraint fn(t, x, u) <= 0 with optional gradients (required
// only by the adjoint gradient mode).
struct PathConstraint {
  RunningCostFn fn;
  RunningGradFn grad_x, grad_u;
};

// Scalar endpoint constraint fn(xi, x_b) (<= 0 for inequalities, = 0 for
// equalities) with optional gradients with respect to xi and x_b.
struct EndpointConstraint {
  EndpointCostFn fn;
  EndpointGradFn grad_xi, grad_xb;
};

// Constrained optimal-control problem over [a, b]:
//   minimize  g_o(xi, x(b)) + integral of l_o(t, x, u) dt
//   subject to  dx/dt = h(t, x, u),  u_min(t) <= u(t) <= u_max(t),
//               trajectory_ineq <= 0,  endpoint_ineq <= 0,  endpoint_eq = 0,
// with the control piecewise constant on a grid and the initial state either
// fixed (passed to evaluate/solve) or a bounded decision variable.
struct OcpProblem {
  double a = 0.0, b = 1.0;
  int n_x = 0, n_u = 0;

  DynamicsFn dynamics;                       // h(t, x, u)
  JacobianFn dynamics_jac_x, dynamics_jac_u; // adjoint mode only

  EndpointCostFn endpoint_cost;  // g_o(xi, x_b); absent = 0
  EndpointGradFn endpoint_cost_grad_xi, endpoint_cost_grad_xb;
  RunningCostFn running_cost;  // l_o(t, x, u); absent = 0
  RunningGradFn running_cost_grad_x, running_cost_grad_u;

  BoundFn u_min, u_max;  // per-channel bound functions of t; absent = free

  bool xi_is_decision = false;
  Eigen::VectorXd xi_min, xi_max;  // used only when xi_is_decision

  std::vector<PathConstraint> trajectory_ineq;
  std::vector<EndpointConstraint> endpoint_ineq;
  std::vector<EndpointConstraint> endpoint_eq;

  double dt_step = 0.1;  // RK4 integration step; must divide every interval

  bool has_constraints() const {
    return !trajectory_ineq.empty() || !endpoint_ineq.empty() ||
           !endpoint_eq.empty();
  }

  void validate() const {
    if (!(a < b)) throw DimensionError("OCP horizon requires a < b");
    if (n_x <= 0) throw DimensionError("OCP requires n_x > 0");
    if (n_u < 0) throw DimensionError("OCP requires n_u >= 0");
    if (!dynamics) throw DimensionError("OCP requires dynamics");
    if (!(dt_step > 0.0)) throw DimensionError("OCP requires dt_step > 0");
    if (xi_is_decision) {
      if (xi_min.size() != n_x || xi_max.size() != n_x)
        throw DimensionError("initial-state bounds must be n_x vectors");
      for (int i = 0; i < n_x; ++i)
        if (!(xi_min(i) <= xi_max(i)))
          throw DimensionError("initial-state bounds must satisfy min <= max");
    }
  }
};

enum class GradMode { finite_difference, adjoint };

struct SolveOptions {
  int max_iters = 100;
  GradMode grad_mode = GradMode::finite_difference;
  double fd_step = 1e-6;  // relative central-difference step
  double armijo_c1 = 1e-4;
  double armijo_backtrack = 0.5;
  int armijo_max_backtracks = 30;
  double penalty_init = 10.0;
  double penalty_growth = 10.0;
  int penalty_rounds = 4;
  double tol_grad = 1e-6;
  double tol_constraint = 1e-6;
  // Optional per-accepted-iterate observer: (u, xi, penalized cost, measured
  // constraint violation, penalty round).  Used by tests.
  std::function<void(const ControlGrid&, const Eigen::VectorXd&, double, double,
                     int)>
      iterate_hook;

  void validate() const {
    if (max_iters < 0) throw ConfigError("max_iters must be >= 0");
    if (!(fd_step > 0.0)) throw ConfigError("fd_step must be > 0");
    if (!(armijo_c1 > 0.0) || !(armijo_backtrack > 0.0) ||
        armijo_backtrack >= 1.0)
      throw ConfigError("invalid Armijo parameters");
    if (armijo_max_backtracks < 1)
      throw ConfigError("armijo_max_backtracks must be >= 1");
    if (!(penalty_init > 0.0) || !(penalty_growth > 0.0))
      throw ConfigError("penalty parameters must be > 0");
    if (penalty_rounds < 1) throw ConfigError("penalty_rounds must be >= 1");
    if (!(tol_grad > 0.0) || !(tol_constraint > 0.0))
      throw ConfigError("tolerances must be > 0");
  }
};

struct SolveResult {
  ControlGrid u_star;
  Trajectory x_star;
  double f_star = 0.0;             // objective (without penalty terms)
  int iterations = 0;              // accepted projected-gradient steps
  double constraint_violation = 0.0;
  bool converged = false;
};

namespace detail {

struct OcpEval {
  double f_pen = 0.0;    // objective + quadratic penalty terms
  double f_unpen = 0.0;  // objective only
  double viol = 0.0;     // max constraint violation over stage/endpoint samples
  Trajectory traj;       // state trajectory (recorded on request)
};

// Shared forward/backward machinery for one problem at one penalty weight.
class OcpEngine {
 public:
  OcpEngine(const OcpProblem& p, double rho) : p_(p), rho_(rho) {
    p_.validate();
  }

  OcpEval evaluate(const ControlGrid& u, const Eigen::VectorXd& xi,
                   bool record_traj) const {
    check_shapes(u, xi);
    OcpEval out;
    Eigen::VectorXd x = xi;
    double c_run = 0.0, c_pen = 0.0;
    double t = p_.a;
    if (record_traj) {
      out.traj.times.push_back(t);
      out.traj.states.push_back(x);
    }
    for (int i = 0; i < u.N; ++i) {
      const double len = u.breakpoints[i + 1] - u.breakpoints[i];
      const int steps = steps_for(len, p_.dt_step);
      const double h = len / steps;
      const Eigen::VectorXd uv = u.values.row(i).transpose();
      for (int s = 0; s < steps; ++s) {
        double l1r, l2r, l3r, l4r, l1p, l2p, l3p, l4p;
        const Eigen::VectorXd k1 = stage(t, x, uv, l1r, l1p, &out.viol);
        const Eigen::VectorXd k2 =
            stage(t + 0.5 * h, x + (0.5 * h) * k1, uv, l2r, l2p, &out.viol);
        const Eigen::VectorXd k3 =
            stage(t + 0.5 * h, x + (0.5 * h) * k2, uv, l3r, l3p, &out.viol);
        const Eigen::VectorXd k4 =
            stage(t + h, x + h * k3, uv, l4r, l4p, &out.viol);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        c_run += (h / 6.0) * (l1r + 2.0 * l2r + 2.0 * l3r + l4r);
        c_pen += (h / 6.0) * (l1p + 2.0 * l2p + 2.0 * l3p + l4p);
        t = u.breakpoints[i] + (s + 1) * h;
        if (!x.allFinite() || !std::isfinite(c_run) || !std::isfinite(c_pen))
          throw DivergenceError(t);
        if (record_traj) {
          out.traj.times.push_back(t);
          out.traj.states.push_back(x);
        }
      }
      t = u.breakpoints[i + 1];
    }
    double f_end = p_.endpoint_cost ? p_.endpoint_cost(xi, x) : 0.0;
    double pen_end = 0.0;
    for (const auto& c : p_.endpoint_ineq) {
      const double v = c.fn(xi, x);
      out.viol = std::max(out.viol, std::max(0.0, v));
      pen_end += rho_ * std::max(0.0, v) * std::max(0.0, v);
    }
    for (const auto& c : p_.endpoint_eq) {
      const double v = c.fn(xi, x);
      out.viol = std::max(out.viol, std::abs(v));
      pen_end += rho_ * v * v;
    }
    out.f_unpen = c_run + f_end;
    out.f_pen = out.f_unpen + c_pen + pen_end;
    if (!std::isfinite(out.f_pen)) throw DivergenceError(p_.b);
    return out;
  }

  // Gradient of the penalized cost with respect to the control parameters
  // (du: N x n_u) and the initial state (dxi: n_x).
  void gradient(const ControlGrid& u, const Eigen::VectorXd& xi, GradMode mode,
                double fd_step, Eigen::MatrixXd* du,
                Eigen::VectorXd* dxi) const {
    if (mode == GradMode::finite_difference)
      gradient_fd(u, xi, fd_step, du, dxi);
    else
      gradient_adjoint(u, xi, du, dxi);
  }

 private:
  void check_shapes(const ControlGrid& u, const Eigen::VectorXd& xi) const {
    u.validate();
    if (u.n_u() != p_.n_u)
      throw DimensionError("control grid input dimension mismatch");
    if (xi.size() != p_.n_x)
      throw DimensionError("initial state dimension mismatch");
    if (std::abs(u.t_begin() - p_.a) > 1e-12 ||
        std::abs(u.t_end() - p_.b) > 1e-12)
      throw DimensionError("control grid must span the problem horizon");
  }

  // One vector-field + cost-rate sample; also tracks path-constraint
  // violation at this stage point.
  Eigen::VectorXd stage(double t, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& uv, double& l_run, double& l_pen,
                        double* viol) const {
    l_run = p_.running_cost ? p_.running_cost(t, x, uv) : 0.0;
    l_pen = 0.0;
    for (const auto& c : p_.trajectory_ineq) {
      const double v = c.fn(t, x, uv);
      const double vp = std::max(0.0, v);
      if (viol) *viol = std::max(*viol, vp);
      l_pen += rho_ * vp * vp;
    }
    return p_.dynamics(t, x, uv);
  }

  void gradient_fd(const ControlGrid& u, const Eigen::VectorXd& xi,
                   double fd_step, Eigen::MatrixXd* du,
                   Eigen::VectorXd* dxi) const {
    check_shapes(u, xi);
    auto delta_for = [&](double v) {
      const double d = fd_step * std::max(1.0, std::abs(v));
      if (v + d == v)
        throw ConfigError("fd_step underflows relative to parameter magnitude");
      return d;
    };
    if (du) {
      du->resize(u.N, p_.n_u);
      ControlGrid up = u;
      for (int i = 0; i < u.N; ++i)
        for (int j = 0; j < p_.n_u; ++j) {
          const double v0 = u.values(i, j);
          const double d = delta_for(v0);
          up.values(i, j) = v0 + d;
          const double fp = evaluate(up, xi, false).f_pen;
          up.values(i, j) = v0 - d;
          const double fm = evaluate(up, xi, false).f_pen;
          up.values(i, j) = v0;
          (*du)(i, j) = (fp - fm) / (2.0 * d);
        }
    }
    if (dxi) {
      dxi->resize(p_.n_x);
      Eigen::VectorXd xp = xi;
      for (int i = 0; i < p_.n_x; ++i) {
        const double v0 = xi(i);
        const double d = delta_for(v0);
        xp(i) = v0 + d;
        const double fp = evaluate(u, xp, false).f_pen;
        xp(i) = v0 - d;
        const double fm = evaluate(u, xp, false).f_pen;
        xp(i) = v0;
        (*dxi)(i) = (fp - fm) / (2.0 * d);
      }
    }
  }

  void require(bool ok, const char* what) const {
    if (!ok)
      throw ConfigError(std::string("adjoint gradient mode requires ") + what);
  }

  void check_adjoint_callbacks() const {
    require(static_cast<bool>(p_.dynamics_jac_x), "dynamics_jac_x");
    require(static_cast<bool>(p_.dynamics_jac_u), "dynamics_jac_u");
    if (p_.running_cost) {
      require(static_cast<bool>(p_.running_cost_grad_x),
              "running_cost_grad_x");
      require(static_cast<bool>(p_.running_cost_grad_u),
              "running_cost_grad_u");
    }
    if (p_.endpoint_cost)
      require(static_cast<bool>(p_.endpoint_cost_grad_xb),
              "endpoint_cost_grad_xb");
    for (const auto& c : p_.trajectory_ineq)
      require(static_cast<bool>(c.grad_x) && static_cast<bool>(c.grad_u),
              "trajectory_ineq gradients");
    for (const auto& c : p_.endpoint_ineq)
      require(static_cast<bool>(c.grad_xb), "endpoint_ineq grad_xb");
    for (const auto& c : p_.endpoint_eq)
      require(static_cast<bool>(c.grad_xb), "endpoint_eq grad_xb");
  }

  // Penalized running-cost gradients at a stage point.
  Eigen::VectorXd pen_lx(double t, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& uv) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p_.n_x);
    if (p_.running_cost) g += p_.running_cost_grad_x(t, x, uv);
    for (const auto& c : p_.trajectory_ineq) {
      const double v = c.fn(t, x, uv);
      if (v > 0.0) g += (2.0 * rho_ * v) * c.grad_x(t, x, uv);
    }
    return g;
  }

  Eigen::VectorXd pen_lu(double t, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& uv) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p_.n_u);
    if (p_.running_cost) g += p_.running_cost_grad_u(t, x, uv);
    for (const auto& c : p_.trajectory_ineq) {
      const double v = c.fn(t, x, uv);
      if (v > 0.0) g += (2.0 * rho_ * v) * c.grad_u(t, x, uv);
    }
    return g;
  }

  // Exact gradient of the discretely integrated penalized cost, obtained by
  // reverse accumulation through every RK4 stage.
  void gradient_adjoint(const ControlGrid& u, const Eigen::VectorXd& xi,
                        Eigen::MatrixXd* du, Eigen::VectorXd* dxi) const {
    check_shapes(u, xi);
    check_adjoint_callbacks();

    struct StepRec {
      double t, h;
      int interval;
      Eigen::VectorXd x;  // state at step start
    };
    std::vector<StepRec> recs;
    Eigen::VectorXd x = xi;
    for (int i = 0; i < u.N; ++i) {
      const double len = u.breakpoints[i + 1] - u.breakpoints[i];
      const int steps = steps_for(len, p_.dt_step);
      const double h = len / steps;
      const Eigen::VectorXd uv = u.values.row(i).transpose();
      double t = u.breakpoints[i];
      for (int s = 0; s < steps; ++s) {
        recs.push_back({t, h, i, x});
        const Eigen::VectorXd k1 = p_.dynamics(t, x, uv);
        const Eigen::VectorXd k2 =
            p_.dynamics(t + 0.5 * h, x + (0.5 * h) * k1, uv);
        const Eigen::VectorXd k3 =
            p_.dynamics(t + 0.5 * h, x + (0.5 * h) * k2, uv);
        const Eigen::VectorXd k4 = p_.dynamics(t + h, x + h * k3, uv);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = u.breakpoints[i] + (s + 1) * h;
        if (!x.allFinite()) throw DivergenceError(t);
      }
    }
    const Eigen::VectorXd xb = x;

    // Endpoint seeds: lambda = d(cost)/d(x_b); direct xi-terms accumulate
    // separately.
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(p_.n_x);
    Eigen::VectorXd dxi_direct = Eigen::VectorXd::Zero(p_.n_x);
    if (p_.endpoint_cost) {
      lambda += p_.endpoint_cost_grad_xb(xi, xb);
      if (p_.endpoint_cost_grad_xi) dxi_direct += p_.endpoint_cost_grad_xi(xi, xb);
    }
    for (const auto& c : p_.endpoint_ineq) {
      const double v = c.fn(xi, xb);
      if (v > 0.0) {
        lambda += (2.0 * rho_ * v) * c.grad_xb(xi, xb);
        if (c.grad_xi) dxi_direct += (2.0 * rho_ * v) * c.grad_xi(xi, xb);
      }
    }
    for (const auto& c : p_.endpoint_eq) {
      const double v = c.fn(xi, xb);
      lambda += (2.0 * rho_ * v) * c.grad_xb(xi, xb);
      if (c.grad_xi) dxi_direct += (2.0 * rho_ * v) * c.grad_xi(xi, xb);
    }

    Eigen::MatrixXd dU = Eigen::MatrixXd::Zero(u.N, p_.n_u);
    for (int r = static_cast<int>(recs.size()) - 1; r >= 0; --r) {
      const StepRec& rec = recs[r];
      const double h = rec.h, t = rec.t;
      const Eigen::VectorXd uv = u.values.row(rec.interval).transpose();
      // Recompute stage states.
      const Eigen::VectorXd& X1 = rec.x;
      const Eigen::VectorXd k1 = p_.dynamics(t, X1, uv);
      const Eigen::VectorXd X2 = X1 + (0.5 * h) * k1;
      const Eigen::VectorXd k2 = p_.dynamics(t + 0.5 * h, X2, uv);
      const Eigen::VectorXd X3 = X1 + (0.5 * h) * k2;
      const Eigen::VectorXd k3 = p_.dynamics(t + 0.5 * h, X3, uv);
      const Eigen::VectorXd X4 = X1 + h * k3;
      const double t2 = t + 0.5 * h, t4 = t + h;
      const double w1 = h / 6.0, w2 = h / 3.0, w3 = h / 3.0, w4 = h / 6.0;

      const Eigen::VectorXd mu4 = w4 * lambda;
      const Eigen::VectorXd gX4 =
          p_.dynamics_jac_x(t4, X4, uv).transpose() * mu4 + w4 * pen_lx(t4, X4, uv);
      const Eigen::VectorXd mu3 = w3 * lambda + h * gX4;
      const Eigen::VectorXd gX3 =
          p_.dynamics_jac_x(t2, X3, uv).transpose() * mu3 + w3 * pen_lx(t2, X3, uv);
      const Eigen::VectorXd mu2 = w2 * lambda + (0.5 * h) * gX3;
      const Eigen::VectorXd gX2 =
          p_.dynamics_jac_x(t2, X2, uv).transpose() * mu2 + w2 * pen_lx(t2, X2, uv);
      const Eigen::VectorXd mu1 = w1 * lambda + (0.5 * h) * gX2;
      const Eigen::VectorXd gX1 =
          p_.dynamics_jac_x(t, X1, uv).transpose() * mu1 + w1 * pen_lx(t, X1, uv);

      dU.row(rec.interval) +=
          (p_.dynamics_jac_u(t, X1, uv).transpose() * mu1 +
           p_.dynamics_jac_u(t2, X2, uv).transpose() * mu2 +
           p_.dynamics_jac_u(t2, X3, uv).transpose() * mu3 +
           p_.dynamics_jac_u(t4, X4, uv).transpose() * mu4 +
           w1 * pen_lu(t, X1, uv) + w2 * pen_lu(t2, X2, uv) +
           w3 * pen_lu(t2, X3, uv) + w4 * pen_lu(t4, X4, uv))
              .transpose();
      lambda += gX1 + gX2 + gX3 + gX4;
    }
    if (du) *du = dU;
    if (dxi) *dxi = lambda + dxi_direct;
  }

  OcpProblem p_;
  double rho_;
};

// Per-interval box obtained from the time-dependent bound functions; a
// constant interval value must respect the bounds at both interval endpoints.
inline void interval_bounds(const OcpProblem& p, const ControlGrid& u,
                            Eigen::MatrixXd* lo, Eigen::MatrixXd* hi) {
  const double inf = std::numeric_limits<double>::infinity();
  lo->setConstant(u.N, p.n_u, -inf);
  hi->setConstant(u.N, p.n_u, inf);
  for (int i = 0; i < u.N; ++i) {
    const double ta = u.breakpoints[i], tb = u.breakpoints[i + 1];
    if (p.u_min) {
      const Eigen::VectorXd l = p.u_min(ta).cwiseMax(p.u_min(tb));
      lo->row(i) = l.transpose();
    }
    if (p.u_max) {
      const Eigen::VectorXd m = p.u_max(ta).cwiseMin(p.u_max(tb));
      hi->row(i) = m.transpose();
    }
    for (int j = 0; j < p.n_u; ++j)
      if (!((*lo)(i, j) <= (*hi)(i, j)))
        throw DimensionError("control bounds cross: u_min > u_max");
  }
}

}  // namespace detail

// Objective evaluation: integrates the dynamics by fixed-step RK4 and
// accumulates the running cost with the same RK4 stage quadrature, then adds
// the endpoint cost.  Returns the objective and the state trajectory.
inline std::pair<double, Trajectory> evaluate_cost(const OcpProblem& p,
                                                   const ControlGrid& u,
                                                   const Eigen::VectorXd& xi) {
  detail::OcpEngine eng(p, 0.0);
  detail::OcpEval ev = eng.evaluate(u, xi, true);
  return {ev.f_unpen, std::move(ev.traj)};
}

// Gradient of the objective with respect to the control parameters and the
// initial state.  finite_difference uses relative central differences;
// adjoint reverse-accumulates through the stored RK4 trajectory.  Both modes
// differentiate the same discretely integrated cost.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> gradient(
    const OcpProblem& p, const ControlGrid& u, const Eigen::VectorXd& xi,
    const SolveOptions& opts = {}) {
  opts.validate();
  detail::OcpEngine eng(p, 0.0);
  Eigen::MatrixXd du;
  Eigen::VectorXd dxi;
  eng.gradient(u, xi, opts.grad_mode, opts.fd_step, &du, &dxi);
  return {std::move(du), std::move(dxi)};
}

// Projected-gradient descent with Armijo backtracking on the quadratic-penalty
// relaxation of the constraints.  The control iterate is clipped to its box
// every step; the penalty weight escalates over penalty_rounds rounds (only
// when constraint lists are present).  Returns the best iterate seen, judged
// feasibility-first: among iterates within tol_constraint the lowest objective
// wins, otherwise the smallest violation.
inline SolveResult solve(const OcpProblem& p, const ControlGrid& u0,
                         const Eigen::VectorXd& xi0,
                         const SolveOptions& opts = {}) {
  p.validate();
  opts.validate();
  u0.validate();

  Eigen::MatrixXd lo, hi;
  detail::interval_bounds(p, u0, &lo, &hi);
  const bool xi_dec = p.xi_is_decision;

  ControlGrid u = u0;
  u.values = u.values.cwiseMax(lo).cwiseMin(hi);
  Eigen::VectorXd xi = xi0;
  if (xi_dec) xi = xi.cwiseMax(p.xi_min).cwiseMin(p.xi_max);

  const int rounds = p.has_constraints() ? opts.penalty_rounds : 1;
  const int per_round = opts.max_iters / rounds;
  const int remainder = opts.max_iters - per_round * rounds;

  ControlGrid best_u = u;
  Eigen::VectorXd best_xi = xi;
  bool best_valid = false;
  double best_f = 0.0, best_viol = 0.0;
  auto consider = [&](const ControlGrid& cu, const Eigen::VectorXd& cxi,
                      double f_unpen, double viol) {
    const bool feas = viol <= opts.tol_constraint;
    const bool best_feas = best_viol <= opts.tol_constraint;
    bool better = false;
    if (!best_valid)
      better = true;
    else if (feas && !best_feas)
      better = true;
    else if (feas == best_feas)
      better = feas ? (f_unpen < best_f) : (viol < best_viol);
    if (better) {
      best_u = cu;
      best_xi = cxi;
      best_f = f_unpen;
      best_viol = viol;
      best_valid = true;
    }
  };

  int total_iters = 0;
  double rho = opts.penalty_init;
  double final_rho = p.has_constraints() ? opts.penalty_init : 0.0;
  for (int round = 0; round < rounds; ++round) {
    const double round_rho = p.has_constraints() ? rho : 0.0;
    final_rho = round_rho;
    detail::OcpEngine eng(p, round_rho);
    detail::OcpEval cur = eng.evaluate(u, xi, false);
    consider(u, xi, cur.f_unpen, cur.viol);
    const int iters_budget = per_round + (round == rounds - 1 ? remainder : 0);
    for (int it = 0; it < iters_budget; ++it) {
      Eigen::MatrixXd gu;
      Eigen::VectorXd gxi;
      eng.gradient(u, xi, opts.grad_mode, opts.fd_step, &gu,
                   xi_dec ? &gxi : nullptr);
      // Projected-gradient stationarity measure (unit step).
      const Eigen::MatrixXd u_trial =
          (u.values - gu).cwiseMax(lo).cwiseMin(hi);
      double pg_norm =
          u.values.size() > 0 ? (u.values - u_trial).cwiseAbs().maxCoeff()
                              : 0.0;
      Eigen::VectorXd xi_trial;
      if (xi_dec) {
        xi_trial = (xi - gxi).cwiseMax(p.xi_min).cwiseMin(p.xi_max);
        pg_norm = std::max(pg_norm, (xi - xi_trial).cwiseAbs().maxCoeff());
      }
      if (pg_norm <= opts.tol_grad) break;

      double step = 1.0;
      bool accepted = false;
      ControlGrid u_new = u;
      Eigen::VectorXd xi_new = xi;
      detail::OcpEval ev_new;
      for (int bt = 0; bt < opts.armijo_max_backtracks; ++bt) {
        u_new.values = (u.values - step * gu).cwiseMax(lo).cwiseMin(hi);
        double slope = (gu.cwiseProduct(u_new.values - u.values)).sum();
        if (xi_dec) {
          xi_new = (xi - step * gxi).cwiseMax(p.xi_min).cwiseMin(p.xi_max);
          slope += gxi.dot(xi_new - xi);
        }
        ev_new = eng.evaluate(u_new, xi_new, false);
        if (ev_new.f_pen <= cur.f_pen + opts.armijo_c1 * slope) {
          accepted = true;
          break;
        }
        step *= opts.armijo_backtrack;
      }
      if (!accepted) break;
      u = u_new;
      xi = xi_new;
      cur = ev_new;
      ++total_iters;
      consider(u, xi, cur.f_unpen, cur.viol);
      if (opts.iterate_hook)
        opts.iterate_hook(u, xi, cur.f_pen, cur.viol, round);
    }
    rho *= opts.penalty_growth;
  }

  // Convergence status at the returned iterate, under the final penalty
  // weight.
  detail::OcpEngine eng(p, final_rho);
  detail::OcpEval best_ev = eng.evaluate(best_u, best_xi, true);
  Eigen::MatrixXd gu;
  Eigen::VectorXd gxi;
  eng.gradient(best_u, best_xi, opts.grad_mode, opts.fd_step, &gu,
               xi_dec ? &gxi : nullptr);
  const Eigen::MatrixXd u_trial =
      (best_u.values - gu).cwiseMax(lo).cwiseMin(hi);
  double pg_norm = best_u.values.size() > 0
                       ? (best_u.values - u_trial).cwiseAbs().maxCoeff()
                       : 0.0;
  if (xi_dec) {
    const Eigen::VectorXd xi_trial =
        (best_xi - gxi).cwiseMax(p.xi_min).cwiseMin(p.xi_max);
    pg_norm = std::max(pg_norm, (best_xi - xi_trial).cwiseAbs().maxCoeff());
  }

  SolveResult res;
  res.u_star = best_u;
  res.x_star = std::move(best_ev.traj);
  res.f_star = best_ev.f_unpen;
  res.iterations = total_iters;
  res.constraint_violation = best_ev.viol;
  res.converged =
      pg_norm <= opts.tol_grad && best_ev.viol <= opts.tol_constraint;
  return res;
}

}  // namespace rhmpc
