#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "rhmpc/config.hpp"
#include "rhmpc/errors.hpp"
#include "rhmpc/ocp.hpp"

namespace rhmpc {

// Built-in run configuration: the surrogate refrigeration-like 2x2 plant at
// its operating point, the receding-horizon controller with its shipped
// tuning, the tuned PID baseline, and the scripted benchmark scenario.
inline RunConfig default_config() {
  RunConfig rc;
  rc.seed = 1;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
  A.diagonal() << -1.05, -0.85, -0.38, -0.22;
  Eigen::MatrixXd B(4, 2);
  B << -0.136, 0.388, 0.137, -0.187, -0.003, -0.229, -0.014, 0.07;
  Eigen::MatrixXd C(2, 4);
  C << 1.01, 1.07, 0.40, 0.02, 0.29, 0.11, 1.06, 0.91;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  rc.model = StateSpaceModel::make_continuous(A, B, C, D);

  rc.u_op = (Eigen::VectorXd(2) << 48.79, 36.45).finished();
  rc.y_op = (Eigen::VectorXd(2) << -22.15, 14.65).finished();
  rc.u_min_abs = (Eigen::VectorXd(2) << 10.0, 30.0).finished();
  rc.u_max_abs = (Eigen::VectorXd(2) << 100.0, 50.0).finished();
  rc.gain_mismatch = Eigen::VectorXd::Ones(2);
  rc.sigma_w = Eigen::VectorXd::Zero(4);
  rc.sigma_v = Eigen::VectorXd::Zero(2);
  rc.nonlin_eps = 0.0;

  rc.controller_type = "rmpc";
  rc.W_y = Eigen::MatrixXd::Zero(2, 2);
  rc.W_y.diagonal() << 2.5, 2.0;
  rc.N_p = 10;
  rc.N_u = 1;
  rc.dt_sample = 1.0;
  rc.warm_start = true;
  rc.solver = RmpcConfig::default_solver_options();

  // Baseline gains from the documented tuning procedure (step-response fits,
  // SIMC PI rules, then one common detune factor chosen on the benchmark).
  rc.pid_loops[0] = PidLoop{-4.28503536392296, -1.2420392359196986, 0.0, 1.0};
  rc.pid_loops[1] = PidLoop{-7.535323943747584, -1.1040767683146644, 0.0, 1.0};

  rc.ci_K_I = (Eigen::VectorXd(2) << 0.2, 0.25).finished();
  rc.ci_e_th = (Eigen::VectorXd(2) << 0.05, 0.3).finished();
  rc.observer_poles = {-1.0, -2.0, -3.0, -4.0};
  rc.observer_substeps = 10;

  rc.scenario.duration = 1500.0;
  rc.scenario.reference_schedule = {
      {{0.0, -22.15}, {120.0, -22.45}, {1020.0, -22.15}},
      {{0.0, 14.65}, {120.0, 15.25}, {420.0, 15.85}}};
  rc.scenario.disturbance_schedule = {
      {720.0, DisturbanceKind::output, 1, 0.25}};

  rc.events = {{120.0, 300.0, 0},
               {420.0, 300.0, 1},
               {720.0, 300.0, 1},
               {1020.0, 300.0, 0}};
  rc.weights = {1, 1, 1, 1, 1, 1, 1, 1};
  return rc;
}

// Load a JSON config file and apply it over the built-in defaults, rejecting
// unknown keys.
inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return apply_config_json(j, default_config());
}

// A self-contained optimal-control test problem: the problem, an initial
// control guess, and the initial state (fixed unless xi_is_decision).
struct OcpPreset {
  std::string name;
  OcpProblem problem;
  ControlGrid u0;
  Eigen::VectorXd xi;
};

namespace detail {

// minimize x(b)^2 + integral u^2 dt,  dx/dt = u,  x(0) = 1, over [0, 1].
// For any interval count the optimum is u = -0.5 with objective 0.5.
inline OcpPreset lq_integrator_preset(const std::string& name, int intervals) {
  OcpPreset ps;
  ps.name = name;
  OcpProblem& p = ps.problem;
  p.a = 0.0;
  p.b = 1.0;
  p.n_x = 1;
  p.n_u = 1;
  p.dt_step = 0.05;
  p.dynamics = [](double, const Eigen::VectorXd&, const Eigen::VectorXd& u) {
    return Eigen::VectorXd(u);
  };
  p.dynamics_jac_x = [](double, const Eigen::VectorXd&,
                        const Eigen::VectorXd&) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Zero(1, 1));
  };
  p.dynamics_jac_u = [](double, const Eigen::VectorXd&,
                        const Eigen::VectorXd&) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Ones(1, 1));
  };
  p.running_cost = [](double, const Eigen::VectorXd&,
                      const Eigen::VectorXd& u) { return u.squaredNorm(); };
  p.running_cost_grad_x = [](double, const Eigen::VectorXd&,
                             const Eigen::VectorXd&) {
    return Eigen::VectorXd(Eigen::VectorXd::Zero(1));
  };
  p.running_cost_grad_u = [](double, const Eigen::VectorXd&,
                             const Eigen::VectorXd& u) {
    return Eigen::VectorXd(2.0 * u);
  };
  p.endpoint_cost = [](const Eigen::VectorXd&, const Eigen::VectorXd& xb) {
    return xb.squaredNorm();
  };
  p.endpoint_cost_grad_xi = [](const Eigen::VectorXd& xi,
                               const Eigen::VectorXd&) {
    return Eigen::VectorXd(Eigen::VectorXd::Zero(xi.size()));
  };
  p.endpoint_cost_grad_xb = [](const Eigen::VectorXd&,
                               const Eigen::VectorXd& xb) {
    return Eigen::VectorXd(2.0 * xb);
  };
  ps.u0 = ControlGrid::uniform(0.0, 1.0, intervals, 1);
  ps.xi = Eigen::VectorXd::Ones(1);
  return ps;
}

// minimize integral (u - 1)^2 dt,  dx/dt = u,  u in [0, 0.5]:
// the bound is active and u = 0.5 with objective 0.25.
inline OcpPreset clipped_preset() {
  OcpPreset ps = lq_integrator_preset("clipped", 2);
  OcpProblem& p = ps.problem;
  p.running_cost = [](double, const Eigen::VectorXd&,
                      const Eigen::VectorXd& u) {
    return (u.array() - 1.0).matrix().squaredNorm();
  };
  p.running_cost_grad_u = [](double, const Eigen::VectorXd&,
                             const Eigen::VectorXd& u) {
    return Eigen::VectorXd(2.0 * (u.array() - 1.0).matrix());
  };
  p.endpoint_cost = nullptr;
  p.endpoint_cost_grad_xi = nullptr;
  p.endpoint_cost_grad_xb = nullptr;
  p.u_min = [](double) { return Eigen::VectorXd(Eigen::VectorXd::Zero(1)); };
  p.u_max = [](double) {
    return Eigen::VectorXd(Eigen::VectorXd::Constant(1, 0.5));
  };
  ps.xi = Eigen::VectorXd::Zero(1);
  return ps;
}

// minimize integral (x^2 + u^2) dt,  dx/dt = -x + u,  x(0) = 1, 5 intervals.
inline OcpPreset lq_scalar_preset() {
  OcpPreset ps;
  ps.name = "lq-scalar";
  OcpProblem& p = ps.problem;
  p.a = 0.0;
  p.b = 1.0;
  p.n_x = 1;
  p.n_u = 1;
  p.dt_step = 0.05;
  p.dynamics = [](double, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return Eigen::VectorXd(-x + u);
  };
  p.dynamics_jac_x = [](double, const Eigen::VectorXd&,
                        const Eigen::VectorXd&) {
    return Eigen::MatrixXd(-Eigen::MatrixXd::Ones(1, 1));
  };
  p.dynamics_jac_u = [](double, const Eigen::VectorXd&,
                        const Eigen::VectorXd&) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Ones(1, 1));
  };
  p.running_cost = [](double, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& u) {
    return x.squaredNorm() + u.squaredNorm();
  };
  p.running_cost_grad_x = [](double, const Eigen::VectorXd& x,
                             const Eigen::VectorXd&) {
    return Eigen::VectorXd(2.0 * x);
  };
  p.running_cost_grad_u = [](double, const Eigen::VectorXd&,
                             const Eigen::VectorXd& u) {
    return Eigen::VectorXd(2.0 * u);
  };
  ps.u0 = ControlGrid::uniform(0.0, 1.0, 5, 1);
  ps.xi = Eigen::VectorXd::Ones(1);
  return ps;
}

// No cost at all: objective and gradients are exactly zero.
inline OcpPreset zero_cost_preset() {
  OcpPreset ps;
  ps.name = "zero-cost";
  OcpProblem& p = ps.problem;
  p.a = 0.0;
  p.b = 1.0;
  p.n_x = 2;
  p.n_u = 1;
  p.dt_step = 0.05;
  p.dynamics = [](double, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    Eigen::VectorXd dx(2);
    dx << -x(0) + u(0), -0.5 * x(1);
    return dx;
  };
  p.dynamics_jac_x = [](double, const Eigen::VectorXd&,
                        const Eigen::VectorXd&) {
    Eigen::MatrixXd J(2, 2);
    J << -1.0, 0.0, 0.0, -0.5;
    return J;
  };
  p.dynamics_jac_u = [](double, const Eigen::VectorXd&,
                        const Eigen::VectorXd&) {
    Eigen::MatrixXd J(2, 1);
    J << 1.0, 0.0;
    return J;
  };
  ps.u0 = ControlGrid::uniform(0.0, 1.0, 3, 1);
  ps.u0.values.setConstant(0.3);
  ps.xi = (Eigen::VectorXd(2) << 1.0, -1.0).finished();
  return ps;
}

}  // namespace detail

// Named optimal-control presets used by the command-line tools and tests.
inline OcpPreset make_ocp_preset(const std::string& name) {
  if (name == "lq-1interval") return detail::lq_integrator_preset(name, 1);
  if (name == "lq-4interval") return detail::lq_integrator_preset(name, 4);
  if (name == "clipped") return detail::clipped_preset();
  if (name == "lq-scalar") return detail::lq_scalar_preset();
  if (name == "zero-cost") return detail::zero_cost_preset();
  throw ConfigError("unknown optimal-control preset: " + name);
}

// One gradient-check case: a problem plus the evaluation point.
struct GradcheckCase {
  std::string name;
  OcpProblem problem;
  ControlGrid u;
  Eigen::VectorXd xi;
};

// Seeded battery of random smooth problems (dense linear dynamics, optional
// tanh state perturbation, quadratic costs) with full analytic derivatives,
// spanning 1-4 states, 1-2 controls, and 1-10 control intervals.
inline std::vector<GradcheckCase> make_gradcheck_battery(int count = 24) {
  std::vector<GradcheckCase> cases;
  for (int idx = 0; idx < count; ++idx) {
    std::mt19937_64 rng(9000 + static_cast<std::uint64_t>(idx));
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const int n_x = 1 + static_cast<int>(rng() % 4);
    const int n_u = 1 + static_cast<int>(rng() % 2);
    const int N = 1 + static_cast<int>(rng() % 10);
    const double b = (idx % 3 == 0) ? 0.5 : (idx % 3 == 1 ? 1.0 : 2.0);
    const double tanh_scale = (idx % 2 == 0) ? 0.0 : 0.3;

    Eigen::MatrixXd A(n_x, n_x), B(n_x, n_u), M(n_x, n_x), Rm(n_u, n_u);
    for (int i = 0; i < n_x; ++i)
      for (int j = 0; j < n_x; ++j) A(i, j) = 0.8 * unif(rng);
    A.diagonal().array() -= 1.2;
    for (int i = 0; i < n_x; ++i)
      for (int j = 0; j < n_u; ++j) B(i, j) = unif(rng);
    for (int i = 0; i < n_x; ++i)
      for (int j = 0; j < n_x; ++j) M(i, j) = unif(rng);
    for (int i = 0; i < n_u; ++i)
      for (int j = 0; j < n_u; ++j) Rm(i, j) = unif(rng);
    const Eigen::MatrixXd Q =
        M.transpose() * M + 0.1 * Eigen::MatrixXd::Identity(n_x, n_x);
    const Eigen::MatrixXd R =
        Rm.transpose() * Rm + 0.1 * Eigen::MatrixXd::Identity(n_u, n_u);
    const Eigen::MatrixXd P =
        0.5 * Q + 0.2 * Eigen::MatrixXd::Identity(n_x, n_x);
    Eigen::VectorXd q(n_x), xt(n_x);
    for (int i = 0; i < n_x; ++i) {
      q(i) = 0.3 * unif(rng);
      xt(i) = unif(rng);
    }
    const bool xi_decision = (idx % 4 == 3);
    const bool endpoint_uses_xi = (idx % 3 == 2);

    GradcheckCase gc;
    gc.name = "battery-" + std::to_string(idx);
    OcpProblem& p = gc.problem;
    p.a = 0.0;
    p.b = b;
    p.n_x = n_x;
    p.n_u = n_u;
    p.dt_step = b / (N * 4.0);
    p.dynamics = [A, B, tanh_scale](double, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& u) {
      return Eigen::VectorXd(A * x + B * u +
                             tanh_scale * x.array().tanh().matrix());
    };
    p.dynamics_jac_x = [A, tanh_scale](double, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd&) {
      Eigen::MatrixXd J = A;
      J.diagonal() +=
          (tanh_scale * (1.0 - x.array().tanh().square())).matrix();
      return J;
    };
    p.dynamics_jac_u = [B](double, const Eigen::VectorXd&,
                           const Eigen::VectorXd&) { return B; };
    p.running_cost = [Q, R, q](double, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u) {
      return x.dot(Q * x) + u.dot(R * u) + q.dot(x);
    };
    p.running_cost_grad_x = [Q, q](double, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd&) {
      return Eigen::VectorXd(2.0 * Q * x + q);
    };
    p.running_cost_grad_u = [R](double, const Eigen::VectorXd&,
                                const Eigen::VectorXd& u) {
      return Eigen::VectorXd(2.0 * R * u);
    };
    if (endpoint_uses_xi) {
      p.endpoint_cost = [P](const Eigen::VectorXd& xi,
                            const Eigen::VectorXd& xb) {
        return (xb - xi).dot(P * (xb - xi));
      };
      p.endpoint_cost_grad_xi = [P](const Eigen::VectorXd& xi,
                                    const Eigen::VectorXd& xb) {
        return Eigen::VectorXd(-2.0 * P * (xb - xi));
      };
      p.endpoint_cost_grad_xb = [P](const Eigen::VectorXd& xi,
                                    const Eigen::VectorXd& xb) {
        return Eigen::VectorXd(2.0 * P * (xb - xi));
      };
    } else {
      p.endpoint_cost = [P, xt](const Eigen::VectorXd&,
                                const Eigen::VectorXd& xb) {
        return (xb - xt).dot(P * (xb - xt));
      };
      p.endpoint_cost_grad_xi = [n_x](const Eigen::VectorXd&,
                                      const Eigen::VectorXd&) {
        return Eigen::VectorXd(Eigen::VectorXd::Zero(n_x));
      };
      p.endpoint_cost_grad_xb = [P, xt](const Eigen::VectorXd&,
                                        const Eigen::VectorXd& xb) {
        return Eigen::VectorXd(2.0 * P * (xb - xt));
      };
    }
    if (xi_decision) {
      p.xi_is_decision = true;
      p.xi_min = Eigen::VectorXd::Constant(n_x, -1.0);
      p.xi_max = Eigen::VectorXd::Constant(n_x, 1.0);
    }

    gc.u = ControlGrid::uniform(0.0, b, N, n_u);
    for (int i = 0; i < gc.u.values.rows(); ++i)
      for (int j = 0; j < gc.u.values.cols(); ++j)
        gc.u.values(i, j) = unif(rng);
    gc.xi = Eigen::VectorXd(n_x);
    for (int i = 0; i < n_x; ++i) gc.xi(i) = 0.8 * unif(rng);
    cases.push_back(std::move(gc));
  }
  return cases;
}

}  // namespace rhmpc
