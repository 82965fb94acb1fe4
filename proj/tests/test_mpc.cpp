#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "rhmpc/mpc.hpp"
#include "rhmpc/presets.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace rhmpc;

namespace {

RmpcConfig frozen_plant_config(const RunConfig& rc) {
  RmpcConfig cfg;
  cfg.W_y = rc.W_y;
  cfg.N_p = rc.N_p;
  cfg.N_u = rc.N_u;
  cfg.dt_sample = rc.dt_sample;
  cfg.u_min = rc.u_min_abs - rc.u_op;
  cfg.u_max = rc.u_max_abs - rc.u_op;
  cfg.solver = rc.solver;
  cfg.warm_start = rc.warm_start;
  return cfg;
}

}  // namespace

TEST(RmpcConfig, ValidationRejectsBadWeightAndHorizons) {
  const RunConfig rc = default_config();
  RmpcConfig cfg = frozen_plant_config(rc);
  EXPECT_NO_THROW(cfg.validate(2, 2));

  RmpcConfig bad = cfg;
  bad.W_y(0, 1) = 5.0;  // not symmetric
  EXPECT_THROW(bad.validate(2, 2), DimensionError);

  bad = cfg;
  bad.W_y = -MatrixXd::Identity(2, 2);  // not positive definite
  EXPECT_THROW(bad.validate(2, 2), DimensionError);

  bad = cfg;
  bad.N_u = bad.N_p + 1;  // control horizon beyond prediction horizon
  EXPECT_THROW(bad.validate(2, 2), DimensionError);

  bad = cfg;
  bad.N_p = 0;
  EXPECT_THROW(bad.validate(2, 2), DimensionError);

  bad = cfg;
  bad.u_min = bad.u_max;
  EXPECT_THROW(bad.validate(2, 2), DimensionError);
}

TEST(BuildOcp, HorizonAndGridStructure) {
  const RunConfig rc = default_config();
  const RmpcConfig cfg = frozen_plant_config(rc);
  const OcpProblem p = build_ocp(rc.model, VectorXd::Zero(4),
                                 VectorXd::Zero(2), cfg);
  EXPECT_DOUBLE_EQ(p.a, 0.0);
  EXPECT_DOUBLE_EQ(p.b, cfg.N_p * cfg.dt_sample);
  EXPECT_DOUBLE_EQ(p.dt_step, cfg.dt_sample / 10.0);
  EXPECT_EQ(p.n_x, 4);
  EXPECT_EQ(p.n_u, 2);
  EXPECT_FALSE(p.xi_is_decision);
  EXPECT_FALSE(p.has_constraints());
  EXPECT_TRUE((p.u_min(3.7) - cfg.u_min).isZero(0.0));
  EXPECT_TRUE((p.u_max(3.7) - cfg.u_max).isZero(0.0));
}

TEST(BuildOcp, CostIsZeroOnlyAtTheReference) {
  const RunConfig rc = default_config();
  const RmpcConfig cfg = frozen_plant_config(rc);
  const VectorXd r = (VectorXd(2) << 0.3, -0.6).finished();
  const OcpProblem p = build_ocp(rc.model, VectorXd::Zero(4), r, cfg);
  // Zero state, zero input, nonzero reference: running cost is e' W e.
  const VectorXd e = -r;
  EXPECT_NEAR(p.running_cost(0.0, VectorXd::Zero(4), VectorXd::Zero(2)),
              e.dot(rc.W_y * e), 1e-14);
  EXPECT_NEAR(p.endpoint_cost(VectorXd::Zero(4), VectorXd::Zero(4)),
              e.dot(rc.W_y * e), 1e-14);
}

TEST(ControlStep, MatchesDenseQuadraticOracle) {
  // With one control interval the shooting objective is an exact quadratic
  // f(u) = c + g'u + 0.5 u'H u; recover H and g by second differences of the
  // objective and compare the solver's step with the interior minimizer.
  const RunConfig rc = default_config();
  RmpcConfig cfg = frozen_plant_config(rc);
  ASSERT_EQ(cfg.N_u, 1);
  cfg.solver.max_iters = 1000;  // allow full convergence for the oracle check
  cfg.solver.tol_grad = 1e-7;

  const VectorXd x_hat = (VectorXd(4) << 0.1, -0.2, 0.05, 0.3).finished();
  const VectorXd r = (VectorXd(2) << -0.3, 0.6).finished();
  const OcpProblem p = build_ocp(rc.model, x_hat, r, cfg);

  auto f_at = [&](const VectorXd& u_val) {
    ControlGrid u = ControlGrid::uniform(p.a, p.b, 1, 2);
    u.values.row(0) = u_val.transpose();
    return evaluate_cost(p, u, x_hat).first;
  };
  const double h = 1e-3;
  const double f0 = f_at(VectorXd::Zero(2));
  VectorXd g(2);
  MatrixXd H(2, 2);
  for (int i = 0; i < 2; ++i) {
    VectorXd ei = VectorXd::Zero(2);
    ei(i) = h;
    g(i) = (f_at(ei) - f_at(-ei)) / (2.0 * h);
    H(i, i) = (f_at(ei) - 2.0 * f0 + f_at(-ei)) / (h * h);
  }
  VectorXd e01 = VectorXd::Zero(2);
  e01(0) = h;
  VectorXd e10 = VectorXd::Zero(2);
  e10(1) = h;
  H(0, 1) = H(1, 0) =
      (f_at(e01 + e10) - f_at(e01 - e10) - f_at(e10 - e01) + f_at(-e01 - e10)) /
      (4.0 * h * h);

  const VectorXd u_opt = H.ldlt().solve(-g);
  ASSERT_TRUE((u_opt.array() > cfg.u_min.array()).all());
  ASSERT_TRUE((u_opt.array() < cfg.u_max.array()).all());

  RmpcState state = RmpcState::initial(VectorXd::Zero(2));
  const VectorXd u = control_step(state, rc.model, x_hat, r, cfg);
  EXPECT_LT((u - u_opt).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_TRUE(state.last_result.converged);
  EXPECT_FALSE(state.last_fallback);
}

TEST(ControlStep, RespectsTightBounds) {
  const RunConfig rc = default_config();
  RmpcConfig cfg = frozen_plant_config(rc);
  cfg.u_min = (VectorXd(2) << -0.01, -0.01).finished();
  cfg.u_max = (VectorXd(2) << 0.01, 0.01).finished();
  RmpcState state = RmpcState::initial(VectorXd::Zero(2));
  const VectorXd r = (VectorXd(2) << -5.0, 5.0).finished();
  const VectorXd u =
      control_step(state, rc.model, VectorXd::Zero(4), r, cfg);
  for (int j = 0; j < 2; ++j) {
    EXPECT_GE(u(j), cfg.u_min(j));
    EXPECT_LE(u(j), cfg.u_max(j));
  }
}

TEST(ControlStep, WarmStartDoesNotLoseGroundAtConvergedBudget) {
  const RunConfig rc = default_config();
  RmpcConfig cfg = frozen_plant_config(rc);
  cfg.N_u = 5;  // multi-interval plan so the shift is nontrivial
  cfg.solver.max_iters = 400;
  cfg.solver.grad_mode = GradMode::adjoint;

  const VectorXd x_hat = (VectorXd(4) << 0.2, -0.1, 0.4, -0.3).finished();
  const VectorXd r = (VectorXd(2) << -0.4, 0.5).finished();
  const OcpProblem p = build_ocp(rc.model, x_hat, r, cfg);

  // Cold solve.
  RmpcState cold = RmpcState::initial(VectorXd::Zero(2));
  control_step(cold, rc.model, x_hat, r, cfg);
  const double f_cold =
      evaluate_cost(p, cold.last_result.u_star, x_hat).first;

  // Warm solve of the same problem seeded with the cold plan.
  RmpcState warm = cold;
  control_step(warm, rc.model, x_hat, r, cfg);
  const double f_warm =
      evaluate_cost(p, warm.last_result.u_star, x_hat).first;

  EXPECT_LE(f_warm, f_cold + 1e-9);
}

TEST(ControlStep, ColdStartUsesClippedPreviousInput) {
  const RunConfig rc = default_config();
  RmpcConfig cfg = frozen_plant_config(rc);
  cfg.warm_start = false;
  cfg.solver.max_iters = 0;  // no descent: the answer is the initial guess
  RmpcState state = RmpcState::initial((VectorXd(2) << 500.0, -500.0).finished());
  const VectorXd u =
      control_step(state, rc.model, VectorXd::Zero(4), VectorXd::Zero(2), cfg);
  EXPECT_DOUBLE_EQ(u(0), cfg.u_max(0));
  EXPECT_DOUBLE_EQ(u(1), cfg.u_min(1));
  EXPECT_FALSE(state.last_result.converged);
}

TEST(ControlStep, DivergingModelFallsBackToPreviousInput) {
  // A strongly unstable design model overflows inside the horizon; the
  // controller must catch the divergence, flag it, and hold the previous
  // (clipped) input.
  MatrixXd A = 80.0 * MatrixXd::Identity(2, 2);
  MatrixXd B = MatrixXd::Identity(2, 2);
  MatrixXd C = MatrixXd::Identity(2, 2);
  MatrixXd D = MatrixXd::Zero(2, 2);
  const auto model = StateSpaceModel::make_continuous(A, B, C, D);

  RmpcConfig cfg;
  cfg.W_y = MatrixXd::Identity(2, 2);
  cfg.N_p = 10;
  cfg.N_u = 1;
  cfg.dt_sample = 1.0;
  cfg.u_min = VectorXd::Constant(2, -1.0);
  cfg.u_max = VectorXd::Constant(2, 1.0);

  RmpcState state = RmpcState::initial((VectorXd(2) << 0.5, -2.0).finished());
  const VectorXd u =
      control_step(state, model, VectorXd::Ones(2), VectorXd::Zero(2), cfg);
  EXPECT_TRUE(state.last_fallback);
  EXPECT_DOUBLE_EQ(u(0), 0.5);
  EXPECT_DOUBLE_EQ(u(1), -1.0);  // previous input clipped into the box
}

TEST(ControlStep, ZeroErrorNeedsNoControlMotion) {
  const RunConfig rc = default_config();
  const RmpcConfig cfg = frozen_plant_config(rc);
  RmpcState state = RmpcState::initial(VectorXd::Zero(2));
  const VectorXd u =
      control_step(state, rc.model, VectorXd::Zero(4), VectorXd::Zero(2), cfg);
  EXPECT_LT(u.cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_TRUE(state.last_result.converged);
}
