#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "rhmpc/ci.hpp"
#include "rhmpc/errors.hpp"
#include "rhmpc/integrate.hpp"
#include "rhmpc/mpc.hpp"
#include "rhmpc/observer.hpp"
#include "rhmpc/pid.hpp"
#include "rhmpc/state_space.hpp"

namespace rhmpc {

struct NoiseSpec {
  Eigen::VectorXd sigma_w;  // per-state additive noise std, applied per sample
  Eigen::VectorXd sigma_v;  // per-output measurement noise std
};

// Surrogate two-input/two-output plant simulated in deviation variables
// around a fixed operating point, with actuator saturation applied inside the
// plant, optional per-channel input-gain mismatch, an optional static output
// nonlinearity, and optional Gaussian noise.
class SurrogatePlant {
 public:
  SurrogatePlant(StateSpaceModel core, Eigen::VectorXd u_op,
                 Eigen::VectorXd y_op, Eigen::VectorXd u_min_abs,
                 Eigen::VectorXd u_max_abs,
                 Eigen::VectorXd gain_mismatch = Eigen::VectorXd(),
                 NoiseSpec noise = {}, double nonlin_eps = 0.0,
                 int substeps = 10)
      : core_(std::move(core)),
        u_op_(std::move(u_op)),
        y_op_(std::move(y_op)),
        u_min_(std::move(u_min_abs)),
        u_max_(std::move(u_max_abs)),
        mismatch_(std::move(gain_mismatch)),
        noise_(std::move(noise)),
        eps_(nonlin_eps),
        substeps_(substeps) {
    if (core_.form != ModelForm::continuous)
      throw DimensionError("plant core must be a continuous-form model");
    if (u_op_.size() != core_.n_u || y_op_.size() != core_.n_y)
      throw DimensionError("operating point dimension mismatch");
    if (u_min_.size() != core_.n_u || u_max_.size() != core_.n_u)
      throw DimensionError("input limit dimension mismatch");
    for (int j = 0; j < core_.n_u; ++j)
      if (!(u_min_(j) < u_max_(j)))
        throw DimensionError("input limits must satisfy lower < upper");
    if (mismatch_.size() == 0)
      mismatch_ = Eigen::VectorXd::Ones(core_.n_u);
    if (mismatch_.size() != core_.n_u)
      throw DimensionError("gain mismatch must have one factor per input");
    if (noise_.sigma_w.size() == 0)
      noise_.sigma_w = Eigen::VectorXd::Zero(core_.n_x);
    if (noise_.sigma_v.size() == 0)
      noise_.sigma_v = Eigen::VectorXd::Zero(core_.n_y);
    if (noise_.sigma_w.size() != core_.n_x ||
        noise_.sigma_v.size() != core_.n_y)
      throw DimensionError("noise std dimension mismatch");
    if (noise_.sigma_w.minCoeff() < 0.0 || noise_.sigma_v.minCoeff() < 0.0)
      throw DimensionError("noise stds must be nonnegative");
    if (substeps_ < 1) throw DimensionError("plant requires substeps >= 1");
    reset();
  }

  const StateSpaceModel& core() const { return core_; }
  const Eigen::VectorXd& u_op() const { return u_op_; }
  const Eigen::VectorXd& y_op() const { return y_op_; }
  const Eigen::VectorXd& u_min_abs() const { return u_min_; }
  const Eigen::VectorXd& u_max_abs() const { return u_max_; }
  const Eigen::VectorXd& gain_mismatch() const { return mismatch_; }
  const Eigen::VectorXd& state() const { return x_; }
  double time() const { return t_; }

  void reset() {
    x_ = Eigen::VectorXd::Zero(core_.n_x);
    t_ = 0.0;
  }
  void set_state(const Eigen::VectorXd& x) {
    if (x.size() != core_.n_x) throw DimensionError("state dimension");
    x_ = x;
  }
  void add_state_offset(int index, double offset) {
    if (index < 0 || index >= core_.n_x)
      throw DimensionError("state disturbance index out of range");
    x_(index) += offset;
  }
  void seed_noise(uint64_t seed) { rng_.seed(seed); }

  Eigen::VectorXd clip_input(const Eigen::VectorXd& u_cmd_abs) const {
    return u_cmd_abs.cwiseMax(u_min_).cwiseMin(u_max_);
  }

  // Deterministic noise-free output deviation at the current state, including
  // the optional static nonlinearity y_i += eps * y_i * y_other.
  Eigen::VectorXd measure_deviation(const Eigen::VectorXd& u_dev) const {
    Eigen::VectorXd y = core_.C * x_ + core_.D * u_dev;
    if (eps_ != 0.0 && core_.n_y == 2) {
      const double y0 = y(0), y1 = y(1);
      y(0) += eps_ * y0 * y1;
      y(1) += eps_ * y1 * y0;
    }
    return y;
  }

  Eigen::VectorXd draw_output_noise() {
    Eigen::VectorXd v(core_.n_y);
    for (int i = 0; i < core_.n_y; ++i)
      v(i) = noise_.sigma_v(i) == 0.0 ? 0.0 : noise_.sigma_v(i) * normal_(rng_);
    return v;
  }

  // Clip the absolute command, convert to deviation, integrate the (possibly
  // gain-mismatched) core over dt with RK4 substeps, apply per-sample process
  // noise, and return the absolute noise-free output after the step.
  Eigen::VectorXd plant_step(const Eigen::VectorXd& u_cmd_abs, double dt) {
    if (u_cmd_abs.size() != core_.n_u)
      throw DimensionError("input dimension mismatch");
    if (!(dt > 0.0)) throw DimensionError("plant_step requires dt > 0");
    const Eigen::VectorXd u_dev = clip_input(u_cmd_abs) - u_op_;
    const Eigen::MatrixXd B_eff = core_.B * mismatch_.asDiagonal();
    const double h = dt / substeps_;
    auto f = [&](double, const Eigen::VectorXd& x) {
      return Eigen::VectorXd(core_.A * x + B_eff * u_dev);
    };
    for (int s = 0; s < substeps_; ++s) {
      x_ = detail::rk4_step(f, 0.0, x_, h);
      t_ += h;
      if (!x_.allFinite()) throw DivergenceError(t_);
    }
    for (int i = 0; i < core_.n_x; ++i)
      if (noise_.sigma_w(i) != 0.0) x_(i) += noise_.sigma_w(i) * normal_(rng_);
    if (!x_.allFinite()) throw DivergenceError(t_);
    return y_op_ + measure_deviation(u_dev);
  }

 private:
  StateSpaceModel core_;
  Eigen::VectorXd u_op_, y_op_, u_min_, u_max_, mismatch_;
  NoiseSpec noise_;
  double eps_;
  int substeps_;
  Eigen::VectorXd x_;
  double t_ = 0.0;
  std::mt19937_64 rng_{1};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct ReferenceStep {
  double time = 0.0;
  double value = 0.0;  // absolute units
};

enum class DisturbanceKind { state, output };

struct DisturbanceEvent {
  double time = 0.0;
  DisturbanceKind kind = DisturbanceKind::output;
  int index = 0;
  double offset = 0.0;
  // Output events act as a persistent additive bias from `time` onward;
  // state events add the offset to that state once, at `time`.
};

// Scripted benchmark scenario: per-output reference step schedules (absolute
// units, held between steps) and a disturbance schedule.
struct Scenario {
  double duration = 0.0;
  std::vector<std::vector<ReferenceStep>> reference_schedule;
  std::vector<DisturbanceEvent> disturbance_schedule;

  void validate(int n_y, int n_x) const {
    if (!(duration > 0.0)) throw DimensionError("scenario duration must be > 0");
    if (static_cast<int>(reference_schedule.size()) != n_y)
      throw DimensionError("reference schedule needs one list per output");
    for (const auto& lst : reference_schedule) {
      double prev = -1.0;
      for (const auto& s : lst) {
        if (s.time < 0.0 || s.time > duration)
          throw DimensionError("reference step time outside [0, duration]");
        if (s.time < prev)
          throw DimensionError("reference step times must be non-decreasing");
        prev = s.time;
      }
    }
    for (const auto& d : disturbance_schedule) {
      if (d.time < 0.0 || d.time > duration)
        throw DimensionError("disturbance time outside [0, duration]");
      const int limit = d.kind == DisturbanceKind::state ? n_x : n_y;
      if (d.index < 0 || d.index >= limit)
        throw DimensionError("disturbance index out of range");
    }
  }

  // Reference vector at time t: last scheduled value per output, or the
  // fallback (operating point) before the first step.  Steps take effect at
  // exactly their scheduled time.
  Eigen::VectorXd reference_at(double t, const Eigen::VectorXd& fallback) const {
    Eigen::VectorXd r = fallback;
    for (std::size_t j = 0; j < reference_schedule.size(); ++j)
      for (const auto& s : reference_schedule[j])
        if (s.time <= t + 1e-9) r(static_cast<int>(j)) = s.value;
    return r;
  }

  // Sum of active output biases at time t.
  Eigen::VectorXd output_bias_at(double t, int n_y) const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n_y);
    for (const auto& d : disturbance_schedule)
      if (d.kind == DisturbanceKind::output && d.time <= t + 1e-9)
        b(d.index) += d.offset;
    return b;
  }
};

struct TraceRecord {
  double t = 0.0;
  Eigen::VectorXd r_d, r_mpc, y, y_noisefree, x_true, x_hat, u_command,
      u_applied;
  int solver_iterations = 0;
  bool solver_converged = true;
  bool fallback = false;
};

struct TraceLog {
  double dt_sample = 1.0;
  int n_x = 0, n_u = 0, n_y = 0;
  std::vector<TraceRecord> records;
};

// The full receding-horizon control stack: design model, optimizing controller,
// observer, and conditional-integral reference shaper, all in deviation
// coordinates.
struct RmpcControllerStack {
  StateSpaceModel model;
  RmpcConfig cfg;  // u_min/u_max in deviation units
  LuenbergerObserver observer;
  CiCompensator ci;
  RmpcState state;
};

namespace detail {

struct LoopIo {
  Eigen::VectorXd r_d_abs, y_abs, y_nf_abs;
};

// Shared per-sample measurement assembly: state-jump disturbances scheduled at
// this sample, the noise-free biased output, and the noisy measurement.
inline LoopIo assemble_measurement(SurrogatePlant& plant, const Scenario& sc,
                                   double t, double dt,
                                   const Eigen::VectorXd& u_prev_dev) {
  for (const auto& d : sc.disturbance_schedule)
    if (d.kind == DisturbanceKind::state && d.time > t - dt / 2 &&
        d.time <= t + dt / 2)
      plant.add_state_offset(d.index, d.offset);
  LoopIo io;
  io.r_d_abs = sc.reference_at(t, plant.y_op());
  io.y_nf_abs = plant.y_op() + plant.measure_deviation(u_prev_dev) +
                sc.output_bias_at(t, plant.core().n_y);
  io.y_abs = io.y_nf_abs + plant.draw_output_noise();
  return io;
}

}  // namespace detail

// Closed-loop execution with the primary controller: per sample, measure,
// advance the observer with the current measurement and previous input, shape
// the reference, solve the receding-horizon problem, clip, then integrate the
// plant over one sample interval.  Deterministic for a given seed.
inline TraceLog run_closed_loop(SurrogatePlant& plant,
                                RmpcControllerStack& ctrl, const Scenario& sc,
                                double dt_sample, uint64_t seed) {
  sc.validate(plant.core().n_y, plant.core().n_x);
  plant.reset();
  plant.seed_noise(seed);
  ctrl.ci.reset();
  ctrl.observer.set_x_hat(Eigen::VectorXd::Zero(plant.core().n_x));
  ctrl.state = RmpcState::initial(Eigen::VectorXd::Zero(plant.core().n_u));

  TraceLog log;
  log.dt_sample = dt_sample;
  log.n_x = plant.core().n_x;
  log.n_u = plant.core().n_u;
  log.n_y = plant.core().n_y;
  const int samples = static_cast<int>(std::lround(sc.duration / dt_sample));
  Eigen::VectorXd u_prev_dev = Eigen::VectorXd::Zero(plant.core().n_u);
  for (int k = 0; k < samples; ++k) {
    const double t = k * dt_sample;
    detail::LoopIo io =
        detail::assemble_measurement(plant, sc, t, dt_sample, u_prev_dev);
    const Eigen::VectorXd y_dev = io.y_abs - plant.y_op();
    if (k > 0) ctrl.observer.update(y_dev, u_prev_dev);
    const Eigen::VectorXd r_mpc_dev =
        ctrl.ci.shape_reference(io.r_d_abs - plant.y_op(), y_dev);
    const Eigen::VectorXd u_dev = control_step(
        ctrl.state, ctrl.model, ctrl.observer.x_hat(), r_mpc_dev, ctrl.cfg);
    const Eigen::VectorXd u_cmd_abs = plant.u_op() + u_dev;
    const Eigen::VectorXd u_app_abs = plant.clip_input(u_cmd_abs);

    TraceRecord rec;
    rec.t = t;
    rec.r_d = io.r_d_abs;
    rec.r_mpc = plant.y_op() + r_mpc_dev;
    rec.y = io.y_abs;
    rec.y_noisefree = io.y_nf_abs;
    rec.x_true = plant.state();
    rec.x_hat = ctrl.observer.x_hat();
    rec.u_command = u_cmd_abs;
    rec.u_applied = u_app_abs;
    rec.solver_iterations = ctrl.state.last_result.iterations;
    rec.solver_converged = ctrl.state.last_result.converged;
    rec.fallback = ctrl.state.last_fallback;
    log.records.push_back(std::move(rec));

    plant.plant_step(u_app_abs, dt_sample);
    u_prev_dev = u_app_abs - plant.u_op();
  }
  return log;
}

// Closed-loop execution with the decentralized PID baseline.  The trace keeps
// the same schema; estimator columns are zero and the shaped reference equals
// the raw reference.
inline TraceLog run_closed_loop(SurrogatePlant& plant, DecentralizedPid& pid,
                                const Scenario& sc, double dt_sample,
                                uint64_t seed) {
  sc.validate(plant.core().n_y, plant.core().n_x);
  plant.reset();
  plant.seed_noise(seed);
  pid.reset();

  TraceLog log;
  log.dt_sample = dt_sample;
  log.n_x = plant.core().n_x;
  log.n_u = plant.core().n_u;
  log.n_y = plant.core().n_y;
  const int samples = static_cast<int>(std::lround(sc.duration / dt_sample));
  Eigen::VectorXd u_prev_dev = Eigen::VectorXd::Zero(plant.core().n_u);
  for (int k = 0; k < samples; ++k) {
    const double t = k * dt_sample;
    detail::LoopIo io =
        detail::assemble_measurement(plant, sc, t, dt_sample, u_prev_dev);
    const Eigen::VectorXd u_cmd_abs = pid.pid_step(io.r_d_abs, io.y_abs);
    const Eigen::VectorXd u_app_abs = plant.clip_input(u_cmd_abs);

    TraceRecord rec;
    rec.t = t;
    rec.r_d = io.r_d_abs;
    rec.r_mpc = io.r_d_abs;
    rec.y = io.y_abs;
    rec.y_noisefree = io.y_nf_abs;
    rec.x_true = plant.state();
    rec.x_hat = Eigen::VectorXd::Zero(plant.core().n_x);
    rec.u_command = u_cmd_abs;
    rec.u_applied = u_app_abs;
    log.records.push_back(std::move(rec));

    plant.plant_step(u_app_abs, dt_sample);
    u_prev_dev = u_app_abs - plant.u_op();
  }
  return log;
}

}  // namespace rhmpc
