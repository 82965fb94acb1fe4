#pragma once

#include <Eigen/Dense>
#include <array>

#include "rhmpc/errors.hpp"

namespace rhmpc {

// One positional PID loop: u = K_p e + I + D_f, with I the integral state
// (updated by K_i e dt) and D_f a first-order-filtered derivative with time
// constant T_f.
struct PidLoop {
  double K_p = 0.0;
  double K_i = 0.0;
  double K_d = 0.0;
  double T_f = 1.0;  // derivative filter time constant, seconds
};

// Two independent PID loops with the conventional refrigeration pairing:
// loop 0 drives input 0 (expansion valve) from the output-1 (superheat)
// error, loop 1 drives input 1 (compressor speed) from the output-0 error.
// Anti-windup is clamping: the integrator of a loop is frozen for any sample
// whose unclipped command falls outside the actuator limits.
class DecentralizedPid {
 public:
  DecentralizedPid(const std::array<PidLoop, 2>& loops, double dt_sample,
                   const Eigen::VectorXd& u_op, const Eigen::VectorXd& u_min,
                   const Eigen::VectorXd& u_max)
      : loops_(loops),
        dt_(dt_sample),
        u_op_(u_op),
        u_min_(u_min),
        u_max_(u_max) {
    if (!(dt_ > 0.0)) throw DimensionError("PID requires dt_sample > 0");
    if (u_op_.size() != 2 || u_min_.size() != 2 || u_max_.size() != 2)
      throw DimensionError("decentralized PID is a 2x2 controller");
    for (int j = 0; j < 2; ++j) {
      if (!(u_min_(j) < u_max_(j)))
        throw DimensionError("PID input limits must satisfy u_min < u_max");
      if (!(loops_[j].T_f > 0.0))
        throw DimensionError("PID derivative filter must satisfy T_f > 0");
    }
    reset();
  }

  void reset() {
    integ_.setZero(2);
    deriv_.setZero(2);
    prev_e_.setZero(2);
    first_ = true;
  }

  Eigen::VectorXd integrator() const { return integ_; }

  // One sample: returns the clipped absolute command.
  Eigen::VectorXd pid_step(const Eigen::VectorXd& r_d,
                           const Eigen::VectorXd& y) {
    if (r_d.size() != 2 || y.size() != 2)
      throw DimensionError("PID expects two references and two measurements");
    // Pairing: loop 0 (input 0) sees the channel-1 error, loop 1 (input 1)
    // sees the channel-0 error.
    Eigen::Vector2d e;
    e << r_d(1) - y(1), r_d(0) - y(0);
    if (first_) {
      prev_e_ = e;
      first_ = false;
    }
    Eigen::VectorXd cand(2), u(2);
    for (int j = 0; j < 2; ++j) {
      const PidLoop& L = loops_[j];
      deriv_(j) = (L.T_f * deriv_(j) + L.K_d * (e(j) - prev_e_(j))) /
                  (L.T_f + dt_);
      cand(j) = u_op_(j) + L.K_p * e(j) + integ_(j) + deriv_(j);
      u(j) = std::min(std::max(cand(j), u_min_(j)), u_max_(j));
      const bool clipped = cand(j) < u_min_(j) || cand(j) > u_max_(j);
      if (!clipped) integ_(j) += L.K_i * e(j) * dt_;
      prev_e_(j) = e(j);
    }
    return u;
  }

 private:
  std::array<PidLoop, 2> loops_;
  double dt_;
  Eigen::VectorXd u_op_, u_min_, u_max_;
  Eigen::Vector2d integ_, deriv_, prev_e_;
  bool first_ = true;
};

}  // namespace rhmpc
