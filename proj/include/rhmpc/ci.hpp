#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "rhmpc/errors.hpp"

namespace rhmpc {

// Conditional-integral reference shaper.  Each call accumulates the current
// tracking error per channel only while its magnitude is strictly below the
// channel threshold, and returns the reference biased by the scaled
// accumulator.  Freezing accumulation during large transients removes
// steady-state error without transient windup.
class CiCompensator {
 public:
  CiCompensator(const Eigen::VectorXd& K_I_diag, const Eigen::VectorXd& e_th)
      : K_I_(K_I_diag), e_th_(e_th), accum_(Eigen::VectorXd::Zero(e_th.size())) {
    if (K_I_.size() != e_th_.size())
      throw DimensionError("K_I and e_th must have equal length");
    for (int i = 0; i < K_I_.size(); ++i) {
      if (!(K_I_(i) >= 0.0))
        throw DimensionError("K_I entries must be nonnegative");
      if (!(e_th_(i) >= 0.0))
        throw DimensionError("e_th entries must be nonnegative");
    }
  }

  int n_y() const { return static_cast<int>(e_th_.size()); }
  const Eigen::VectorXd& K_I_diag() const { return K_I_; }
  const Eigen::VectorXd& e_th() const { return e_th_; }
  const Eigen::VectorXd& accum() const { return accum_; }

  // Per channel j: e_j = r_d_j - y_j; accumulate when |e_j| < e_th_j; return
  // r_d + K_I * accum.
  Eigen::VectorXd shape_reference(const Eigen::VectorXd& r_d,
                                  const Eigen::VectorXd& y) {
    if (r_d.size() != n_y() || y.size() != n_y())
      throw DimensionError("reference/measurement dimension mismatch");
    for (int j = 0; j < n_y(); ++j) {
      const double e = r_d(j) - y(j);
      if (std::abs(e) < e_th_(j)) accum_(j) += e;
    }
    return r_d + K_I_.cwiseProduct(accum_);
  }

  void reset() { accum_.setZero(); }

 private:
  Eigen::VectorXd K_I_, e_th_, accum_;
};

inline Eigen::VectorXd shape_reference(CiCompensator& ci,
                                       const Eigen::VectorXd& r_d,
                                       const Eigen::VectorXd& y) {
  return ci.shape_reference(r_d, y);
}

}  // namespace rhmpc
