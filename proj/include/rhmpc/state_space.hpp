#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "rhmpc/errors.hpp"

namespace rhmpc {

enum class ModelForm { continuous, discrete };

// Linear time-invariant state-space quadruple.  Continuous form represents
// dx/dt = A x + B u, y = C x + D u; discrete form represents
// x[k+1] = A x[k] + B u[k], y[k] = C x[k] + D u[k] at fixed sample time dt.
struct StateSpaceModel {
  Eigen::MatrixXd A, B, C, D;
  int n_x = 0, n_u = 0, n_y = 0;
  ModelForm form = ModelForm::continuous;
  double dt = 0.0;  // sample time; meaningful only for discrete form

  static StateSpaceModel make_continuous(const Eigen::MatrixXd& A,
                                         const Eigen::MatrixXd& B,
                                         const Eigen::MatrixXd& C,
                                         const Eigen::MatrixXd& D) {
    StateSpaceModel m;
    m.A = A;
    m.B = B;
    m.C = C;
    m.D = D;
    m.n_x = static_cast<int>(A.rows());
    m.n_u = static_cast<int>(B.cols());
    m.n_y = static_cast<int>(C.rows());
    m.form = ModelForm::continuous;
    m.validate();
    return m;
  }

  static StateSpaceModel make_discrete(const Eigen::MatrixXd& A,
                                       const Eigen::MatrixXd& B,
                                       const Eigen::MatrixXd& C,
                                       const Eigen::MatrixXd& D, double dt) {
    StateSpaceModel m = make_continuous(A, B, C, D);
    m.form = ModelForm::discrete;
    m.dt = dt;
    m.validate();
    return m;
  }

  void validate() const {
    if (A.rows() != A.cols()) throw DimensionError("A must be square");
    if (A.rows() != n_x) throw DimensionError("A must be n_x x n_x");
    if (B.rows() != n_x || B.cols() != n_u)
      throw DimensionError("B must be n_x x n_u");
    if (C.cols() != n_x || C.rows() != n_y)
      throw DimensionError("C must be n_y x n_x");
    if (D.rows() != n_y || D.cols() != n_u)
      throw DimensionError("D must be n_y x n_u");
    if (n_x <= 0 || n_u < 0 || n_y < 0)
      throw DimensionError("dimensions must be positive");
    if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite())
      throw DimensionError("model matrices must be finite");
    if (form == ModelForm::discrete && !(dt > 0.0))
      throw DimensionError("discrete model requires dt > 0");
  }
};

// Time-indexed state/output record produced by integrators and solvers.
// `outputs` may be left empty when the producing computation has no output
// map; when present it must parallel `states`.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> outputs;

  void validate() const {
    if (states.size() != times.size())
      throw DimensionError("trajectory states/times length mismatch");
    if (!outputs.empty() && outputs.size() != times.size())
      throw DimensionError("trajectory outputs/times length mismatch");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i - 1] < times[i]))
        throw DimensionError("trajectory times must strictly increase");
  }
};

// One discrete-time state update x+ = A x + B u.
inline Eigen::VectorXd step_discrete(const StateSpaceModel& m,
                                     const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u) {
  if (m.form != ModelForm::discrete)
    throw DimensionError("step_discrete requires a discrete-form model");
  if (x.size() != m.n_x) throw DimensionError("state dimension mismatch");
  if (u.size() != m.n_u) throw DimensionError("input dimension mismatch");
  return m.A * x + m.B * u;
}

// Output map y = C x + D u (either form).
inline Eigen::VectorXd output(const StateSpaceModel& m,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u) {
  if (x.size() != m.n_x) throw DimensionError("state dimension mismatch");
  if (u.size() != m.n_u) throw DimensionError("input dimension mismatch");
  return m.C * x + m.D * u;
}

namespace detail {

// Matrix exponential by truncated Taylor series with scaling and squaring;
// series truncated when the term norm falls below tol relative to the
// accumulated sum.
inline Eigen::MatrixXd expm_series(const Eigen::MatrixXd& M,
                                   double tol = 1e-12) {
  const int n = static_cast<int>(M.rows());
  double norm = M.cwiseAbs().rowwise().sum().maxCoeff();  // infinity norm
  int s = 0;
  if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd Ms = M / std::pow(2.0, s);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 200; ++k) {
    term = (term * Ms) / static_cast<double>(k);
    sum += term;
    double tn = term.cwiseAbs().rowwise().sum().maxCoeff();
    double sn = sum.cwiseAbs().rowwise().sum().maxCoeff();
    if (tn <= tol * std::max(1.0, sn)) break;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

}  // namespace detail

// Zero-order-hold discretization: A_d = exp(A dt), B_d = Int_0^dt exp(A s) ds B,
// computed jointly from the exponential of the augmented matrix [[A,B],[0,0]]*dt.
inline StateSpaceModel discretize_zoh(const StateSpaceModel& m, double dt) {
  if (m.form != ModelForm::continuous)
    throw DimensionError("discretize_zoh requires a continuous-form model");
  if (!(dt > 0.0)) throw DimensionError("discretize_zoh requires dt > 0");
  const int n = m.n_x, p = m.n_u;
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + p, n + p);
  aug.topLeftCorner(n, n) = m.A * dt;
  aug.topRightCorner(n, p) = m.B * dt;
  const Eigen::MatrixXd e = detail::expm_series(aug);
  return StateSpaceModel::make_discrete(e.topLeftCorner(n, n),
                                        e.topRightCorner(n, p), m.C, m.D, dt);
}

// N_p-step output prediction: iterate the state recursion from x and report
// y[k] = C x[k] + D u[k] for k = 1..N_p.  The feedthrough term at step k uses
// u_seq[k] when provided and holds the last supplied input otherwise.
inline std::vector<Eigen::VectorXd> predict(
    const StateSpaceModel& m, const Eigen::VectorXd& x0,
    const std::vector<Eigen::VectorXd>& u_seq, int N_p) {
  if (m.form != ModelForm::discrete)
    throw DimensionError("predict requires a discrete-form model");
  if (N_p < 1) throw DimensionError("predict requires N_p >= 1");
  if (static_cast<int>(u_seq.size()) < N_p)
    throw DimensionError("predict requires u_seq length >= N_p");
  std::vector<Eigen::VectorXd> ys;
  ys.reserve(N_p);
  Eigen::VectorXd x = x0;
  for (int k = 1; k <= N_p; ++k) {
    x = step_discrete(m, x, u_seq[k - 1]);
    const Eigen::VectorXd& u_out =
        (k < static_cast<int>(u_seq.size())) ? u_seq[k] : u_seq.back();
    ys.push_back(output(m, x, u_out));
  }
  return ys;
}

}  // namespace rhmpc
