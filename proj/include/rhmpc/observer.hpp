#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <vector>

#include "rhmpc/errors.hpp"
#include "rhmpc/integrate.hpp"
#include "rhmpc/state_space.hpp"

namespace rhmpc {

namespace detail {

inline void check_conjugate_closed(
    const std::vector<std::complex<double>>& poles) {
  std::vector<bool> used(poles.size(), false);
  for (std::size_t i = 0; i < poles.size(); ++i) {
    if (used[i] || std::abs(poles[i].imag()) < 1e-12) continue;
    bool found = false;
    for (std::size_t j = i + 1; j < poles.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(poles[j] - std::conj(poles[i])) < 1e-9) {
        used[i] = used[j] = true;
        found = true;
        break;
      }
    }
    if (!found)
      throw std::invalid_argument(
          "pole set must be closed under complex conjugation");
  }
}

// Real coefficients a_0..a_{n-1} of the monic polynomial with the given roots.
inline std::vector<double> real_char_poly(
    const std::vector<std::complex<double>>& roots) {
  std::vector<std::complex<double>> c{1.0};
  for (const auto& r : roots) {
    std::vector<std::complex<double>> nc(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      nc[i] += c[i] * (-r);
      nc[i + 1] += c[i];
    }
    c = std::move(nc);
  }
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;  // out[k] multiplies lambda^k; out[n] == 1
}

// Greedy nearest matching of computed eigenvalues to target poles; returns
// permutation idx with eigs[idx[i]] matched to targets[i].
inline std::vector<int> match_eigs(
    const Eigen::VectorXcd& eigs,
    const std::vector<std::complex<double>>& targets) {
  const int n = static_cast<int>(targets.size());
  std::vector<int> idx(n, -1);
  std::vector<bool> used(n, false);
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int bj = -1;
    for (int j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double d = std::abs(eigs(j) - targets[i]);
      if (d < best) {
        best = d;
        bj = j;
      }
    }
    idx[i] = bj;
    used[bj] = true;
  }
  return idx;
}

// Newton refinement of the dual state-feedback gain K (sized n_y x n_x) so the
// eigenvalues of At - Bt K hit the targets; uses first-order eigenvalue
// sensitivities through left/right eigenvectors.
inline bool refine_dual_gain(const Eigen::MatrixXd& At,
                             const Eigen::MatrixXd& Bt, Eigen::MatrixXd& K,
                             const std::vector<std::complex<double>>& targets,
                             double tol) {
  const int n = static_cast<int>(At.rows());
  const int ny = static_cast<int>(Bt.cols());
  for (int iter = 0; iter < 50; ++iter) {
    const Eigen::MatrixXd M = At - Bt * K;
    Eigen::EigenSolver<Eigen::MatrixXd> es(M);
    Eigen::EigenSolver<Eigen::MatrixXd> esT(M.transpose());
    if (es.info() != Eigen::Success || esT.info() != Eigen::Success)
      return false;
    const Eigen::VectorXcd lam = es.eigenvalues();
    const auto idx = match_eigs(lam, targets);
    double resid = 0.0;
    for (int i = 0; i < n; ++i)
      resid = std::max(resid, std::abs(lam(idx[i]) - targets[i]));
    if (resid <= tol) return true;

    // Pair left eigenvectors (eigenvectors of M^T) with the right ones.
    const Eigen::VectorXcd lamT = esT.eigenvalues();
    std::vector<int> lidx(n, -1);
    {
      std::vector<bool> used(n, false);
      for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int bj = -1;
        for (int j = 0; j < n; ++j) {
          if (used[j]) continue;
          const double d = std::abs(lamT(j) - lam(i));
          if (d < best) {
            best = d;
            bj = j;
          }
        }
        lidx[i] = bj;
        used[bj] = true;
      }
    }

    // Least-squares Newton step on vec(K).
    Eigen::MatrixXd J(2 * n, ny * n);
    Eigen::VectorXd rhs(2 * n);
    for (int i = 0; i < n; ++i) {
      const int e = idx[i];
      const Eigen::VectorXcd v = es.eigenvectors().col(e);
      const Eigen::VectorXcd w = esT.eigenvectors().col(lidx[e]);
      const std::complex<double> denom = (w.adjoint() * v)(0);
      if (std::abs(denom) < 1e-14) return false;
      const Eigen::RowVectorXcd wB = w.adjoint() * Bt;  // 1 x ny
      const std::complex<double> r = lam(e) - targets[i];
      for (int j = 0; j < ny; ++j)
        for (int k = 0; k < n; ++k) {
          const std::complex<double> s = -wB(j) * v(k) / denom;
          J(2 * i, j * n + k) = s.real();
          J(2 * i + 1, j * n + k) = s.imag();
        }
      rhs(2 * i) = -r.real();
      rhs(2 * i + 1) = -r.imag();
    }
    const Eigen::VectorXd dk =
        J.colPivHouseholderQr().solve(rhs);
    if (!dk.allFinite()) return false;
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < n; ++k) K(j, k) += dk(j * n + k);
  }
  return false;
}

}  // namespace detail

// Observer gain placement: returns real G with eig(A - G C) equal to the
// requested self-conjugate pole set (to about 1e-9).  Works by duality with
// state-feedback placement on (A^T, C^T): a unit-rank (dyadic) gain K = q k^T
// is produced by single-input Ackermann along a direction q, then a Newton
// refinement over the full gain matrix polishes the eigenvalues.  A fixed
// direction sweep ([1,..,1]/sqrt(n_y), each unit vector, then seeded random
// directions) handles directions from which the dyadic pair is uncontrollable.
inline Eigen::MatrixXd place_poles(
    const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
    const std::vector<std::complex<double>>& poles) {
  const int n = static_cast<int>(A.rows());
  const int ny = static_cast<int>(C.rows());
  if (A.cols() != n || C.cols() != n)
    throw DimensionError("place_poles: A must be square and C must be n_y x n_x");
  if (static_cast<int>(poles.size()) != n)
    throw std::invalid_argument("place_poles: need exactly n_x poles");
  detail::check_conjugate_closed(poles);

  // Observability check.
  Eigen::MatrixXd O(ny * n, n);
  Eigen::MatrixXd Ck = C;
  for (int k = 0; k < n; ++k) {
    O.middleRows(k * ny, ny) = Ck;
    Ck = Ck * A;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(O);
  const double smax = svd.singularValues()(0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-10 * std::max(1.0, smax)) ++rank;
  if (rank < n) throw RankDeficiencyError(rank, n);

  const Eigen::MatrixXd At = A.transpose();
  const Eigen::MatrixXd Bt = C.transpose();
  const std::vector<double> cp = detail::real_char_poly(poles);

  // p(At) by Horner's rule (cp is monic: cp[n] == 1).
  Eigen::MatrixXd pA = Eigen::MatrixXd::Identity(n, n);
  for (int k = n - 1; k >= 0; --k)
    pA = pA * At + cp[k] * Eigen::MatrixXd::Identity(n, n);

  std::vector<Eigen::VectorXd> dirs;
  dirs.push_back(Eigen::VectorXd::Constant(ny, 1.0 / std::sqrt(double(ny))));
  for (int j = 0; j < ny; ++j) dirs.push_back(Eigen::VectorXd::Unit(ny, j));
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int t = 0; t < 8; ++t) {
    Eigen::VectorXd q(ny);
    for (int j = 0; j < ny; ++j) q(j) = nd(rng);
    dirs.push_back(q.normalized());
  }

  const double tol = 1e-10;
  for (const auto& q : dirs) {
    const Eigen::VectorXd b = Bt * q;
    Eigen::MatrixXd ctrb(n, n);
    Eigen::VectorXd col = b;
    for (int k = 0; k < n; ++k) {
      ctrb.col(k) = col;
      col = At * col;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> csvd(ctrb);
    const double cmax = csvd.singularValues()(0);
    if (cmax <= 0.0 ||
        csvd.singularValues()(n - 1) < 1e-12 * std::max(1.0, cmax))
      continue;  // dyadic pair effectively uncontrollable from q
    // Ackermann: k_row = e_n^T ctrb^{-1} p(At).
    const Eigen::VectorXd w =
        ctrb.transpose().fullPivLu().solve(Eigen::VectorXd::Unit(n, n - 1));
    const Eigen::RowVectorXd k_row = w.transpose() * pA;
    Eigen::MatrixXd K = q * k_row;  // n_y x n_x
    if (!K.allFinite()) continue;
    if (detail::refine_dual_gain(At, Bt, K, poles, tol))
      return K.transpose();  // G = K^T, n_x x n_y
  }
  throw std::runtime_error(
      "place_poles: refinement failed to reach the requested accuracy");
}

inline Eigen::MatrixXd place_poles(const Eigen::MatrixXd& A,
                                   const Eigen::MatrixXd& C,
                                   const std::vector<double>& poles) {
  std::vector<std::complex<double>> cp(poles.begin(), poles.end());
  return place_poles(A, C, cp);
}

// Continuous-time full-state observer dxhat/dt = A xhat + B u + G (y - yhat),
// advanced one sample interval per update with the measurement and input held
// constant (RK4 substeps).
class LuenbergerObserver {
 public:
  LuenbergerObserver(StateSpaceModel model, Eigen::MatrixXd G,
                     double dt_sample, int substeps = 10)
      : model_(std::move(model)),
        G_(std::move(G)),
        dt_sample_(dt_sample),
        substeps_(substeps),
        x_hat_(Eigen::VectorXd::Zero(model_.n_x)) {
    if (model_.form != ModelForm::continuous)
      throw DimensionError("observer requires a continuous-form model");
    if (G_.rows() != model_.n_x || G_.cols() != model_.n_y)
      throw DimensionError("observer gain must be n_x x n_y");
    if (!(dt_sample_ > 0.0))
      throw DimensionError("observer requires dt_sample > 0");
    if (substeps_ < 1) throw DimensionError("observer requires substeps >= 1");
    const Eigen::MatrixXd M = model_.A - G_ * model_.C;
    const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(M, false)
                                      .eigenvalues();
    for (int i = 0; i < eigs.size(); ++i)
      if (!(eigs(i).real() < 0.0))
        throw std::invalid_argument(
            "observer error dynamics must be stable (all poles in the open "
            "left half-plane)");
  }

  const Eigen::VectorXd& x_hat() const { return x_hat_; }
  void set_x_hat(const Eigen::VectorXd& x0) {
    if (x0.size() != model_.n_x)
      throw DimensionError("observer state dimension mismatch");
    x_hat_ = x0;
  }
  const StateSpaceModel& model() const { return model_; }
  const Eigen::MatrixXd& gain() const { return G_; }
  double dt_sample() const { return dt_sample_; }

  // Advance the estimate over one sample interval with y and u held constant;
  // returns (and stores) the new estimate.
  Eigen::VectorXd update(const Eigen::VectorXd& y, const Eigen::VectorXd& u) {
    if (y.size() != model_.n_y) throw DimensionError("measurement dimension");
    if (u.size() != model_.n_u) throw DimensionError("input dimension");
    const double h = dt_sample_ / substeps_;
    auto f = [&](double, const Eigen::VectorXd& xh) {
      return Eigen::VectorXd(model_.A * xh + model_.B * u +
                             G_ * (y - model_.C * xh - model_.D * u));
    };
    for (int s = 0; s < substeps_; ++s) {
      x_hat_ = detail::rk4_step(f, 0.0, x_hat_, h);
      t_ += h;
      if (!x_hat_.allFinite()) throw DivergenceError(t_);
    }
    return x_hat_;
  }

 private:
  StateSpaceModel model_;
  Eigen::MatrixXd G_;
  double dt_sample_;
  int substeps_;
  Eigen::VectorXd x_hat_;
  double t_ = 0.0;
};

inline Eigen::VectorXd observer_update(LuenbergerObserver& obs,
                                       const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& u) {
  return obs.update(y, u);
}

}  // namespace rhmpc
