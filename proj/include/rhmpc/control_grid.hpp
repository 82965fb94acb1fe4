#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "rhmpc/errors.hpp"

namespace rhmpc {

// Piecewise-constant control parameterization over N intervals spanning
// [breakpoints.front(), breakpoints.back()].  Row i of `values` is the control
// vector held on [breakpoints[i], breakpoints[i+1]).
struct ControlGrid {
  int N = 0;                        // interval count
  std::vector<double> breakpoints;  // N+1 strictly increasing times
  Eigen::MatrixXd values;           // N x n_u

  int n_u() const { return static_cast<int>(values.cols()); }
  double t_begin() const { return breakpoints.front(); }
  double t_end() const { return breakpoints.back(); }

  static ControlGrid uniform(double a, double b, int N, int n_u) {
    if (!(a < b)) throw DimensionError("control grid requires a < b");
    if (N < 1) throw DimensionError("control grid requires N >= 1");
    if (n_u < 0) throw DimensionError("control grid requires n_u >= 0");
    ControlGrid g;
    g.N = N;
    g.breakpoints.resize(N + 1);
    for (int i = 0; i <= N; ++i)
      g.breakpoints[i] = a + (b - a) * static_cast<double>(i) / N;
    g.breakpoints[N] = b;  // exact endpoint
    g.values = Eigen::MatrixXd::Zero(N, n_u);
    return g;
  }

  void validate() const {
    if (static_cast<int>(breakpoints.size()) != N + 1)
      throw DimensionError("control grid needs N+1 breakpoints");
    if (values.rows() != N)
      throw DimensionError("control grid needs N value rows");
    for (int i = 0; i < N; ++i)
      if (!(breakpoints[i] < breakpoints[i + 1]))
        throw DimensionError("control grid breakpoints must increase");
    if (!values.allFinite())
      throw DimensionError("control grid values must be finite");
  }

  // Index of the interval containing t; t == t_end maps to the last interval.
  int interval_of(double t) const {
    if (t <= breakpoints.front()) return 0;
    if (t >= breakpoints.back()) return N - 1;
    int lo = 0, hi = N;  // invariant: breakpoints[lo] <= t < breakpoints[hi]
    while (hi - lo > 1) {
      int mid = (lo + hi) / 2;
      if (t < breakpoints[mid])
        hi = mid;
      else
        lo = mid;
    }
    return lo;
  }

  Eigen::VectorXd value_at(double t) const {
    if (N == 0 || values.cols() == 0) return Eigen::VectorXd::Zero(0);
    return values.row(interval_of(t)).transpose();
  }
};

}  // namespace rhmpc
