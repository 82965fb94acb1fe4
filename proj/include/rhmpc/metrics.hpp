#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "rhmpc/errors.hpp"
#include "rhmpc/plant.hpp"

namespace rhmpc {

// Integral of |e| dt by the trapezoidal rule on the sampled grid.
inline double iae(const std::vector<double>& e, const std::vector<double>& t) {
  if (e.size() != t.size())
    throw DimensionError("iae: signal/time length mismatch");
  double s = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i)
    s += 0.5 * (std::abs(e[i - 1]) + std::abs(e[i])) * (t[i] - t[i - 1]);
  return s;
}

// Time-weighted IAE after an event: integral of (t - t_c)|e| dt over
// [t_c, t_c + T_w], trapezoidal on the samples inside the window.
inline double itae(const std::vector<double>& e, const std::vector<double>& t,
                   double t_c, double T_w) {
  if (e.size() != t.size())
    throw DimensionError("itae: signal/time length mismatch");
  if (t.empty() || t_c < t.front() - 1e-9 || t_c + T_w > t.back() + 1e-9)
    throw DimensionError("itae: window out of trace range");
  double s = 0.0;
  bool have_prev = false;
  double pv = 0.0, pt = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_c - 1e-9 || t[i] > t_c + T_w + 1e-9) continue;
    const double v = (t[i] - t_c) * std::abs(e[i]);
    if (have_prev) s += 0.5 * (pv + v) * (t[i] - pt);
    pv = v;
    pt = t[i];
    have_prev = true;
  }
  return s;
}

// Integrated absolute control variation: total variation of the sampled input.
inline double iavu(const std::vector<double>& u, const std::vector<double>& t) {
  if (u.size() != t.size())
    throw DimensionError("iavu: signal/time length mismatch");
  double s = 0.0;
  for (std::size_t i = 1; i < u.size(); ++i) s += std::abs(u[i] - u[i - 1]);
  return s;
}

// One scoring window: event time, window length, and the monitored output
// channel (the output primarily excited by the event).
struct EventWindow {
  double t_c = 0.0;
  double T_w = 300.0;
  int channel = 0;
};

// The eight relative indices and their weighted combination.  Each ratio is
// (test absolute index) / (reference absolute index); values below 1 mean the
// test controller beats the reference on that measure.
struct IndexReport {
  std::array<double, 2> RIAE{};
  std::array<double, 4> RITAE{};
  std::array<double, 2> RIAVU{};
  double J = 0.0;
  std::array<double, 8> weights{};
  std::array<double, 8> test_abs{};  // absolute indices, test controller
  std::array<double, 8> ref_abs{};   // absolute indices, reference controller

  static const std::array<const char*, 8>& row_names() {
    static const std::array<const char*, 8> names = {
        "RIAE1", "RIAE2", "RITAE1", "RITAE2",
        "RITAE3", "RITAE4", "RIAVU1", "RIAVU2"};
    return names;
  }

  std::array<double, 8> ratios() const {
    return {RIAE[0],  RIAE[1],  RITAE[0], RITAE[1],
            RITAE[2], RITAE[3], RIAVU[0], RIAVU[1]};
  }
};

namespace detail {

inline std::vector<double> trace_times(const TraceLog& log) {
  std::vector<double> t;
  t.reserve(log.records.size());
  for (const auto& r : log.records) t.push_back(r.t);
  return t;
}

inline std::vector<double> trace_error(const TraceLog& log, int channel) {
  std::vector<double> e;
  e.reserve(log.records.size());
  for (const auto& r : log.records) e.push_back(r.r_d(channel) - r.y(channel));
  return e;
}

inline std::vector<double> trace_input(const TraceLog& log, int channel) {
  std::vector<double> u;
  u.reserve(log.records.size());
  for (const auto& r : log.records) u.push_back(r.u_applied(channel));
  return u;
}

}  // namespace detail

// Relative performance report of a test trace against a reference trace over
// the same scenario: whole-run IAE ratios per output, time-weighted IAE
// ratios over the four event windows, input total-variation ratios per input,
// and the weighted combined index J.
inline IndexReport compare(const TraceLog& test, const TraceLog& ref,
                           const std::vector<EventWindow>& events,
                           const std::array<double, 8>& w = {1, 1, 1, 1, 1, 1,
                                                             1, 1}) {
  if (test.records.size() != ref.records.size() ||
      test.records.empty())
    throw DimensionError("compare: traces must share the sampling grid");
  if (test.dt_sample != ref.dt_sample)
    throw DimensionError("compare: traces must share dt_sample");
  for (std::size_t i = 0; i < test.records.size(); ++i)
    if (std::abs(test.records[i].t - ref.records[i].t) > 1e-9)
      throw DimensionError("compare: traces must share the sampling grid");
  if (events.size() != 4)
    throw DimensionError("compare: exactly four event windows are required");
  if (test.n_y < 1 || test.n_u < 1)
    throw DimensionError("compare: traces carry no signals");
  for (const auto& ev : events)
    if (ev.channel < 0 || ev.channel >= test.n_y)
      throw DimensionError("compare: event window channel out of range");
  double wsum = 0.0;
  for (double wi : w) {
    if (!(wi >= 0.0)) throw DimensionError("compare: weights must be >= 0");
    wsum += wi;
  }
  if (!(wsum > 0.0)) throw DimensionError("compare: weights must not all be 0");

  const std::vector<double> t = detail::trace_times(test);
  IndexReport rep;
  rep.weights = w;
  int row = 0;
  auto ratio_row = [&](double tv, double rv, const char* name) {
    rep.test_abs[row] = tv;
    rep.ref_abs[row] = rv;
    if (rv == 0.0) throw DegenerateReferenceError(name);
    ++row;
    return tv / rv;
  };
  for (int ch = 0; ch < 2; ++ch)
    rep.RIAE[ch] = ratio_row(iae(detail::trace_error(test, ch), t),
                             iae(detail::trace_error(ref, ch), t),
                             IndexReport::row_names()[row]);
  for (int k = 0; k < 4; ++k)
    rep.RITAE[k] = ratio_row(
        itae(detail::trace_error(test, events[k].channel), t, events[k].t_c,
             events[k].T_w),
        itae(detail::trace_error(ref, events[k].channel), t, events[k].t_c,
             events[k].T_w),
        IndexReport::row_names()[row]);
  for (int ch = 0; ch < 2; ++ch)
    rep.RIAVU[ch] = ratio_row(iavu(detail::trace_input(test, ch), t),
                              iavu(detail::trace_input(ref, ch), t),
                              IndexReport::row_names()[row]);

  double acc = 0.0;
  const auto r = rep.ratios();
  for (int i = 0; i < 8; ++i) acc += w[i] * r[i];
  rep.J = acc / wsum;
  return rep;
}

}  // namespace rhmpc
