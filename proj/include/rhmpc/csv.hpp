#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "rhmpc/errors.hpp"
#include "rhmpc/metrics.hpp"
#include "rhmpc/plant.hpp"

namespace rhmpc {

// Shortest round-trip decimal representation of a double.  Deterministic and
// locale-independent, so identical runs serialize to identical bytes.
inline std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc())
    throw ConfigError("fmt_double: value could not be formatted");
  return std::string(buf, res.ptr);
}

// Closed-loop trace as CSV.  The column set is fixed by the trace contents:
// time, raw and shaped references, measured and noise-free outputs, plant and
// estimated states, commanded and applied inputs, and solver diagnostics.
inline std::string trace_to_csv(const TraceLog& log) {
  std::ostringstream os;
  os << "t";
  for (int i = 0; i < log.n_y; ++i) os << ",r_d_" << (i + 1);
  for (int i = 0; i < log.n_y; ++i) os << ",r_mpc_" << (i + 1);
  for (int i = 0; i < log.n_y; ++i) os << ",y_" << (i + 1);
  for (int i = 0; i < log.n_y; ++i) os << ",y_nf_" << (i + 1);
  for (int i = 0; i < log.n_x; ++i) os << ",x_" << (i + 1);
  for (int i = 0; i < log.n_x; ++i) os << ",xhat_" << (i + 1);
  for (int i = 0; i < log.n_u; ++i) os << ",u_cmd_" << (i + 1);
  for (int i = 0; i < log.n_u; ++i) os << ",u_app_" << (i + 1);
  os << ",solver_iters,solver_converged,fallback\n";
  for (const auto& r : log.records) {
    os << fmt_double(r.t);
    for (int i = 0; i < log.n_y; ++i) os << ',' << fmt_double(r.r_d(i));
    for (int i = 0; i < log.n_y; ++i) os << ',' << fmt_double(r.r_mpc(i));
    for (int i = 0; i < log.n_y; ++i) os << ',' << fmt_double(r.y(i));
    for (int i = 0; i < log.n_y; ++i) os << ',' << fmt_double(r.y_noisefree(i));
    for (int i = 0; i < log.n_x; ++i) os << ',' << fmt_double(r.x_true(i));
    for (int i = 0; i < log.n_x; ++i) os << ',' << fmt_double(r.x_hat(i));
    for (int i = 0; i < log.n_u; ++i) os << ',' << fmt_double(r.u_command(i));
    for (int i = 0; i < log.n_u; ++i) os << ',' << fmt_double(r.u_applied(i));
    os << ',' << r.solver_iterations << ',' << (r.solver_converged ? 1 : 0)
       << ',' << (r.fallback ? 1 : 0) << '\n';
  }
  return os.str();
}

// Relative index report as CSV: one row per index with the absolute values
// behind the ratio, then the combined index J.
inline std::string report_to_csv(const IndexReport& rep) {
  std::ostringstream os;
  os << "index,test,ref,ratio,weight\n";
  const auto r = rep.ratios();
  for (int i = 0; i < 8; ++i)
    os << IndexReport::row_names()[i] << ',' << fmt_double(rep.test_abs[i])
       << ',' << fmt_double(rep.ref_abs[i]) << ',' << fmt_double(r[i]) << ','
       << fmt_double(rep.weights[i]) << '\n';
  os << "J,,," << fmt_double(rep.J) << ",\n";
  return os.str();
}

// Human-readable aligned table of the same report.
inline std::string report_to_table(const IndexReport& rep) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %14s %14s %10s %8s\n", "index",
                "test", "ref", "ratio", "weight");
  os << line;
  const auto r = rep.ratios();
  for (int i = 0; i < 8; ++i) {
    std::snprintf(line, sizeof(line), "%-8s %14.6g %14.6g %10.4f %8.3g\n",
                  IndexReport::row_names()[i], rep.test_abs[i], rep.ref_abs[i],
                  r[i], rep.weights[i]);
    os << line;
  }
  std::snprintf(line, sizeof(line), "%-8s %14s %14s %10.4f %8s\n", "J", "", "",
                rep.J, "");
  os << line;
  return os.str();
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file: " + path);
  f << content;
  if (!f) throw ConfigError("failed writing output file: " + path);
}

}  // namespace rhmpc
