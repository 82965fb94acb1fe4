#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>

#include "rhmpc/config.hpp"
#include "rhmpc/csv.hpp"
#include "rhmpc/errors.hpp"
#include "rhmpc/log.hpp"
#include "rhmpc/metrics.hpp"
#include "rhmpc/presets.hpp"

namespace rhmpc {

// Command exit codes: 0 success, 2 configuration/usage error, 3 simulation
// divergence, 4 accuracy/convergence failure.
enum ExitCode : int {
  exit_ok = 0,
  exit_config = 2,
  exit_divergence = 3,
  exit_accuracy = 4
};

struct CliOptions {
  std::string config_path;  // empty: built-in defaults
  std::string out_path;     // empty: path from the config
  std::string controller;   // empty: controller from the config
  std::optional<std::uint64_t> seed;
};

namespace detail {

inline RunConfig resolve_config(const CliOptions& opt) {
  RunConfig rc =
      opt.config_path.empty() ? default_config() : load_config(opt.config_path);
  if (!opt.controller.empty()) {
    if (opt.controller != "rmpc" && opt.controller != "pid")
      throw ConfigError("--controller must be rmpc or pid");
    rc.controller_type = opt.controller;
  }
  if (opt.seed) rc.seed = *opt.seed;
  return rc;
}

inline TraceLog run_configured(const RunConfig& rc,
                               const std::string& controller_type) {
  SurrogatePlant plant = make_plant(rc);
  if (controller_type == "rmpc") {
    RmpcControllerStack stack = make_rmpc_stack(rc);
    return run_closed_loop(plant, stack, rc.scenario, rc.dt_sample, rc.seed);
  }
  DecentralizedPid pid = make_pid(rc);
  return run_closed_loop(plant, pid, rc.scenario, rc.dt_sample, rc.seed);
}

}  // namespace detail

// Run one closed-loop scenario and write the trace CSV.
inline int cmd_simulate(const CliOptions& opt) {
  try {
    const RunConfig rc = detail::resolve_config(opt);
    const std::string out = opt.out_path.empty() ? rc.trace_path : opt.out_path;
    log_info("simulate: controller=" + rc.controller_type +
             " seed=" + std::to_string(rc.seed));
    const TraceLog log = detail::run_configured(rc, rc.controller_type);
    write_text_file(out, trace_to_csv(log));
    log_info("simulate: wrote " + std::to_string(log.records.size()) +
             " samples to " + out);
    return exit_ok;
  } catch (const DivergenceError& e) {
    log_error(std::string("simulation diverged: ") + e.what());
    return exit_divergence;
  } catch (const std::exception& e) {
    log_error(e.what());
    return exit_config;
  }
}

// Run both controllers over the same scenario and seed, score the
// receding-horizon controller against the PID baseline, write the report CSV,
// and print the report table to stdout.
inline int cmd_compare(const CliOptions& opt) {
  try {
    const RunConfig rc = detail::resolve_config(opt);
    const std::string out =
        opt.out_path.empty() ? rc.report_path : opt.out_path;
    log_info("compare: test=rmpc ref=pid seed=" + std::to_string(rc.seed));
    const TraceLog test = detail::run_configured(rc, "rmpc");
    const TraceLog ref = detail::run_configured(rc, "pid");
    const IndexReport rep = compare(test, ref, rc.events, rc.weights);
    write_text_file(out, report_to_csv(rep));
    std::fputs(report_to_table(rep).c_str(), stdout);
    log_info("compare: wrote report to " + out);
    return exit_ok;
  } catch (const DivergenceError& e) {
    log_error(std::string("simulation diverged: ") + e.what());
    return exit_divergence;
  } catch (const std::exception& e) {
    log_error(e.what());
    return exit_config;
  }
}

namespace detail {

// Largest relative disagreement between the two gradient modes at one point.
inline double gradient_deviation(const OcpProblem& p, const ControlGrid& u,
                                 const Eigen::VectorXd& xi) {
  SolveOptions fd;
  fd.grad_mode = GradMode::finite_difference;
  SolveOptions adj;
  adj.grad_mode = GradMode::adjoint;
  const auto [du_fd, dxi_fd] = gradient(p, u, xi, fd);
  const auto [du_adj, dxi_adj] = gradient(p, u, xi, adj);
  double scale = 1.0;
  if (du_adj.size() > 0)
    scale = std::max(scale, du_adj.cwiseAbs().maxCoeff());
  if (dxi_adj.size() > 0)
    scale = std::max(scale, dxi_adj.cwiseAbs().maxCoeff());
  double dev = 0.0;
  if (du_fd.size() > 0)
    dev = std::max(dev, (du_fd - du_adj).cwiseAbs().maxCoeff());
  if (dxi_fd.size() > 0)
    dev = std::max(dev, (dxi_fd - dxi_adj).cwiseAbs().maxCoeff());
  return dev / scale;
}

}  // namespace detail

// Cross-check the finite-difference and adjoint gradients on a preset problem
// or on the random battery; fails (exit 4) when they disagree beyond tol.
inline int cmd_gradcheck(const std::string& preset, double tol = 1e-5) {
  try {
    double worst = 0.0;
    int count = 0;
    if (preset == "random-battery") {
      for (const GradcheckCase& gc : make_gradcheck_battery()) {
        const double dev = detail::gradient_deviation(gc.problem, gc.u, gc.xi);
        log_debug("gradcheck " + gc.name +
                  ": deviation=" + std::to_string(dev));
        worst = std::max(worst, dev);
        ++count;
      }
    } else {
      const OcpPreset ps = make_ocp_preset(preset);
      worst = detail::gradient_deviation(ps.problem, ps.u0, ps.xi);
      count = 1;
    }
    std::printf("gradcheck %s: cases=%d max_relative_deviation=%.3e\n",
                preset.c_str(), count, worst);
    return worst < tol ? exit_ok : exit_accuracy;
  } catch (const std::exception& e) {
    log_error(e.what());
    return exit_config;
  }
}

// Solve a preset problem and print the result; fails (exit 4) when the solver
// does not reach its convergence tolerances within the iteration budget.
inline int cmd_solve_ocp(const std::string& preset, int max_iters = -1) {
  try {
    const OcpPreset ps = make_ocp_preset(preset);
    SolveOptions opts;
    if (max_iters >= 0) opts.max_iters = max_iters;
    const SolveResult res = solve(ps.problem, ps.u0, ps.xi, opts);
    std::printf("solve-ocp %s: f_star=%.10g iterations=%d violation=%.3e "
                "converged=%s\n",
                preset.c_str(), res.f_star, res.iterations,
                res.constraint_violation, res.converged ? "true" : "false");
    for (int i = 0; i < res.u_star.values.rows(); ++i) {
      std::string row = "  u[" + std::to_string(i) + "] =";
      for (int j = 0; j < res.u_star.values.cols(); ++j) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), " %.6g", res.u_star.values(i, j));
        row += buf;
      }
      std::printf("%s\n", row.c_str());
    }
    return res.converged ? exit_ok : exit_accuracy;
  } catch (const DivergenceError& e) {
    log_error(std::string("integration diverged: ") + e.what());
    return exit_divergence;
  } catch (const std::exception& e) {
    log_error(e.what());
    return exit_config;
  }
}

}  // namespace rhmpc
