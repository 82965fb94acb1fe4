#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rhmpc/ci.hpp"
#include "rhmpc/errors.hpp"
#include "rhmpc/metrics.hpp"
#include "rhmpc/mpc.hpp"
#include "rhmpc/observer.hpp"
#include "rhmpc/pid.hpp"
#include "rhmpc/plant.hpp"
#include "rhmpc/state_space.hpp"

namespace rhmpc {

// Everything one closed-loop run needs: plant description, controller
// selection and parameters, reference-shaper and observer settings, the
// scripted scenario, and the scoring setup.
struct RunConfig {
  std::uint64_t seed = 1;

  StateSpaceModel model;  // continuous design/plant core, deviation variables
  Eigen::VectorXd u_op, y_op;          // operating point, absolute units
  Eigen::VectorXd u_min_abs, u_max_abs;
  Eigen::VectorXd gain_mismatch;       // per-input factor applied in the plant
  Eigen::VectorXd sigma_w, sigma_v;    // process / measurement noise stds
  double nonlin_eps = 0.0;

  std::string controller_type = "rmpc";  // "rmpc" or "pid"
  Eigen::MatrixXd W_y;
  int N_p = 10;
  int N_u = 1;
  double dt_sample = 1.0;
  bool warm_start = true;
  SolveOptions solver = RmpcConfig::default_solver_options();
  std::array<PidLoop, 2> pid_loops{};

  Eigen::VectorXd ci_K_I, ci_e_th;
  std::vector<double> observer_poles;
  int observer_substeps = 10;

  Scenario scenario;
  std::vector<EventWindow> events;
  std::array<double, 8> weights{1, 1, 1, 1, 1, 1, 1, 1};

  std::string trace_path = "trace.csv";
  std::string report_path = "report.csv";

  void validate() const {
    model.validate();
    if (model.form != ModelForm::continuous)
      throw ConfigError("plant.model.form must be \"continuous\"");
    if (model.n_u != 2 || model.n_y != 2)
      throw ConfigError("the surrogate plant is a 2x2 system");
    if (u_op.size() != model.n_u || y_op.size() != model.n_y)
      throw ConfigError("plant.operating_point dimensions must match the model");
    if (u_min_abs.size() != model.n_u || u_max_abs.size() != model.n_u)
      throw ConfigError("plant.input_limits dimensions must match the model");
    for (int j = 0; j < model.n_u; ++j)
      if (!(u_min_abs(j) < u_max_abs(j)))
        throw ConfigError("plant.input_limits must satisfy u_min < u_max");
    if (gain_mismatch.size() != model.n_u)
      throw ConfigError("plant.gain_mismatch needs one factor per input");
    if (sigma_w.size() != model.n_x || sigma_v.size() != model.n_y)
      throw ConfigError("plant.noise std dimensions must match the model");
    if (controller_type != "rmpc" && controller_type != "pid")
      throw ConfigError("controller.type must be \"rmpc\" or \"pid\"");
    if (ci_K_I.size() != model.n_y || ci_e_th.size() != model.n_y)
      throw ConfigError("ci gains/thresholds need one entry per output");
    if (static_cast<int>(observer_poles.size()) != model.n_x)
      throw ConfigError("observer.poles needs one pole per state");
    for (double p : observer_poles)
      if (!(p < 0.0))
        throw ConfigError("observer.poles must lie in the open left half-plane");
    if (observer_substeps < 1)
      throw ConfigError("observer.substeps must be >= 1");
    if (events.size() != 4)
      throw ConfigError("metrics.events must list exactly four windows");
    for (const auto& ev : events) {
      if (ev.channel < 0 || ev.channel >= model.n_y)
        throw ConfigError("metrics.events channel out of range");
      if (!(ev.T_w > 0.0)) throw ConfigError("metrics.events T_w must be > 0");
      if (ev.t_c < 0.0 || ev.t_c + ev.T_w > scenario.duration)
        throw ConfigError("metrics.events window outside the scenario");
    }
    try {
      scenario.validate(model.n_y, model.n_x);
      RmpcConfig tmp;
      tmp.W_y = W_y;
      tmp.N_p = N_p;
      tmp.N_u = N_u;
      tmp.dt_sample = dt_sample;
      tmp.u_min = u_min_abs - u_op;
      tmp.u_max = u_max_abs - u_op;
      tmp.solver = solver;
      tmp.solver.validate();
      tmp.validate(model.n_y, model.n_u);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
  }
};

namespace detail {

using nlohmann::json;

inline void require_object(const json& j, const std::string& path) {
  if (!j.is_object())
    throw ConfigError("config: " + path + " must be an object");
}

// Strict-schema guard: every key in j must be in the allowed list.
inline void check_keys(const json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  require_object(j, path);
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        ok = true;
        break;
      }
    if (!ok)
      throw ConfigError("config: unknown key \"" + path + "." + item.key() +
                        "\"");
  }
}

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number())
    throw ConfigError("config: " + path + " must be a number");
  return j.get<double>();
}

inline int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer())
    throw ConfigError("config: " + path + " must be an integer");
  return j.get<int>();
}

inline bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean())
    throw ConfigError("config: " + path + " must be a boolean");
  return j.get<bool>();
}

inline std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string())
    throw ConfigError("config: " + path + " must be a string");
  return j.get<std::string>();
}

inline Eigen::VectorXd get_vector(const json& j, const std::string& path) {
  if (!j.is_array())
    throw ConfigError("config: " + path + " must be an array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<int>(i)) =
        get_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

inline Eigen::MatrixXd get_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty())
    throw ConfigError("config: " + path + " must be a nested array (rows)");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Eigen::MatrixXd m;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array())
      throw ConfigError("config: " + rp + " must be an array (matrix row)");
    if (r == 0) {
      cols = j[r].size();
      if (cols == 0) throw ConfigError("config: " + rp + " must not be empty");
      m.resize(static_cast<int>(rows), static_cast<int>(cols));
    } else if (j[r].size() != cols) {
      throw ConfigError("config: " + path + " rows must have equal length");
    }
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<int>(r), static_cast<int>(c)) =
          get_number(j[r][c], rp + "[" + std::to_string(c) + "]");
  }
  return m;
}

inline void parse_model(const json& j, const std::string& path, RunConfig& rc) {
  check_keys(j, path, {"A", "B", "C", "D", "n_x", "n_u", "n_y", "form", "dt"});
  for (const char* k : {"A", "B", "C", "D", "n_x", "n_u", "n_y", "form"})
    if (!j.contains(k))
      throw ConfigError("config: " + path + "." + k +
                        " is required when the model is given");
  const std::string form = get_string(j.at("form"), path + ".form");
  if (form != "continuous" && form != "discrete")
    throw ConfigError("config: " + path +
                      ".form must be \"continuous\" or \"discrete\"");
  const int n_x = get_int(j.at("n_x"), path + ".n_x");
  const int n_u = get_int(j.at("n_u"), path + ".n_u");
  const int n_y = get_int(j.at("n_y"), path + ".n_y");
  const Eigen::MatrixXd A = get_matrix(j.at("A"), path + ".A");
  const Eigen::MatrixXd B = get_matrix(j.at("B"), path + ".B");
  const Eigen::MatrixXd C = get_matrix(j.at("C"), path + ".C");
  const Eigen::MatrixXd D = get_matrix(j.at("D"), path + ".D");
  if (A.rows() != n_x || A.cols() != n_x || B.rows() != n_x ||
      B.cols() != n_u || C.rows() != n_y || C.cols() != n_x ||
      D.rows() != n_y || D.cols() != n_u)
    throw ConfigError("config: " + path +
                      " matrix shapes disagree with n_x/n_u/n_y");
  try {
    if (form == "continuous") {
      if (j.contains("dt"))
        throw ConfigError("config: " + path +
                          ".dt applies only to discrete-form models");
      rc.model = StateSpaceModel::make_continuous(A, B, C, D);
    } else {
      if (!j.contains("dt"))
        throw ConfigError("config: " + path + ".dt is required for discrete form");
      rc.model = StateSpaceModel::make_discrete(
          A, B, C, D, get_number(j.at("dt"), path + ".dt"));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
}

inline void parse_plant(const json& j, RunConfig& rc) {
  check_keys(j, "plant",
             {"model", "operating_point", "input_limits", "gain_mismatch",
              "noise", "nonlinearity"});
  if (j.contains("model")) parse_model(j.at("model"), "plant.model", rc);
  if (j.contains("operating_point")) {
    const json& op = j.at("operating_point");
    check_keys(op, "plant.operating_point", {"u_op", "y_op"});
    if (op.contains("u_op"))
      rc.u_op = get_vector(op.at("u_op"), "plant.operating_point.u_op");
    if (op.contains("y_op"))
      rc.y_op = get_vector(op.at("y_op"), "plant.operating_point.y_op");
  }
  if (j.contains("input_limits")) {
    const json& il = j.at("input_limits");
    check_keys(il, "plant.input_limits", {"u_min", "u_max"});
    if (il.contains("u_min"))
      rc.u_min_abs = get_vector(il.at("u_min"), "plant.input_limits.u_min");
    if (il.contains("u_max"))
      rc.u_max_abs = get_vector(il.at("u_max"), "plant.input_limits.u_max");
  }
  if (j.contains("gain_mismatch"))
    rc.gain_mismatch = get_vector(j.at("gain_mismatch"), "plant.gain_mismatch");
  if (j.contains("noise")) {
    const json& nz = j.at("noise");
    check_keys(nz, "plant.noise", {"sigma_w", "sigma_v"});
    if (nz.contains("sigma_w"))
      rc.sigma_w = get_vector(nz.at("sigma_w"), "plant.noise.sigma_w");
    if (nz.contains("sigma_v"))
      rc.sigma_v = get_vector(nz.at("sigma_v"), "plant.noise.sigma_v");
  }
  if (j.contains("nonlinearity")) {
    const json& nl = j.at("nonlinearity");
    check_keys(nl, "plant.nonlinearity", {"epsilon"});
    if (nl.contains("epsilon"))
      rc.nonlin_eps = get_number(nl.at("epsilon"), "plant.nonlinearity.epsilon");
  }
}

inline void parse_solver(const json& j, SolveOptions& o) {
  check_keys(j, "controller.rmpc.solver",
             {"max_iters", "grad_mode", "fd_step", "armijo_c1",
              "armijo_backtrack", "armijo_max_backtracks", "penalty_init",
              "penalty_growth", "penalty_rounds", "tol_grad",
              "tol_constraint"});
  const std::string p = "controller.rmpc.solver.";
  if (j.contains("max_iters")) o.max_iters = get_int(j.at("max_iters"), p + "max_iters");
  if (j.contains("grad_mode")) {
    const std::string m = get_string(j.at("grad_mode"), p + "grad_mode");
    if (m == "fd")
      o.grad_mode = GradMode::finite_difference;
    else if (m == "adjoint")
      o.grad_mode = GradMode::adjoint;
    else
      throw ConfigError("config: " + p + "grad_mode must be \"fd\" or \"adjoint\"");
  }
  if (j.contains("fd_step")) o.fd_step = get_number(j.at("fd_step"), p + "fd_step");
  if (j.contains("armijo_c1")) o.armijo_c1 = get_number(j.at("armijo_c1"), p + "armijo_c1");
  if (j.contains("armijo_backtrack"))
    o.armijo_backtrack = get_number(j.at("armijo_backtrack"), p + "armijo_backtrack");
  if (j.contains("armijo_max_backtracks"))
    o.armijo_max_backtracks =
        get_int(j.at("armijo_max_backtracks"), p + "armijo_max_backtracks");
  if (j.contains("penalty_init"))
    o.penalty_init = get_number(j.at("penalty_init"), p + "penalty_init");
  if (j.contains("penalty_growth"))
    o.penalty_growth = get_number(j.at("penalty_growth"), p + "penalty_growth");
  if (j.contains("penalty_rounds"))
    o.penalty_rounds = get_int(j.at("penalty_rounds"), p + "penalty_rounds");
  if (j.contains("tol_grad")) o.tol_grad = get_number(j.at("tol_grad"), p + "tol_grad");
  if (j.contains("tol_constraint"))
    o.tol_constraint = get_number(j.at("tol_constraint"), p + "tol_constraint");
}

inline void parse_controller(const json& j, RunConfig& rc) {
  check_keys(j, "controller", {"type", "rmpc", "pid"});
  if (j.contains("type")) {
    rc.controller_type = get_string(j.at("type"), "controller.type");
    if (rc.controller_type != "rmpc" && rc.controller_type != "pid")
      throw ConfigError("config: controller.type must be \"rmpc\" or \"pid\"");
  }
  if (j.contains("rmpc")) {
    const json& r = j.at("rmpc");
    check_keys(r, "controller.rmpc",
               {"W_y", "N_p", "N_u", "dt_sample", "warm_start", "solver"});
    if (r.contains("W_y")) rc.W_y = get_matrix(r.at("W_y"), "controller.rmpc.W_y");
    if (r.contains("N_p")) rc.N_p = get_int(r.at("N_p"), "controller.rmpc.N_p");
    if (r.contains("N_u")) rc.N_u = get_int(r.at("N_u"), "controller.rmpc.N_u");
    if (r.contains("dt_sample"))
      rc.dt_sample = get_number(r.at("dt_sample"), "controller.rmpc.dt_sample");
    if (r.contains("warm_start"))
      rc.warm_start = get_bool(r.at("warm_start"), "controller.rmpc.warm_start");
    if (r.contains("solver")) parse_solver(r.at("solver"), rc.solver);
  }
  if (j.contains("pid")) {
    const json& p = j.at("pid");
    check_keys(p, "controller.pid", {"loops"});
    if (!p.contains("loops"))
      throw ConfigError(
          "config: controller.pid.loops is required when controller.pid is "
          "present");
    const json& loops = p.at("loops");
    if (!loops.is_array() || loops.size() != 2)
      throw ConfigError(
          "config: controller.pid.loops must list exactly two loops");
    for (int i = 0; i < 2; ++i) {
      const std::string lp = "controller.pid.loops[" + std::to_string(i) + "]";
      const json& l = loops[i];
      check_keys(l, lp, {"K_p", "K_i", "K_d", "T_f"});
      if (!l.contains("K_p") || !l.contains("K_i"))
        throw ConfigError("config: " + lp + " must define K_p and K_i");
      PidLoop loop;
      loop.K_p = get_number(l.at("K_p"), lp + ".K_p");
      loop.K_i = get_number(l.at("K_i"), lp + ".K_i");
      loop.K_d = l.contains("K_d") ? get_number(l.at("K_d"), lp + ".K_d") : 0.0;
      loop.T_f = l.contains("T_f") ? get_number(l.at("T_f"), lp + ".T_f") : 1.0;
      rc.pid_loops[static_cast<std::size_t>(i)] = loop;
    }
  }
}

inline void parse_scenario(const json& j, RunConfig& rc) {
  check_keys(j, "scenario",
             {"duration", "reference_schedule", "disturbance_schedule"});
  if (!j.contains("duration") || !j.contains("reference_schedule"))
    throw ConfigError(
        "config: scenario overrides must define duration and "
        "reference_schedule");
  Scenario sc;
  sc.duration = get_number(j.at("duration"), "scenario.duration");
  const json& refs = j.at("reference_schedule");
  if (!refs.is_array())
    throw ConfigError(
        "config: scenario.reference_schedule must be an array (one list per "
        "output)");
  for (std::size_t ch = 0; ch < refs.size(); ++ch) {
    const std::string cp =
        "scenario.reference_schedule[" + std::to_string(ch) + "]";
    if (!refs[ch].is_array())
      throw ConfigError("config: " + cp + " must be an array of steps");
    std::vector<ReferenceStep> list;
    for (std::size_t i = 0; i < refs[ch].size(); ++i) {
      const std::string sp = cp + "[" + std::to_string(i) + "]";
      const json& s = refs[ch][i];
      check_keys(s, sp, {"time", "value"});
      if (!s.contains("time") || !s.contains("value"))
        throw ConfigError("config: " + sp + " must define time and value");
      ReferenceStep step;
      step.time = get_number(s.at("time"), sp + ".time");
      step.value = get_number(s.at("value"), sp + ".value");
      list.push_back(step);
    }
    sc.reference_schedule.push_back(std::move(list));
  }
  if (j.contains("disturbance_schedule")) {
    const json& ds = j.at("disturbance_schedule");
    if (!ds.is_array())
      throw ConfigError(
          "config: scenario.disturbance_schedule must be an array");
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const std::string dp =
          "scenario.disturbance_schedule[" + std::to_string(i) + "]";
      const json& d = ds[i];
      check_keys(d, dp, {"time", "kind", "index", "offset"});
      for (const char* k : {"time", "kind", "index", "offset"})
        if (!d.contains(k))
          throw ConfigError("config: " + dp + "." + k + " is required");
      DisturbanceEvent ev;
      ev.time = get_number(d.at("time"), dp + ".time");
      const std::string kind = get_string(d.at("kind"), dp + ".kind");
      if (kind == "state")
        ev.kind = DisturbanceKind::state;
      else if (kind == "output")
        ev.kind = DisturbanceKind::output;
      else
        throw ConfigError("config: " + dp +
                          ".kind must be \"state\" or \"output\"");
      ev.index = get_int(d.at("index"), dp + ".index");
      ev.offset = get_number(d.at("offset"), dp + ".offset");
      sc.disturbance_schedule.push_back(ev);
    }
  }
  rc.scenario = std::move(sc);
}

inline void parse_metrics(const json& j, RunConfig& rc) {
  check_keys(j, "metrics", {"events", "weights"});
  if (j.contains("events")) {
    const json& evs = j.at("events");
    if (!evs.is_array() || evs.size() != 4)
      throw ConfigError(
          "config: metrics.events must list exactly four windows");
    std::vector<EventWindow> events;
    for (std::size_t i = 0; i < evs.size(); ++i) {
      const std::string ep = "metrics.events[" + std::to_string(i) + "]";
      const json& e = evs[i];
      check_keys(e, ep, {"t_c", "T_w", "channel"});
      for (const char* k : {"t_c", "T_w", "channel"})
        if (!e.contains(k))
          throw ConfigError("config: " + ep + "." + k + " is required");
      EventWindow w;
      w.t_c = get_number(e.at("t_c"), ep + ".t_c");
      w.T_w = get_number(e.at("T_w"), ep + ".T_w");
      w.channel = get_int(e.at("channel"), ep + ".channel");
      events.push_back(w);
    }
    rc.events = std::move(events);
  }
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    if (!w.is_array() || w.size() != 8)
      throw ConfigError("config: metrics.weights must list eight weights");
    for (std::size_t i = 0; i < 8; ++i)
      rc.weights[i] =
          get_number(w[i], "metrics.weights[" + std::to_string(i) + "]");
  }
}

inline void parse_output(const json& j, RunConfig& rc) {
  check_keys(j, "output", {"trace_path", "report_path"});
  if (j.contains("trace_path"))
    rc.trace_path = get_string(j.at("trace_path"), "output.trace_path");
  if (j.contains("report_path"))
    rc.report_path = get_string(j.at("report_path"), "output.report_path");
}

inline void parse_observer(const json& j, RunConfig& rc) {
  check_keys(j, "observer", {"poles", "substeps"});
  if (j.contains("poles")) {
    const Eigen::VectorXd p = get_vector(j.at("poles"), "observer.poles");
    rc.observer_poles.assign(p.data(), p.data() + p.size());
  }
  if (j.contains("substeps"))
    rc.observer_substeps = get_int(j.at("substeps"), "observer.substeps");
}

inline void parse_ci(const json& j, RunConfig& rc) {
  check_keys(j, "ci", {"K_I", "e_th"});
  if (j.contains("K_I")) rc.ci_K_I = get_vector(j.at("K_I"), "ci.K_I");
  if (j.contains("e_th")) rc.ci_e_th = get_vector(j.at("e_th"), "ci.e_th");
}

}  // namespace detail

// Apply a parsed JSON document on top of a base configuration.  Unknown keys
// anywhere in the document are rejected.
inline RunConfig apply_config_json(const nlohmann::json& j, RunConfig rc) {
  detail::check_keys(j, "<root>",
                     {"seed", "plant", "controller", "ci", "observer",
                      "scenario", "metrics", "output"});
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() || j.at("seed").get<long long>() < 0)
      throw ConfigError("config: seed must be a nonnegative integer");
    rc.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("plant")) detail::parse_plant(j.at("plant"), rc);
  if (j.contains("controller")) detail::parse_controller(j.at("controller"), rc);
  if (j.contains("ci")) detail::parse_ci(j.at("ci"), rc);
  if (j.contains("observer")) detail::parse_observer(j.at("observer"), rc);
  if (j.contains("scenario")) detail::parse_scenario(j.at("scenario"), rc);
  if (j.contains("metrics")) detail::parse_metrics(j.at("metrics"), rc);
  if (j.contains("output")) detail::parse_output(j.at("output"), rc);
  rc.validate();
  return rc;
}

// Builders: turn a validated RunConfig into runnable components.

inline SurrogatePlant make_plant(const RunConfig& rc) {
  NoiseSpec noise;
  noise.sigma_w = rc.sigma_w;
  noise.sigma_v = rc.sigma_v;
  return SurrogatePlant(rc.model, rc.u_op, rc.y_op, rc.u_min_abs, rc.u_max_abs,
                        rc.gain_mismatch, noise, rc.nonlin_eps);
}

inline RmpcConfig make_rmpc_config(const RunConfig& rc) {
  RmpcConfig cfg;
  cfg.W_y = rc.W_y;
  cfg.N_p = rc.N_p;
  cfg.N_u = rc.N_u;
  cfg.dt_sample = rc.dt_sample;
  cfg.u_min = rc.u_min_abs - rc.u_op;
  cfg.u_max = rc.u_max_abs - rc.u_op;
  cfg.solver = rc.solver;
  cfg.warm_start = rc.warm_start;
  cfg.validate(rc.model.n_y, rc.model.n_u);
  return cfg;
}

inline RmpcControllerStack make_rmpc_stack(const RunConfig& rc) {
  const Eigen::MatrixXd G =
      place_poles(rc.model.A, rc.model.C, rc.observer_poles);
  return RmpcControllerStack{
      rc.model, make_rmpc_config(rc),
      LuenbergerObserver(rc.model, G, rc.dt_sample, rc.observer_substeps),
      CiCompensator(rc.ci_K_I, rc.ci_e_th),
      RmpcState::initial(Eigen::VectorXd::Zero(rc.model.n_u))};
}

inline DecentralizedPid make_pid(const RunConfig& rc) {
  return DecentralizedPid(rc.pid_loops, rc.dt_sample, rc.u_op, rc.u_min_abs,
                          rc.u_max_abs);
}

}  // namespace rhmpc
