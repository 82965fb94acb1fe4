#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "rhmpc/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"receding-horizon control benchmark"};
  app.require_subcommand(1);

  rhmpc::CliOptions opt;
  std::uint64_t seed = 0;

  auto* sim = app.add_subcommand(
      "simulate", "run one closed-loop scenario and write the trace CSV");
  sim->add_option("--config", opt.config_path, "JSON configuration file");
  sim->add_option("--out", opt.out_path, "trace CSV output path");
  sim->add_option("--controller", opt.controller,
                  "controller override (rmpc|pid)");
  auto* sim_seed = sim->add_option("--seed", seed, "noise seed override");

  auto* cmp = app.add_subcommand(
      "compare",
      "run both controllers, score rmpc against the PID baseline, write the "
      "report CSV and print the table");
  cmp->add_option("--config", opt.config_path, "JSON configuration file");
  cmp->add_option("--out", opt.out_path, "report CSV output path");
  auto* cmp_seed = cmp->add_option("--seed", seed, "noise seed override");

  std::string preset = "random-battery";
  auto* grd = app.add_subcommand(
      "gradcheck",
      "cross-check finite-difference and adjoint objective gradients");
  grd->add_option("preset", preset,
                  "problem preset or \"random-battery\" (default)");

  std::string solve_preset;
  int max_iters = -1;
  auto* slv =
      app.add_subcommand("solve-ocp", "solve a preset optimal-control problem");
  slv->add_option("preset", solve_preset, "problem preset name")->required();
  slv->add_option("--max-iters", max_iters, "iteration budget override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rhmpc::exit_config;
  }

  if (sim->parsed()) {
    if (sim_seed->count() > 0) opt.seed = seed;
    return rhmpc::cmd_simulate(opt);
  }
  if (cmp->parsed()) {
    if (cmp_seed->count() > 0) opt.seed = seed;
    return rhmpc::cmd_compare(opt);
  }
  if (grd->parsed()) return rhmpc::cmd_gradcheck(preset);
  if (slv->parsed()) return rhmpc::cmd_solve_ocp(solve_preset, max_iters);
  return rhmpc::exit_config;
}
