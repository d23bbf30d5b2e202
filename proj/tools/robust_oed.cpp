// Command-line front end; talks to the solver exclusively through the
// shared-library C interface.

#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <string>

#include "robustoed.h"

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::int64_t seed = 0;
  bool has_seed = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "experiment configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out, "output directory (overrides the configuration)");
  cmd->add_option("--seed", args.seed, "seed override")->each([&](const std::string&) {
    args.has_seed = true;
  });
  cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

int finish(roed_status status) {
  if (status != ROED_OK) {
    const char* message = roed_last_error();
    if (message && *message) std::fprintf(stderr, "error: %s\n", message);
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Worst-case (max-min) binary sensor-placement design for linear "
               "Gaussian inverse problems"};
  app.require_subcommand(1);

  CommonArgs solve_args, brute_args, grad_args;
  bool inject_sign_flip = false;
  std::string runs_dir;
  bool report_quiet = false;

  CLI::App* solve = app.add_subcommand("solve", "run the robust stochastic solver");
  add_common(solve, solve_args);

  CLI::App* brute = app.add_subcommand("bruteforce", "exhaustive max-min table");
  add_common(brute, brute_args);

  CLI::App* grad = app.add_subcommand("gradcheck", "gradient and estimator checks");
  add_common(grad, grad_args);
  grad->add_flag("--inject-sign-flip", inject_sign_flip, "fault-injection test hook")
      ->group("");

  CLI::App* report = app.add_subcommand("report", "aggregate run traces into summaries");
  report->add_option("runs_dir", runs_dir, "directory containing one or more runs")
      ->required();
  report->add_flag("--quiet", report_quiet, "suppress progress output");

  CLI11_PARSE(app, argc, argv);

  if (solve->parsed())
    return finish(roed_cmd_solve(solve_args.config.c_str(),
                                 solve_args.out.empty() ? nullptr : solve_args.out.c_str(),
                                 solve_args.has_seed ? 1 : 0, solve_args.seed,
                                 solve_args.quiet ? 1 : 0));
  if (brute->parsed())
    return finish(roed_cmd_bruteforce(
        brute_args.config.c_str(), brute_args.out.empty() ? nullptr : brute_args.out.c_str(),
        brute_args.has_seed ? 1 : 0, brute_args.seed, brute_args.quiet ? 1 : 0));
  if (grad->parsed())
    return finish(roed_cmd_gradcheck(
        grad_args.config.c_str(), grad_args.out.empty() ? nullptr : grad_args.out.c_str(),
        grad_args.has_seed ? 1 : 0, grad_args.seed, grad_args.quiet ? 1 : 0,
        inject_sign_flip ? 1 : 0));
  if (report->parsed()) return finish(roed_cmd_report(runs_dir.c_str(), report_quiet ? 1 : 0));
  return 0;
}
