#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "robustoed.h"
#include "roed/objective.hpp"
#include "roed/weighting.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

const char* kTwoSensorConfig = R"(
[model]
grid_n = 8
n_obs_times = 5
dt = 0.2
t1 = 1.0
kappa = 0.01
velocity = 1.0 0.0
sensors = 2,2 5,5

[penalty]
kind = none
alpha = 0

[solver]
seed = 1

[output]
directory = out
)";

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("roed_capi_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path path = dir / "experiment.cfg";
  std::ofstream out(path);
  out << text;
  return path;
}

}  // namespace

TEST_CASE("version and error reporting") {
  CHECK(std::string(roed_version()).find('.') != std::string::npos);
  roed_config* cfg = nullptr;
  CHECK(roed_config_open("/nonexistent/path.cfg", &cfg) == ROED_ERR_VALIDATION);
  CHECK(std::string(roed_last_error()).size() > 0);
  CHECK(roed_config_parse("[model]\nbogus = 1\n", &cfg) == ROED_ERR_VALIDATION);
  CHECK(std::string(roed_last_error()).find("bogus") != std::string::npos);
  CHECK(roed_config_parse(nullptr, &cfg) == ROED_ERR_VALIDATION);
}

TEST_CASE("objective evaluation through the shared interface") {
  roed_config* cfg = nullptr;
  REQUIRE(roed_config_parse(kTwoSensorConfig, &cfg) == ROED_OK);
  roed_problem* problem = nullptr;
  REQUIRE(roed_problem_open(cfg, &problem) == ROED_OK);

  CHECK(roed_problem_sensors(problem) == 2);
  CHECK(roed_problem_obs_times(problem) == 5);
  CHECK(roed_problem_observations(problem) == 10);
  CHECK(roed_problem_parameters(problem) == 64);

  const int32_t design[2] = {1, 0};
  const double lambda[2] = {0.03, 0.025};
  double utility = 0, penalty_value = 0, total = 0;
  REQUIRE(roed_eval_objective(problem, design, 2, lambda, 2, &utility, &penalty_value,
                              &total) == ROED_OK);

  // Cross-check against the in-process core.
  const roed::ExperimentConfig core_cfg = roed::parse_config_text(kTwoSensorConfig);
  const roed::Problem core_problem = roed::build_problem(core_cfg);
  Eigen::VectorXd lam(2);
  lam << 0.03, 0.025;
  const roed::ObjectiveValue expected = roed::objective(
      roed::DesignVector({1, 0}), lam, core_problem, roed::penalty_config(core_cfg));
  CHECK(total == expected.total);
  CHECK(utility == expected.utility);

  double grad[2] = {0, 0};
  REQUIRE(roed_eval_grad_lambda(problem, design, 2, lambda, 2, grad, 2) == ROED_OK);
  const Eigen::VectorXd expected_grad =
      roed::grad_lambda(roed::DesignVector({1, 0}), lam, core_problem);
  CHECK(grad[0] == expected_grad[0]);
  CHECK(grad[1] == expected_grad[1]);
  CHECK(grad[1] == 0.0);

  const double bad_lambda[2] = {0.05, 0.03};
  CHECK(roed_eval_objective(problem, design, 2, bad_lambda, 2, &utility, &penalty_value,
                            &total) == ROED_ERR_VALIDATION);

  roed_problem_close(problem);
  roed_config_close(cfg);
}

TEST_CASE("solve and brute force handles agree") {
  roed_config* cfg = nullptr;
  REQUIRE(roed_config_parse(kTwoSensorConfig, &cfg) == ROED_OK);
  roed_problem* problem = nullptr;
  REQUIRE(roed_problem_open(cfg, &problem) == ROED_OK);

  roed_solution* solution = nullptr;
  REQUIRE(roed_solve(problem, &solution) == ROED_OK);
  int32_t bits[2] = {0, 0};
  REQUIRE(roed_solution_design(solution, bits, 2) == ROED_OK);
  CHECK(bits[0] == 1);
  CHECK(bits[1] == 1);
  CHECK(roed_solution_design_index(solution) == 4);
  CHECK(roed_solution_converged(solution) == 1);
  CHECK(roed_solution_iterations(solution) <= 10);

  roed_table* table = nullptr;
  REQUIRE(roed_brute_force(problem, &table) == ROED_OK);
  CHECK(roed_table_rows(table) == 4);
  CHECK(roed_table_optimal_index(table) == 4);
  const double worst = roed_solution_worst_case(solution);
  CHECK(std::abs(worst - roed_table_optimal_value(table)) <= 1e-9);

  uint64_t index = 0;
  double min_value = 0;
  int32_t optimal = 0;
  REQUIRE(roed_table_row(table, 3, &index, &min_value, &optimal) == ROED_OK);
  CHECK(index == 4);
  CHECK(optimal == 1);
  CHECK(roed_table_row(table, 9, &index, &min_value, &optimal) == ROED_ERR_VALIDATION);

  double theta[2] = {0, 0};
  REQUIRE(roed_solution_theta(solution, theta, 2) == ROED_OK);
  CHECK(theta[0] > 0.9);
  double lambda_out[2] = {0, 0};
  REQUIRE(roed_solution_lambda(solution, lambda_out, 2) == ROED_OK);
  CHECK(lambda_out[0] >= 0.02);
  CHECK(roed_solution_theta(solution, theta, 1) == ROED_ERR_VALIDATION);

  roed_table_close(table);
  roed_solution_close(solution);
  roed_problem_close(problem);
  roed_config_close(cfg);
}

TEST_CASE("config overrides and rendering") {
  roed_config* cfg = nullptr;
  REQUIRE(roed_config_parse(kTwoSensorConfig, &cfg) == ROED_OK);
  CHECK(roed_config_set_seed(cfg, 42) == ROED_OK);
  CHECK(roed_config_set_output_dir(cfg, "elsewhere") == ROED_OK);
  size_t needed = 0;
  REQUIRE(roed_config_render(cfg, nullptr, 0, &needed) == ROED_OK);
  std::vector<char> buffer(needed);
  REQUIRE(roed_config_render(cfg, buffer.data(), buffer.size(), &needed) == ROED_OK);
  const std::string text(buffer.data());
  CHECK(text.find("seed = 42") != std::string::npos);
  CHECK(text.find("directory = elsewhere") != std::string::npos);
  roed_config_close(cfg);
}

TEST_CASE("batch commands write the run artifacts") {
  const fs::path dir = scratch_dir("cmds");
  const fs::path cfg_path = write_config(dir, kTwoSensorConfig);
  const fs::path out = dir / "run";

  REQUIRE(roed_cmd_solve(cfg_path.string().c_str(), out.string().c_str(), 0, 0, 1) ==
          ROED_OK);
  CHECK(fs::exists(out / "result.txt"));
  CHECK(fs::exists(out / "trace.csv"));
  CHECK(fs::exists(out / "redundancy.csv"));
  CHECK(fs::exists(out / "config_echo.cfg"));

  // Determinism: identical bytes on a re-run with the same seed.
  const std::string first = slurp(out / "result.txt");
  REQUIRE(roed_cmd_solve(cfg_path.string().c_str(), out.string().c_str(), 0, 0, 1) ==
          ROED_OK);
  CHECK(slurp(out / "result.txt") == first);

  // Seed override changes the recorded seed.
  REQUIRE(roed_cmd_solve(cfg_path.string().c_str(), out.string().c_str(), 1, 7, 1) ==
          ROED_OK);
  CHECK(slurp(out / "result.txt").find("seed = 7") != std::string::npos);

  // Reparsing the echoed configuration reproduces the run.
  REQUIRE(roed_cmd_solve((out / "config_echo.cfg").string().c_str(),
                         (dir / "run_echo").string().c_str(), 0, 0, 1) == ROED_OK);
  const std::string echoed = slurp(dir / "run_echo" / "result.txt");
  CHECK(echoed == slurp(out / "result.txt"));

  REQUIRE(roed_cmd_bruteforce(cfg_path.string().c_str(), out.string().c_str(), 1, 7, 1) ==
          ROED_OK);
  CHECK(fs::exists(out / "bruteforce.csv"));
  CHECK(fs::exists(out / "optimality_gap.txt"));
  const std::string gap = slurp(out / "optimality_gap.txt");
  CHECK(gap.find("optimality_gap_absolute = 0") != std::string::npos);
  std::istringstream lines(slurp(out / "bruteforce.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 5);  // header + 2^2 designs

  REQUIRE(roed_cmd_gradcheck(cfg_path.string().c_str(), out.string().c_str(), 0, 0, 1, 0) ==
          ROED_OK);
  CHECK(fs::exists(out / "gradcheck.csv"));
  CHECK(roed_cmd_gradcheck(cfg_path.string().c_str(), out.string().c_str(), 0, 0, 1, 1) ==
        ROED_ERR_CHECK_FAILED);

  REQUIRE(roed_cmd_report(out.string().c_str(), 1) == ROED_OK);
  CHECK(fs::exists(out / "summary_objective.csv"));
  CHECK(fs::exists(out / "summary_new_evals.csv"));
  CHECK(fs::exists(out / "summary_redundancy.csv"));

  const fs::path empty = dir / "empty";
  fs::create_directories(empty);
  CHECK(roed_cmd_report(empty.string().c_str(), 1) == ROED_ERR_VALIDATION);
  CHECK(roed_cmd_report(nullptr, 1) == ROED_ERR_VALIDATION);

  // Invalid configuration: validation exit.
  const fs::path bad = write_config(dir, "[model]\nsensors = 2,2\n[noise]\n"
                                         "lambda_lo = 0.04\nlambda_hi = 0.02\n");
  CHECK(roed_cmd_solve(bad.string().c_str(), out.string().c_str(), 0, 0, 1) ==
        ROED_ERR_VALIDATION);
  fs::remove_all(dir);
}
