#include "robustoed.h"

#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "roed/config.hpp"
#include "roed/oracle.hpp"
#include "roed/runner.hpp"

namespace {

thread_local std::string g_last_error;

roed_status set_error(const std::exception& e, roed_status code) {
  g_last_error = e.what();
  return code;
}

roed_status classify(const std::exception& e) {
  if (dynamic_cast<const roed::ConfigError*>(&e)) return set_error(e, ROED_ERR_VALIDATION);
  if (dynamic_cast<const std::invalid_argument*>(&e)) return set_error(e, ROED_ERR_VALIDATION);
  if (dynamic_cast<const std::out_of_range*>(&e)) return set_error(e, ROED_ERR_VALIDATION);
  return set_error(e, ROED_ERR_RUNTIME);
}

roed::DesignVector design_from_bits(const int32_t* bits, int32_t len) {
  std::vector<std::uint8_t> v(static_cast<std::size_t>(len));
  for (int32_t i = 0; i < len; ++i) {
    if (bits[i] != 0 && bits[i] != 1) throw std::invalid_argument("design entries must be 0 or 1");
    v[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(bits[i]);
  }
  return roed::DesignVector(std::move(v));
}

Eigen::VectorXd vector_from(const double* data, int32_t len) {
  Eigen::VectorXd v(len);
  for (int32_t i = 0; i < len; ++i) v[i] = data[i];
  return v;
}

roed_status copy_out(const Eigen::VectorXd& v, double* out, int32_t cap) {
  if (cap < v.size()) {
    g_last_error = "output buffer too small";
    return ROED_ERR_VALIDATION;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i];
  return ROED_OK;
}

}  // namespace

struct roed_config {
  roed::ExperimentConfig cfg;
};

struct roed_problem {
  roed::Problem problem;
  roed::PenaltyConfig penalty;
  roed::SolverConfig solver;
};

struct roed_solution {
  roed::SolveResult result;
};

struct roed_table {
  roed::BruteForceResult table;
};

extern "C" {

const char* roed_version(void) { return "1.0.0"; }

const char* roed_last_error(void) { return g_last_error.c_str(); }

roed_status roed_config_open(const char* path, roed_config** out) {
  if (!path || !out) {
    g_last_error = "null argument";
    return ROED_ERR_VALIDATION;
  }
  try {
    auto* handle = new roed_config{roed::parse_config_file(path)};
    roed::validate(handle->cfg);
    *out = handle;
    return ROED_OK;
  } catch (const std::exception& e) {
    return classify(e);
  }
}

roed_status roed_config_parse(const char* text, roed_config** out) {
  if (!text || !out) {
    g_last_error = "null argument";
    return ROED_ERR_VALIDATION;
  }
  try {
    auto* handle = new roed_config{roed::parse_config_text(text)};
    roed::validate(handle->cfg);
    *out = handle;
    return ROED_OK;
  } catch (const std::exception& e) {
    return classify(e);
  }
}

void roed_config_close(roed_config* cfg) { delete cfg; }

roed_status roed_config_set_seed(roed_config* cfg, int64_t seed) {
  if (!cfg) {
    g_last_error = "null configuration";
    return ROED_ERR_VALIDATION;
  }
  cfg->cfg.solver.seed = static_cast<std::uint64_t>(seed);
  return ROED_OK;
}

roed_status roed_config_set_output_dir(roed_config* cfg, const char* dir) {
  if (!cfg || !dir || !*dir) {
    g_last_error = "null configuration or empty directory";
    return ROED_ERR_VALIDATION;
  }
  cfg->cfg.output.directory = dir;
  return ROED_OK;
}

roed_status roed_config_render(const roed_config* cfg, char* buf, size_t cap,
                               size_t* needed) {
  if (!cfg) {
    g_last_error = "null configuration";
    return ROED_ERR_VALIDATION;
  }
  try {
    const std::string text = roed::render_config(cfg->cfg);
    if (needed) *needed = text.size() + 1;
    if (buf && cap > 0) {
      const size_t n = std::min(cap - 1, text.size());
      std::memcpy(buf, text.data(), n);
      buf[n] = '\0';
    }
    return ROED_OK;
  } catch (const std::exception& e) {
    return classify(e);
  }
}

roed_status roed_problem_open(const roed_config* cfg, roed_problem** out) {
  if (!cfg || !out) {
    g_last_error = "null argument";
    return ROED_ERR_VALIDATION;
  }
  try {
    auto* handle = new roed_problem{roed::build_problem(cfg->cfg),
                                    roed::penalty_config(cfg->cfg), cfg->cfg.solver};
    *out = handle;
    return ROED_OK;
  } catch (const std::exception& e) {
    return classify(e);
  }
}

void roed_problem_close(roed_problem* problem) { delete problem; }

int32_t roed_problem_sensors(const roed_problem* problem) {
  return problem ? problem->problem.noise.n_sensors : 0;
}

int32_t roed_problem_obs_times(const roed_problem* problem) {
  return problem ? problem->problem.noise.n_obs_times : 0;
}

int32_t roed_problem_observations(const roed_problem* problem) {
  return problem ? problem->problem.model.n_obs() : 0;
}

int32_t roed_problem_parameters(const roed_problem* problem) {
  return problem ? problem->problem.model.n_param() : 0;
}

roed_status roed_eval_objective(const roed_problem* problem, const int32_t* design,
                                int32_t design_len, const double* lambda,
                                int32_t lambda_len, double* utility, double* penalty_out,
                                double* total) {
  if (!problem || !design || !lambda) {
    g_last_error = "null argument";
    return ROED_ERR_VALIDATION;
  }
  try {
    const roed::DesignVector d = design_from_bits(design, design_len);
    const Eigen::VectorXd lam = vector_from(lambda, lambda_len);
    const roed::ObjectiveValue v =
        roed::objective(d, lam, problem->problem, problem->penalty);
    if (utility) *utility = v.utility;
    if (penalty_out) *penalty_out = v.penalty;
    if (total) *total = v.total;
    return ROED_OK;
  } catch (const std::exception& e) {
    return classify(e);
  }
}

roed_status roed_eval_grad_lambda(const roed_problem* problem, const int32_t* design,
                                  int32_t design_len, const double* lambda,
                                  int32_t lambda_len, double* grad, int32_t grad_cap) {
  if (!problem || !design || !lambda || !grad) {
    g_last_error = "null argument";
    return ROED_ERR_VALIDATION;
  }
  try {
    const roed::DesignVector d = design_from_bits(design, design_len);
    const Eigen::VectorXd lam = vector_from(lambda, lambda_len);
    return copy_out(roed::grad_lambda(d, lam, problem->problem), grad, grad_cap);
  } catch (const std::exception& e) {
    return classify(e);
  }
}

roed_status roed_solve(const roed_problem* problem, roed_solution** out) {
  if (!problem || !out) {
    g_last_error = "null argument";
    return ROED_ERR_VALIDATION;
  }
  try {
    auto* handle = new roed_solution{
        roed::robust_solve(problem->problem, problem->penalty, problem->solver,
                           roed::default_initial_sample(problem->problem.noise))};
    *out = handle;
    return ROED_OK;
  } catch (const std::exception& e) {
    return classify(e);
  }
}

void roed_solution_close(roed_solution* solution) { delete solution; }

roed_status roed_solution_design(const roed_solution* solution, int32_t* bits, int32_t cap) {
  if (!solution || !bits) {
    g_last_error = "null argument";
    return ROED_ERR_VALIDATION;
  }
  const roed::DesignVector& d = solution->result.design;
  if (cap < d.size()) {
    g_last_error = "output buffer too small";
    return ROED_ERR_VALIDATION;
  }
  for (int i = 0; i < d.size(); ++i) bits[i] = d.active(i) ? 1 : 0;
  return ROED_OK;
}

uint64_t roed_solution_design_index(const roed_solution* solution) {
  return solution ? roed::design_index(solution->result.design) : 0;
}

roed_status roed_solution_theta(const roed_solution* solution, double* out, int32_t cap) {
  if (!solution || !out) {
    g_last_error = "null argument";
    return ROED_ERR_VALIDATION;
  }
  return copy_out(solution->result.policy.theta, out, cap);
}

roed_status roed_solution_lambda(const roed_solution* solution, double* out, int32_t cap) {
  if (!solution || !out) {
    g_last_error = "null argument";
    return ROED_ERR_VALIDATION;
  }
  return copy_out(solution->result.final_lambda, out, cap);
}

double roed_solution_objective(const roed_solution* solution) {
  return solution ? solution->result.objective_value.total : 0.0;
}

double roed_solution_worst_case(const roed_solution* solution) {
  return solution ? solution->result.min_over_sample_set : 0.0;
}

int32_t roed_solution_iterations(const roed_solution* solution) {
  return solution ? solution->result.iterations : 0;
}

int32_t roed_solution_converged(const roed_solution* solution) {
  return solution && solution->result.trace.converged ? 1 : 0;
}

roed_status roed_brute_force(const roed_problem* problem, roed_table** out) {
  if (!problem || !out) {
    g_last_error = "null argument";
    return ROED_ERR_VALIDATION;
  }
  try {
    auto* handle = new roed_table{
        roed::brute_force_maxmin(roed::default_initial_sample(problem->problem.noise),
                                 problem->problem, problem->penalty)};
    *out = handle;
    return ROED_OK;
  } catch (const std::exception& e) {
    return classify(e);
  }
}

void roed_table_close(roed_table* table) { delete table; }

int64_t roed_table_rows(const roed_table* table) {
  return table ? static_cast<int64_t>(table->table.rows.size()) : 0;
}

roed_status roed_table_row(const roed_table* table, int64_t row, uint64_t* design_index,
                           double* min_value, int32_t* is_optimal) {
  if (!table) {
    g_last_error = "null table";
    return ROED_ERR_VALIDATION;
  }
  if (row < 0 || row >= static_cast<int64_t>(table->table.rows.size())) {
    g_last_error = "row index out of range";
    return ROED_ERR_VALIDATION;
  }
  const roed::BruteForceRow& r = table->table.rows[static_cast<std::size_t>(row)];
  if (design_index) *design_index = r.design_index;
  if (min_value) *min_value = r.min_value;
  if (is_optimal) *is_optimal = r.is_optimal ? 1 : 0;
  return ROED_OK;
}

uint64_t roed_table_optimal_index(const roed_table* table) {
  return table ? roed::design_index(table->table.optimum) : 0;
}

double roed_table_optimal_value(const roed_table* table) {
  return table ? table->table.optimum_value : 0.0;
}

static roed::RunOptions make_run_options(const char* config_path, const char* out_dir,
                                         int has_seed_override, int64_t seed, int quiet) {
  roed::RunOptions options;
  options.config_path = config_path ? config_path : "";
  options.out_dir = out_dir ? out_dir : "";
  if (has_seed_override) options.seed_override = seed;
  options.quiet = quiet != 0;
  return options;
}

roed_status roed_cmd_solve(const char* config_path, const char* out_dir,
                           int has_seed_override, int64_t seed, int quiet) {
  try {
    return roed::cmd_solve(make_run_options(config_path, out_dir, has_seed_override, seed, quiet));
  } catch (const std::exception& e) {
    return classify(e);
  }
}

roed_status roed_cmd_bruteforce(const char* config_path, const char* out_dir,
                                int has_seed_override, int64_t seed, int quiet) {
  try {
    return roed::cmd_bruteforce(
        make_run_options(config_path, out_dir, has_seed_override, seed, quiet));
  } catch (const std::exception& e) {
    return classify(e);
  }
}

roed_status roed_cmd_gradcheck(const char* config_path, const char* out_dir,
                               int has_seed_override, int64_t seed, int quiet,
                               int inject_sign_flip) {
  try {
    return roed::cmd_gradcheck(
        make_run_options(config_path, out_dir, has_seed_override, seed, quiet),
        inject_sign_flip != 0);
  } catch (const std::exception& e) {
    return classify(e);
  }
}

roed_status roed_cmd_report(const char* runs_dir, int quiet) {
  if (!runs_dir) {
    g_last_error = "null directory";
    return ROED_ERR_VALIDATION;
  }
  try {
    return roed::cmd_report(runs_dir, quiet != 0);
  } catch (const std::exception& e) {
    return classify(e);
  }
}

}  // extern "C"
