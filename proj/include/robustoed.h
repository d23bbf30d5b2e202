/* robustoed.h - C interface to the robust binary experimental-design solver.
 *
 * The library solves worst-case (max-min) sensor-placement problems for
 * linear Gaussian inverse problems with a misspecified observation-noise
 * parameter.  All objects are opaque handles; every function that can
 * fail returns a status code and leaves a message in roed_last_error().
 */
#ifndef ROBUSTOED_H
#define ROBUSTOED_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; they double as CLI exit codes. */
enum {
  ROED_OK = 0,
  ROED_ERR_VALIDATION = 1,
  ROED_ERR_RUNTIME = 2,
  ROED_ERR_CHECK_FAILED = 3
};
typedef int roed_status;

const char* roed_version(void);

/* Message for the most recent failing call on this thread. */
const char* roed_last_error(void);

typedef struct roed_config roed_config;
typedef struct roed_problem roed_problem;
typedef struct roed_solution roed_solution;
typedef struct roed_table roed_table;

/* ---- configuration ---------------------------------------------------- */

roed_status roed_config_open(const char* path, roed_config** out);
roed_status roed_config_parse(const char* text, roed_config** out);
void roed_config_close(roed_config* cfg);

roed_status roed_config_set_seed(roed_config* cfg, int64_t seed);
roed_status roed_config_set_output_dir(roed_config* cfg, const char* dir);

/* Effective configuration text (defaults resolved).  Writes up to cap
 * bytes including the terminator; *needed receives the full length. */
roed_status roed_config_render(const roed_config* cfg, char* buf, size_t cap,
                               size_t* needed);

/* ---- problem ----------------------------------------------------------- */

roed_status roed_problem_open(const roed_config* cfg, roed_problem** out);
void roed_problem_close(roed_problem* problem);

int32_t roed_problem_sensors(const roed_problem* problem);
int32_t roed_problem_obs_times(const roed_problem* problem);
int32_t roed_problem_observations(const roed_problem* problem);
int32_t roed_problem_parameters(const roed_problem* problem);

/* Penalized objective at a binary design (entries 0/1) and an
 * admissible noise parameter (length = number of sensors). */
roed_status roed_eval_objective(const roed_problem* problem, const int32_t* design,
                                int32_t design_len, const double* lambda,
                                int32_t lambda_len, double* utility, double* penalty,
                                double* total);

/* Gradient of the utility with respect to the noise parameter. */
roed_status roed_eval_grad_lambda(const roed_problem* problem, const int32_t* design,
                                  int32_t design_len, const double* lambda,
                                  int32_t lambda_len, double* grad,
                                  int32_t grad_cap);

/* ---- solver ------------------------------------------------------------ */

roed_status roed_solve(const roed_problem* problem, roed_solution** out);
void roed_solution_close(roed_solution* solution);

roed_status roed_solution_design(const roed_solution* solution, int32_t* bits,
                                 int32_t cap);
uint64_t roed_solution_design_index(const roed_solution* solution);
roed_status roed_solution_theta(const roed_solution* solution, double* out, int32_t cap);
roed_status roed_solution_lambda(const roed_solution* solution, double* out, int32_t cap);
double roed_solution_objective(const roed_solution* solution);
double roed_solution_worst_case(const roed_solution* solution);
int32_t roed_solution_iterations(const roed_solution* solution);
int32_t roed_solution_converged(const roed_solution* solution);

/* ---- brute-force oracle ------------------------------------------------ */

roed_status roed_brute_force(const roed_problem* problem, roed_table** out);
void roed_table_close(roed_table* table);

int64_t roed_table_rows(const roed_table* table);
roed_status roed_table_row(const roed_table* table, int64_t row,
                           uint64_t* design_index, double* min_value,
                           int32_t* is_optimal);
uint64_t roed_table_optimal_index(const roed_table* table);
double roed_table_optimal_value(const roed_table* table);

/* ---- batch commands (file in, files out); used by the CLI -------------- */

roed_status roed_cmd_solve(const char* config_path, const char* out_dir,
                           int has_seed_override, int64_t seed, int quiet);
roed_status roed_cmd_bruteforce(const char* config_path, const char* out_dir,
                                int has_seed_override, int64_t seed, int quiet);
roed_status roed_cmd_gradcheck(const char* config_path, const char* out_dir,
                               int has_seed_override, int64_t seed, int quiet,
                               int inject_sign_flip);
roed_status roed_cmd_report(const char* runs_dir, int quiet);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ROBUSTOED_H */
