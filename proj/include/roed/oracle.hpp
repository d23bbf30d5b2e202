#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "roed/optimizer.hpp"

namespace roed {

// Independent objective route for validation: SVD pseudoinverse of the
// masked covariance and a full dense trace.  Shares only the model
// module with the production path and never touches the cache.
double oracle_objective(const DesignVector& design, const Eigen::VectorXd& lambda,
                        const Problem& problem, const PenaltyConfig& penalty_cfg,
                        bool include_prior_trace = true);

struct BruteForceRow {
  std::uint64_t design_index = 0;
  DesignVector design;
  std::vector<double> values;  // objective per sample-set member, input order
  double min_value = 0.0;
  Eigen::VectorXd argmin_lambda;
  bool is_optimal = false;
  bool zero_penalty = false;
};

struct BruteForceResult {
  std::vector<BruteForceRow> rows;  // all 2^n designs, by design index
  DesignVector optimum;
  double optimum_value = 0.0;
};

// Exhaustive max-min over all binary designs and the sampled parameter
// set.  Guarded to n_sensors <= 20.
BruteForceResult brute_force_maxmin(const SampleSet& sample_set, const Problem& problem,
                                    const PenaltyConfig& penalty_cfg,
                                    bool include_prior_trace = true);

// Exhaustive argmax at one nominal parameter value.
DesignVector nominal_solve(const Eigen::VectorXd& lambda_nominal, const Problem& problem,
                           const PenaltyConfig& penalty_cfg);

struct RedundancyReport {
  double overall_ratio = 0.0;
  double outer_ratio = 0.0;
  std::vector<std::int64_t> new_evaluations_per_iteration;
};

RedundancyReport redundancy_report(const CachePhaseStats& overall,
                                   const CachePhaseStats& outer,
                                   const SolverTrace& trace);

// Per-design table as CSV (design_index, bits, per-lambda values,
// min, argmin lambda, zero_penalty, is_optimal).
std::string brute_force_csv(const BruteForceResult& result, const SampleSet& sample_set);

}  // namespace roed
