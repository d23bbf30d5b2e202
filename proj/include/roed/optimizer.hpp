#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "roed/objective.hpp"
#include "roed/policy.hpp"

namespace roed {

struct UncertainParam {
  Eigen::VectorXd lambda;
};

// Finite, growing collection of uncertain-parameter values.  Members
// closer than the dedup tolerance in max-norm are treated as equal.
class SampleSet {
 public:
  explicit SampleSet(double dedup_tol = 1e-10) : dedup_tol_(dedup_tol) {}

  // Returns false (and does not grow) when lambda duplicates a member.
  bool add(const Eigen::VectorXd& lambda);
  bool contains(const Eigen::VectorXd& lambda) const;

  const std::vector<Eigen::VectorXd>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  Eigen::VectorXd mean() const;
  double dedup_tol() const { return dedup_tol_; }

 private:
  std::vector<Eigen::VectorXd> members_;
  double dedup_tol_;
};

// Lower and upper box corners plus the midpoint.
SampleSet default_initial_sample(const NoiseModel& noise);

// Memo table from (design, lambda) pairs to objective values.  Lambda
// is quantized to 12 decimal digits before keying.  Thread safe;
// insert-if-absent with the first writer winning.  When disabled it
// keeps full counters but always re-evaluates.
class EvaluationCache {
 public:
  enum class Phase { outer = 0, inner = 1, final_selection = 2 };

  explicit EvaluationCache(bool enabled = true) : enabled_(enabled) {}

  void set_phase(Phase phase);
  ObjectiveValue get_or_eval(const DesignVector& design, const Eigen::VectorXd& lambda,
                             const std::function<ObjectiveValue()>& evaluator);

  std::int64_t total_requests() const;
  std::int64_t unique_evaluations() const;
  std::int64_t total_requests(Phase phase) const;
  std::int64_t unique_evaluations(Phase phase) const;
  // 1 - unique/total over all phases (0 when nothing was requested).
  double redundancy_ratio() const;
  double redundancy_ratio(Phase phase) const;
  bool enabled() const { return enabled_; }

  static std::string key(const DesignVector& design, const Eigen::VectorXd& lambda);

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, ObjectiveValue> table_;
  bool enabled_;
  Phase phase_ = Phase::outer;
  std::int64_t totals_[3] = {0, 0, 0};
  std::int64_t uniques_[3] = {0, 0, 0};
};

// Memoization front end: returns the stored value on a key hit without
// invoking the evaluator; otherwise evaluates and stores.
ObjectiveValue cached_objective(EvaluationCache& cache, const DesignVector& design,
                                const Eigen::VectorXd& lambda,
                                const std::function<ObjectiveValue()>& evaluator);

struct SolverConfig {
  double gamma1 = 1e-4;         // outer learning rate
  int outer_steps_per_call = 5; // ascent steps per policy-update call
  int max_iterations = 100;     // outer alternation cap
  double tol = 1e-8;            // objective-change tolerance
  double pgtol = 1e-8;          // projected-gradient tolerance
  int n_ens = 32;               // ensemble size
  int n_b = 32;                 // baseline batch count
  int m_final = 5;              // designs sampled from the final policy
  std::uint64_t seed = 0;
};

void validate(const SolverConfig& cfg);

struct IterationRecord {
  int iteration = 0;             // 1-based
  double psi_after_outer = 0.0;  // stochastic objective after the policy update
  double psi_after_inner = 0.0;  // same ensemble, after the sample-set update
  Eigen::VectorXd lambda_new;    // value returned by the inner problem
  bool lambda_added = false;
  std::int64_t new_evaluations = 0;  // previously unseen (design, lambda) pairs
  double redundancy_ratio = 0.0;     // cumulative, all phases
  Eigen::VectorXd theta;             // policy snapshot after the outer update
  bool perturbed = false;            // policy perturbation applied after this iteration
};

struct SolverTrace {
  std::vector<IterationRecord> iterations;
  std::string termination;  // human-readable reason; convergence tests used are
                            // |d psi| < tol, max |projected gradient| <= pgtol,
                            // sample-set growth, and the iteration cap
  bool converged = false;
  int perturbations = 0;
};

struct StocOptReport {
  BernoulliPolicy policy;
  double psi = 0.0;           // mean sampled min-over-set objective at the last step
  double max_proj_grad = 0.0; // at the updated policy
  bool stalled = false;       // stopped early on tol or pgtol
  int steps = 0;
  DesignSample last_sample;
  std::vector<double> last_values;  // min-over-set objective per sampled design
};

// Up to outer_steps_per_call projected stochastic-ascent steps on the
// policy, values taken as the minimum over the sample set.
StocOptReport stoc_param_opt(const BernoulliPolicy& policy0, const SampleSet& sample_set,
                             const Problem& problem, const PenaltyConfig& penalty_cfg,
                             const SolverConfig& cfg, EvaluationCache& cache,
                             std::uint64_t iteration_tag);

struct NoiseOptResult {
  Eigen::VectorXd lambda;
  bool line_search_warning = false;
  int iterations = 0;
};

// Bound-constrained descent of the ensemble-mean objective over the
// noise parameter: projected gradient with Armijo backtracking, started
// from the sample-set mean, with one design ensemble drawn up front.
NoiseOptResult noise_opt(const BernoulliPolicy& policy, const SampleSet& sample_set,
                         const Problem& problem, const PenaltyConfig& penalty_cfg,
                         const SolverConfig& cfg, EvaluationCache& cache,
                         std::uint64_t iteration_tag);

struct CachePhaseStats {
  std::int64_t total = 0;
  std::int64_t unique = 0;
};

struct SolveResult {
  DesignVector design;
  BernoulliPolicy policy;
  SolverTrace trace;
  Eigen::VectorXd final_lambda;      // lambda used to rank the final candidates
  ObjectiveValue objective_value;    // of the returned design at final_lambda
  double min_over_sample_set = 0.0;  // worst-case value of the returned design
  SampleSet sample_set{1e-10};
  int iterations = 0;
  std::vector<DesignVector> final_candidates;
  CachePhaseStats cache_overall;
  CachePhaseStats cache_outer;
};

struct SolveOptions {
  bool use_cache = true;
  // Invoked after each completed iteration; used to flush partial traces.
  std::function<void(const IterationRecord&)> on_iteration;
};

// Alternates the stochastic policy update and the noise optimization,
// growing the sample set with each new worst-case parameter, then
// ranks m_final designs sampled from the final policy at the last
// lambda and returns the best (ties broken by smallest design index).
SolveResult robust_solve(const Problem& problem, const PenaltyConfig& penalty_cfg,
                         const SolverConfig& cfg, SampleSet initial_sample,
                         const SolveOptions& options = {});

template <typename Solution>
struct MaxMinResult {
  Solution solution{};
  SampleSet sample_set{1e-10};
  int iterations = 0;
  bool converged = false;
};

// Generic sampled max-min alternation: outer_max solves the outer
// problem over the current sample set, inner_min returns the worst-case
// parameter for that solution.  Terminates when the inner step adds no
// new parameter or after max_iter iterations.
template <typename Solution, typename OuterMax, typename InnerMin>
MaxMinResult<Solution> generic_maxmin(OuterMax&& outer_max, InnerMin&& inner_min,
                                      SampleSet initial_set, int max_iter) {
  MaxMinResult<Solution> result;
  result.sample_set = std::move(initial_set);
  for (int l = 0; l < max_iter; ++l) {
    result.solution = outer_max(result.sample_set);
    Eigen::VectorXd lam = inner_min(result.solution);
    ++result.iterations;
    if (!result.sample_set.add(lam)) {
      result.converged = true;
      break;
    }
  }
  if (max_iter == 0) result.solution = outer_max(result.sample_set);
  return result;
}

}  // namespace roed
