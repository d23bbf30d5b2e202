#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>

#include "roed/optimizer.hpp"
#include "roed/oracle.hpp"
#include "roed/rng.hpp"
#include "support.hpp"

using namespace roed;
using test_support::random_problem;

namespace {

Eigen::VectorXd vec1(double x) { return Eigen::VectorXd::Constant(1, x); }

SolverConfig quick_config(std::uint64_t seed) {
  SolverConfig cfg;
  cfg.seed = seed;
  return cfg;
}

ObjectiveValue make_value(double total) {
  ObjectiveValue v;
  v.utility = total;
  v.total = total;
  return v;
}

}  // namespace

TEST_CASE("sample set deduplicates within tolerance") {
  SampleSet set(1e-10);
  CHECK(set.add(vec1(0.02)));
  CHECK_FALSE(set.add(vec1(0.02)));
  CHECK_FALSE(set.add(vec1(0.02 + 5e-11)));
  CHECK(set.add(vec1(0.03)));
  CHECK(set.size() == 2);
  CHECK(set.mean()(0) == doctest::Approx(0.025).epsilon(1e-14));

  const NoiseModel nm = make_noise_model(0.02, 0.04, 3, 1);
  const SampleSet initial = default_initial_sample(nm);
  CHECK(initial.size() == 3);
  CHECK(initial.members()[0](0) == 0.02);
  CHECK(initial.members()[1](0) == 0.04);
  CHECK(initial.members()[2](0) == doctest::Approx(0.03));
}

TEST_CASE("evaluation cache memoizes by quantized key") {
  EvaluationCache cache;
  const DesignVector d = DesignVector({1, 0});
  int calls = 0;
  auto eval = [&] {
    ++calls;
    return make_value(3.5);
  };

  const Eigen::VectorXd lam = Eigen::VectorXd::Constant(2, 0.03);
  cache.get_or_eval(d, lam, eval);
  const ObjectiveValue again = cache.get_or_eval(d, lam, eval);
  CHECK(calls == 1);
  CHECK(again.total == 3.5);

  // Below the quantization step: same key.  Above it: distinct.
  Eigen::VectorXd tiny = lam;
  tiny[0] += 1e-13;
  cache.get_or_eval(d, tiny, eval);
  CHECK(calls == 1);
  Eigen::VectorXd shifted = lam;
  shifted[0] += 1e-9;
  cache.get_or_eval(d, shifted, eval);
  CHECK(calls == 2);

  CHECK(cache.total_requests() == 4);
  CHECK(cache.unique_evaluations() == 2);
}

TEST_CASE("redundancy ratio counts repeated requests") {
  EvaluationCache cache;
  const DesignVector d = DesignVector({1});
  // 40 unique requests, then 60 repeats of the first key.
  for (int i = 0; i < 40; ++i)
    cache.get_or_eval(d, vec1(0.02 + i * 1e-4), [] { return make_value(1.0); });
  for (int i = 0; i < 60; ++i)
    cache.get_or_eval(d, vec1(0.02), [] { return make_value(1.0); });
  CHECK(cache.total_requests() == 100);
  CHECK(cache.unique_evaluations() == 40);
  CHECK(cache.redundancy_ratio() == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("disabled cache re-evaluates but keeps identical counters") {
  EvaluationCache cache(false);
  const DesignVector d = DesignVector({1});
  int calls = 0;
  for (int i = 0; i < 3; ++i)
    cache.get_or_eval(d, vec1(0.025), [&] {
      ++calls;
      return make_value(2.0);
    });
  CHECK(calls == 3);
  CHECK(cache.total_requests() == 3);
  CHECK(cache.unique_evaluations() == 1);
}

TEST_CASE("generic maxmin on a two-design table") {
  // Lower envelope: design 0 has min 2.2 (at the 5th value), design 1
  // has min 1.0 (at the 3rd); the robust choice is design 0 although
  // design 1 wins at the 5th value alone.
  const double table[2][5] = {{3.0, 2.8, 2.6, 2.4, 2.2}, {4.0, 3.5, 1.0, 1.5, 3.9}};
  auto column = [](const Eigen::VectorXd& lam) {
    return static_cast<int>(std::lround(lam(0))) - 1;
  };
  auto outer_max = [&](const SampleSet& set) {
    double best = -1e300;
    int best_design = -1;
    for (int d = 0; d < 2; ++d) {
      double worst = 1e300;
      for (const auto& lam : set.members()) worst = std::min(worst, table[d][column(lam)]);
      if (worst > best) {
        best = worst;
        best_design = d;
      }
    }
    return best_design;
  };
  auto inner_min = [&](int d) {
    int best = 0;
    for (int j = 1; j < 5; ++j)
      if (table[d][j] < table[d][best]) best = j;
    return vec1(static_cast<double>(best + 1));
  };

  SampleSet initial(1e-10);
  initial.add(vec1(5.0));
  const auto result = generic_maxmin<int>(outer_max, inner_min, initial, 50);
  CHECK(result.solution == 0);
  CHECK(result.converged);
  CHECK(result.iterations == 2);  // growth, then a duplicate worst case
  CHECK(result.sample_set.size() == 2);

  // Exhaustive check of the lower envelope over the full table.
  CHECK(std::min({table[0][0], table[0][1], table[0][2], table[0][3], table[0][4]}) >
        std::min({table[1][0], table[1][1], table[1][2], table[1][3], table[1][4]}));

  // Degenerate scenario set: one iteration to the fixed point.
  SampleSet singleton(1e-10);
  singleton.add(vec1(1.0));
  const auto quick = generic_maxmin<int>(outer_max, inner_min, singleton, 50);
  CHECK(quick.iterations >= 1);
  CHECK(quick.converged);

  // Worst case already sampled: immediate convergence without growth.
  SampleSet preloaded(1e-10);
  preloaded.add(vec1(5.0));
  preloaded.add(vec1(3.0));
  const auto immediate = generic_maxmin<int>(outer_max, inner_min, preloaded, 50);
  CHECK(immediate.converged);
  CHECK(immediate.iterations == 1);
  CHECK(immediate.sample_set.size() == 2);
}

TEST_CASE("policy ascent moves toward the dominant design") {
  const Problem problem = random_problem(2, 2, 4, 61);
  const PenaltyConfig penalty_cfg{PenaltyKind::none, 0.0, 1};
  SampleSet set(1e-10);
  set.add(problem.noise.box_midpoint());

  SolverConfig cfg = quick_config(61);
  cfg.gamma1 = 2e-6;
  cfg.outer_steps_per_call = 1;
  EvaluationCache cache;

  BernoulliPolicy policy = BernoulliPolicy::uniform(2);
  auto exact_psi = [&](const BernoulliPolicy& p) {
    return exact_expectation(p, [&](const DesignVector& d) {
      return objective(d, set.members()[0], problem, penalty_cfg).total;
    });
  };

  double previous = exact_psi(policy);
  const double start = previous;
  for (int step = 0; step < 5; ++step) {
    policy = stoc_param_opt(policy, set, problem, penalty_cfg, cfg, cache,
                            static_cast<std::uint64_t>(step))
                 .policy;
    const double current = exact_psi(policy);
    CHECK(current >= previous - 1e-9);
    previous = current;
  }
  CHECK(previous > start);
  CHECK(policy.theta[0] > 0.5);
  CHECK(policy.theta[1] > 0.5);
}

TEST_CASE("zero configured steps return the policy unchanged") {
  const Problem problem = random_problem(3, 1, 4, 62);
  SampleSet set(1e-10);
  set.add(problem.noise.box_midpoint());
  SolverConfig cfg = quick_config(62);
  cfg.outer_steps_per_call = 0;
  EvaluationCache cache;
  const BernoulliPolicy policy0 = BernoulliPolicy::uniform(3);
  const StocOptReport rep =
      stoc_param_opt(policy0, set, problem, {PenaltyKind::none, 0.0, 1}, cfg, cache, 1);
  CHECK(rep.steps == 0);
  CHECK(rep.policy.theta == policy0.theta);
}

TEST_CASE("constant objective produces only statistical drift") {
  // Zero forward map: the objective is the prior trace for every design.
  Problem problem = random_problem(3, 1, 4, 63);
  problem.model = make_forward_model(Eigen::MatrixXd::Zero(3, 4), 3, 1);
  const PenaltyConfig penalty_cfg{PenaltyKind::none, 0.0, 1};
  SampleSet set(1e-10);
  set.add(problem.noise.box_midpoint());

  SolverConfig cfg = quick_config(63);
  EvaluationCache cache;
  const BernoulliPolicy policy0 = BernoulliPolicy::uniform(3);
  const StocOptReport rep =
      stoc_param_opt(policy0, set, problem, penalty_cfg, cfg, cache, 1);

  // Monte Carlo null test: estimate the per-step estimator spread for a
  // constant value function at theta = 0.5.
  const double constant = problem.prior.precision_trace;
  double max_sd = 0.0;
  {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(3);
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
      const DesignSample s =
          sample(policy0, cfg.n_ens * cfg.n_b, derive_seed(999, 5, r));
      std::vector<double> values(s.designs.size(), constant);
      const double b = optimal_baseline(s, values, policy0, cfg.n_ens, cfg.n_b);
      const Eigen::VectorXd g = stochastic_gradient(
          policy0, s, [&](const DesignVector&) { return constant; }, b);
      sum += g;
      sum_sq += g.cwiseProduct(g);
    }
    for (int i = 0; i < 3; ++i) {
      const double var = sum_sq[i] / reps - (sum[i] / reps) * (sum[i] / reps);
      max_sd = std::max(max_sd, std::sqrt(std::max(var, 0.0)));
    }
  }
  const double bound = 3.0 * cfg.gamma1 * cfg.outer_steps_per_call * std::max(max_sd, 1e-12);
  CHECK((rep.policy.theta - policy0.theta).lpNorm<Eigen::Infinity>() <= bound);
}

TEST_CASE("noise optimization fixed points") {
  const Problem problem = random_problem(2, 1, 4, 64);
  const PenaltyConfig penalty_cfg{PenaltyKind::none, 0.0, 1};
  SolverConfig cfg = quick_config(65);
  EvaluationCache cache;

  // All-inactive policy: constant objective, immediate return of the mean.
  BernoulliPolicy off;
  off.theta = Eigen::VectorXd::Zero(2);
  off.clip();
  SampleSet set = default_initial_sample(problem.noise);
  const NoiseOptResult at_mean = noise_opt(off, set, problem, penalty_cfg, cfg, cache, 1);
  CHECK((at_mean.lambda - set.mean()).lpNorm<Eigen::Infinity>() <= 1e-15);
  CHECK(at_mean.iterations == 0);

  // One active sensor: its worst case sits at the upper bound; the
  // inactive coordinate never moves.
  BernoulliPolicy one;
  one.theta.resize(2);
  one.theta << 1.0, 0.0;
  one.clip();
  const NoiseOptResult corner = noise_opt(one, set, problem, penalty_cfg, cfg, cache, 2);
  CHECK(corner.lambda[0] == doctest::Approx(problem.noise.lambda_hi).epsilon(1e-12));
  CHECK(corner.lambda[1] == doctest::Approx(set.mean()(1)).epsilon(1e-12));

  // Starting at the optimum: the projected gradient is zero immediately.
  SampleSet upper(1e-10);
  upper.add(problem.noise.box_upper());
  BernoulliPolicy all;
  all.theta = Eigen::VectorXd::Ones(2);
  all.clip();
  const NoiseOptResult stationary =
      noise_opt(all, upper, problem, penalty_cfg, cfg, cache, 3);
  CHECK(stationary.iterations == 0);
  CHECK((stationary.lambda - problem.noise.box_upper()).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("robust solve recovers the exhaustive maxmin optimum") {
  const Problem problem = random_problem(2, 2, 5, 65);
  const PenaltyConfig penalty_cfg{PenaltyKind::none, 0.0, 1};
  SolverConfig cfg = quick_config(7);

  const SolveResult result =
      robust_solve(problem, penalty_cfg, cfg, default_initial_sample(problem.noise));
  CHECK(result.trace.converged);
  CHECK(result.design == DesignVector::ones(2));

  const BruteForceResult table =
      brute_force_maxmin(result.sample_set, problem, penalty_cfg);
  const BruteForceRow& row = table.rows[design_index(result.design) - 1];
  CHECK(std::abs(row.min_value - table.optimum_value) <= 1e-9);
}

TEST_CASE("zero iterations return the best of the initial-policy sample") {
  const Problem problem = random_problem(3, 1, 4, 66);
  SolverConfig cfg = quick_config(8);
  cfg.max_iterations = 0;
  const SampleSet initial = default_initial_sample(problem.noise);
  const SolveResult result =
      robust_solve(problem, {PenaltyKind::none, 0.0, 1}, cfg, initial);
  CHECK(result.iterations == 0);
  CHECK_FALSE(result.trace.converged);
  CHECK(result.final_candidates.size() == static_cast<std::size_t>(cfg.m_final));
  bool found = false;
  for (const DesignVector& d : result.final_candidates) found = found || d == result.design;
  CHECK(found);
  CHECK((result.final_lambda - initial.members().back()).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(result.policy.theta == BernoulliPolicy::uniform(3).theta);
}

TEST_CASE("trace envelope, projection, and determinism invariants") {
  const Problem problem = random_problem(3, 2, 5, 67);
  const PenaltyConfig penalty_cfg{PenaltyKind::l0_squared, 10.0, 1};
  SolverConfig cfg = quick_config(9);
  cfg.max_iterations = 25;

  const SolveResult a =
      robust_solve(problem, penalty_cfg, cfg, default_initial_sample(problem.noise));
  const SolveResult b =
      robust_solve(problem, penalty_cfg, cfg, default_initial_sample(problem.noise));

  CHECK(a.trace.iterations.size() == b.trace.iterations.size());
  for (std::size_t i = 0; i < a.trace.iterations.size(); ++i) {
    const IterationRecord& ra = a.trace.iterations[i];
    const IterationRecord& rb = b.trace.iterations[i];
    CHECK(ra.psi_after_outer == rb.psi_after_outer);
    CHECK(ra.psi_after_inner == rb.psi_after_inner);
    CHECK(ra.theta == rb.theta);
    CHECK(ra.lambda_new == rb.lambda_new);
    CHECK(ra.new_evaluations == rb.new_evaluations);

    // Growing the scenario set can only lower the sampled minimum.
    CHECK(ra.psi_after_inner <= ra.psi_after_outer + 1e-12);
    for (Eigen::Index j = 0; j < ra.theta.size(); ++j) {
      CHECK(ra.theta[j] >= kThetaClip);
      CHECK(ra.theta[j] <= 1.0 - kThetaClip);
    }
    for (Eigen::Index j = 0; j < ra.lambda_new.size(); ++j) {
      CHECK(ra.lambda_new[j] >= problem.noise.lambda_lo - 1e-15);
      CHECK(ra.lambda_new[j] <= problem.noise.lambda_hi + 1e-15);
    }
  }
  CHECK(a.design == b.design);
  CHECK(a.min_over_sample_set == b.min_over_sample_set);
}

TEST_CASE("caching cannot change the result") {
  const Problem problem = random_problem(3, 2, 5, 68);
  const PenaltyConfig penalty_cfg{PenaltyKind::l0_squared, 5.0, 1};
  SolverConfig cfg = quick_config(10);
  cfg.max_iterations = 20;

  SolveOptions cached;
  SolveOptions uncached;
  uncached.use_cache = false;
  const SolveResult with_cache =
      robust_solve(problem, penalty_cfg, cfg, default_initial_sample(problem.noise), cached);
  const SolveResult without_cache = robust_solve(
      problem, penalty_cfg, cfg, default_initial_sample(problem.noise), uncached);

  CHECK(with_cache.design == without_cache.design);
  CHECK(with_cache.policy.theta == without_cache.policy.theta);
  CHECK(with_cache.final_lambda == without_cache.final_lambda);
  CHECK(with_cache.min_over_sample_set == without_cache.min_over_sample_set);
  CHECK(with_cache.trace.iterations.size() == without_cache.trace.iterations.size());
  for (std::size_t i = 0; i < with_cache.trace.iterations.size(); ++i) {
    CHECK(with_cache.trace.iterations[i].psi_after_outer ==
          without_cache.trace.iterations[i].psi_after_outer);
    CHECK(with_cache.trace.iterations[i].psi_after_inner ==
          without_cache.trace.iterations[i].psi_after_inner);
    CHECK(with_cache.trace.iterations[i].new_evaluations ==
          without_cache.trace.iterations[i].new_evaluations);
  }
}

TEST_CASE("solver configuration validation") {
  SolverConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.gamma1 = 0.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.outer_steps_per_call = -1;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.tol = 0.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.n_ens = 0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.m_final = 0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

  const Problem problem = random_problem(2, 1, 3, 69);
  SampleSet empty(1e-10);
  CHECK_THROWS_AS(
      robust_solve(problem, {PenaltyKind::none, 0.0, 1}, SolverConfig{}, empty),
      std::invalid_argument);
}
