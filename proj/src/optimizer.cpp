#include "roed/optimizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "roed/rng.hpp"

namespace roed {

bool SampleSet::add(const Eigen::VectorXd& lambda) {
  if (contains(lambda)) return false;
  members_.push_back(lambda);
  return true;
}

bool SampleSet::contains(const Eigen::VectorXd& lambda) const {
  for (const Eigen::VectorXd& m : members_) {
    if (m.size() == lambda.size() && (m - lambda).lpNorm<Eigen::Infinity>() <= dedup_tol_)
      return true;
  }
  return false;
}

Eigen::VectorXd SampleSet::mean() const {
  if (members_.empty()) throw std::runtime_error("sample set is empty");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(members_.front().size());
  for (const Eigen::VectorXd& m : members_) sum += m;
  return sum / static_cast<double>(members_.size());
}

SampleSet default_initial_sample(const NoiseModel& noise) {
  SampleSet set;
  set.add(noise.box_lower());
  set.add(noise.box_upper());
  set.add(noise.box_midpoint());
  return set;
}

void EvaluationCache::set_phase(Phase phase) {
  std::lock_guard<std::mutex> lock(mu_);
  phase_ = phase;
}

std::string EvaluationCache::key(const DesignVector& design, const Eigen::VectorXd& lambda) {
  // Concatenation of the design bits and the lambda entries quantized
  // to 12 decimal digits.
  std::string k;
  k.reserve(static_cast<std::size_t>(design.size()) + 20 * static_cast<std::size_t>(lambda.size()) + 1);
  for (int i = 0; i < design.size(); ++i) k.push_back(design.active(i) ? '1' : '0');
  k.push_back('|');
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    k += std::to_string(static_cast<long long>(std::llround(lambda[i] * 1e12)));
    k.push_back(';');
  }
  return k;
}

ObjectiveValue EvaluationCache::get_or_eval(const DesignVector& design,
                                            const Eigen::VectorXd& lambda,
                                            const std::function<ObjectiveValue()>& evaluator) {
  std::string k = key(design, lambda);
  {
    std::lock_guard<std::mutex> lock(mu_);
    ++totals_[static_cast<int>(phase_)];
    auto it = table_.find(k);
    if (it != table_.end() && enabled_) return it->second;
  }
  const ObjectiveValue value = evaluator();
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, inserted] = table_.try_emplace(std::move(k), value);
    if (inserted) ++uniques_[static_cast<int>(phase_)];
    if (enabled_) return it->second;  // first writer wins
  }
  return value;
}

std::int64_t EvaluationCache::total_requests() const {
  std::lock_guard<std::mutex> lock(mu_);
  return totals_[0] + totals_[1] + totals_[2];
}

std::int64_t EvaluationCache::unique_evaluations() const {
  std::lock_guard<std::mutex> lock(mu_);
  return uniques_[0] + uniques_[1] + uniques_[2];
}

std::int64_t EvaluationCache::total_requests(Phase phase) const {
  std::lock_guard<std::mutex> lock(mu_);
  return totals_[static_cast<int>(phase)];
}

std::int64_t EvaluationCache::unique_evaluations(Phase phase) const {
  std::lock_guard<std::mutex> lock(mu_);
  return uniques_[static_cast<int>(phase)];
}

double EvaluationCache::redundancy_ratio() const {
  const std::int64_t total = total_requests();
  if (total == 0) return 0.0;
  return 1.0 - static_cast<double>(unique_evaluations()) / static_cast<double>(total);
}

double EvaluationCache::redundancy_ratio(Phase phase) const {
  const std::int64_t total = total_requests(phase);
  if (total == 0) return 0.0;
  return 1.0 - static_cast<double>(unique_evaluations(phase)) / static_cast<double>(total);
}

ObjectiveValue cached_objective(EvaluationCache& cache, const DesignVector& design,
                                const Eigen::VectorXd& lambda,
                                const std::function<ObjectiveValue()>& evaluator) {
  return cache.get_or_eval(design, lambda, evaluator);
}

void validate(const SolverConfig& cfg) {
  if (!(cfg.gamma1 > 0.0)) throw std::invalid_argument("gamma1 must be positive");
  if (cfg.outer_steps_per_call < 0)
    throw std::invalid_argument("outer_steps_per_call must be nonnegative");
  if (cfg.max_iterations < 0) throw std::invalid_argument("max_iterations must be nonnegative");
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (!(cfg.pgtol > 0.0)) throw std::invalid_argument("pgtol must be positive");
  if (cfg.n_ens < 1) throw std::invalid_argument("n_ens must be at least 1");
  if (cfg.n_b < 1) throw std::invalid_argument("n_b must be at least 1");
  if (cfg.m_final < 1) throw std::invalid_argument("m_final must be at least 1");
}

namespace {

// Ascent projected gradient: entries pushing outside the clipped
// probability box do not count.
double max_abs_projected_ascent(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const bool blocked_high = theta[i] >= 1.0 - kThetaClip && grad[i] > 0.0;
    const bool blocked_low = theta[i] <= kThetaClip && grad[i] < 0.0;
    if (!blocked_high && !blocked_low) worst = std::max(worst, std::abs(grad[i]));
  }
  return worst;
}

double mean_in_order(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

StocOptReport stoc_param_opt(const BernoulliPolicy& policy0, const SampleSet& sample_set,
                             const Problem& problem, const PenaltyConfig& penalty_cfg,
                             const SolverConfig& cfg, EvaluationCache& cache,
                             std::uint64_t iteration_tag) {
  if (sample_set.empty()) throw std::invalid_argument("sample set must be nonempty");
  StocOptReport report;
  report.policy = policy0;
  report.policy.clip();
  const int total_samples = cfg.n_ens * cfg.n_b;
  double prev_psi = std::numeric_limits<double>::quiet_NaN();
  report.psi = std::numeric_limits<double>::quiet_NaN();

  auto evaluate = [&](const DesignVector& d, const Eigen::VectorXd& lam) {
    return cache.get_or_eval(d, lam, [&] { return objective(d, lam, problem, penalty_cfg); });
  };

  for (int step = 0; step < cfg.outer_steps_per_call; ++step) {
    const std::uint64_t seed = derive_seed(cfg.seed, kStreamOuterSample, iteration_tag,
                                           static_cast<std::uint64_t>(step));
    DesignSample samples = sample(report.policy, total_samples, seed);

    std::vector<double> values(samples.designs.size());
    std::unordered_map<std::uint64_t, double> by_index;
    for (std::size_t k = 0; k < samples.designs.size(); ++k) {
      double best = std::numeric_limits<double>::infinity();
      for (const Eigen::VectorXd& lam : sample_set.members())
        best = std::min(best, evaluate(samples.designs[k], lam).total);
      values[k] = best;
      by_index[design_index(samples.designs[k])] = best;
    }

    const double baseline =
        optimal_baseline(samples, values, report.policy, cfg.n_ens, cfg.n_b);
    const Eigen::VectorXd grad = stochastic_gradient(
        report.policy, samples,
        [&](const DesignVector& d) { return by_index.at(design_index(d)); }, baseline);

    report.policy.theta += cfg.gamma1 * grad;
    report.policy.clip();
    report.psi = mean_in_order(values);
    report.max_proj_grad = max_abs_projected_ascent(report.policy.theta, grad);
    report.steps = step + 1;
    report.last_sample = std::move(samples);
    report.last_values = std::move(values);

    if (report.max_proj_grad <= cfg.pgtol) {
      report.stalled = true;
      break;
    }
    if (step > 0 && std::abs(report.psi - prev_psi) < cfg.tol) {
      report.stalled = true;
      break;
    }
    prev_psi = report.psi;
  }
  return report;
}

NoiseOptResult noise_opt(const BernoulliPolicy& policy, const SampleSet& sample_set,
                         const Problem& problem, const PenaltyConfig& penalty_cfg,
                         const SolverConfig& cfg, EvaluationCache& cache,
                         std::uint64_t iteration_tag) {
  if (sample_set.empty()) throw std::invalid_argument("sample set must be nonempty");
  const double lo = problem.noise.lambda_lo;
  const double hi = problem.noise.lambda_hi;
  const std::uint64_t seed = derive_seed(cfg.seed, kStreamNoiseSample, iteration_tag, 0);
  const DesignSample samples = sample(policy, cfg.n_ens, seed);

  auto mean_objective = [&](const Eigen::VectorXd& lam) {
    std::vector<double> vals;
    vals.reserve(samples.designs.size());
    for (const DesignVector& d : samples.designs)
      vals.push_back(
          cache.get_or_eval(d, lam, [&] { return objective(d, lam, problem, penalty_cfg); })
              .total);
    return mean_in_order(vals);
  };
  auto mean_gradient = [&](const Eigen::VectorXd& lam) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(problem.noise.n_sensors);
    for (const DesignVector& d : samples.designs) sum += grad_lambda(d, lam, problem);
    return Eigen::VectorXd(sum / static_cast<double>(samples.designs.size()));
  };

  NoiseOptResult result;
  Eigen::VectorXd lambda = problem.noise.clamp_to_box(sample_set.mean());
  double value = mean_objective(lambda);

  constexpr int kMaxInnerIterations = 200;
  constexpr double kArmijo = 1e-4;
  for (int it = 0; it < kMaxInnerIterations; ++it) {
    const Eigen::VectorXd grad = mean_gradient(lambda);
    double max_pg = 0.0;
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      const bool blocked_low = lambda[i] <= lo && grad[i] > 0.0;
      const bool blocked_high = lambda[i] >= hi && grad[i] < 0.0;
      if (!blocked_low && !blocked_high) max_pg = std::max(max_pg, std::abs(grad[i]));
    }
    if (max_pg <= cfg.pgtol) break;

    // Backtracking along the projection arc.
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial;
    double trial_value = 0.0;
    while (t > 1e-18) {
      trial = problem.noise.clamp_to_box(lambda - t * grad);
      if ((trial - lambda).lpNorm<Eigen::Infinity>() == 0.0) break;
      trial_value = mean_objective(trial);
      if (trial_value <= value + kArmijo * grad.dot(trial - lambda)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      result.line_search_warning = true;
      break;
    }
    const double decrease = value - trial_value;
    lambda = trial;
    value = trial_value;
    result.iterations = it + 1;
    if (decrease < cfg.tol) break;
  }
  result.lambda = lambda;
  return result;
}

SolveResult robust_solve(const Problem& problem, const PenaltyConfig& penalty_cfg,
                         const SolverConfig& cfg, SampleSet initial_sample,
                         const SolveOptions& options) {
  validate(cfg);
  if (initial_sample.empty())
    throw std::invalid_argument("initial sample set must be nonempty");
  for (const Eigen::VectorXd& m : initial_sample.members()) {
    if (!problem.noise.admissible(m))
      throw std::invalid_argument("initial sample set member outside the admissible box");
  }

  EvaluationCache cache(options.use_cache);
  SolveResult out;
  out.sample_set = std::move(initial_sample);
  BernoulliPolicy policy = BernoulliPolicy::uniform(problem.noise.n_sensors);
  Eigen::VectorXd last_lambda = out.sample_set.members().back();

  bool converged = false;
  std::string reason = "iteration_cap";
  int perturbations = 0;

  for (int l = 1; l <= cfg.max_iterations; ++l) {
    const std::int64_t unique_before = cache.unique_evaluations();

    cache.set_phase(EvaluationCache::Phase::outer);
    StocOptReport rep = stoc_param_opt(policy, out.sample_set, problem, penalty_cfg, cfg,
                                       cache, static_cast<std::uint64_t>(l));
    policy = rep.policy;

    cache.set_phase(EvaluationCache::Phase::inner);
    NoiseOptResult inner = noise_opt(policy, out.sample_set, problem, penalty_cfg, cfg,
                                     cache, static_cast<std::uint64_t>(l));
    last_lambda = inner.lambda;
    const bool added = out.sample_set.add(inner.lambda);

    // Second objective evaluation of the iteration: same ensemble,
    // minimum extended over the grown sample set.
    double psi_inner = rep.psi;
    if (added && !rep.last_sample.designs.empty()) {
      std::vector<double> updated(rep.last_values.size());
      for (std::size_t k = 0; k < rep.last_sample.designs.size(); ++k) {
        const DesignVector& d = rep.last_sample.designs[k];
        const double at_new =
            cache
                .get_or_eval(d, inner.lambda,
                             [&] { return objective(d, inner.lambda, problem, penalty_cfg); })
                .total;
        updated[k] = std::min(rep.last_values[k], at_new);
      }
      psi_inner = mean_in_order(updated);
    }

    IterationRecord rec;
    rec.iteration = l;
    rec.psi_after_outer = rep.psi;
    rec.psi_after_inner = psi_inner;
    rec.lambda_new = inner.lambda;
    rec.lambda_added = added;
    rec.new_evaluations = cache.unique_evaluations() - unique_before;
    rec.redundancy_ratio = cache.redundancy_ratio();
    rec.theta = policy.theta;

    const bool outer_stalled = rep.stalled || policy.degenerate();
    bool stop = !added && outer_stalled;
    if (stop && !policy.degenerate() && perturbations < 3) {
      // Escape a nondegenerate stall: random +-0.1 kick, then continue.
      Rng rng(derive_seed(cfg.seed, kStreamPerturbation, static_cast<std::uint64_t>(l)));
      for (Eigen::Index i = 0; i < policy.theta.size(); ++i)
        policy.theta[i] += 0.1 * rng.sign();
      policy.clip();
      ++perturbations;
      rec.perturbed = true;
      stop = false;
    }

    out.trace.iterations.push_back(rec);
    if (options.on_iteration) options.on_iteration(rec);
    if (stop) {
      converged = true;
      reason = policy.degenerate() ? "degenerate_policy_and_sample_set_converged"
                                   : "stalled_after_perturbation_budget";
      break;
    }
  }

  out.trace.converged = converged;
  out.trace.termination = reason;
  out.trace.perturbations = perturbations;
  out.iterations = static_cast<int>(out.trace.iterations.size());
  out.policy = policy;
  out.final_lambda = last_lambda;

  // Rank m_final designs sampled from the final policy at the last
  // lambda; ties go to the smallest design index.
  cache.set_phase(EvaluationCache::Phase::final_selection);
  const DesignSample finals =
      sample(policy, cfg.m_final, derive_seed(cfg.seed, kStreamFinalSample, 0));
  out.final_candidates = finals.designs;
  bool have_best = false;
  double best_total = 0.0;
  std::uint64_t best_index = 0;
  for (const DesignVector& d : finals.designs) {
    const double total =
        cache
            .get_or_eval(d, last_lambda,
                         [&] { return objective(d, last_lambda, problem, penalty_cfg); })
            .total;
    const std::uint64_t idx = design_index(d);
    if (!have_best || total > best_total ||
        (total == best_total && idx < best_index)) {
      have_best = true;
      best_total = total;
      best_index = idx;
      out.design = d;
    }
  }
  out.objective_value = objective(out.design, last_lambda, problem, penalty_cfg);

  double worst = std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& lam : out.sample_set.members()) {
    const double v =
        cache
            .get_or_eval(out.design, lam,
                         [&] { return objective(out.design, lam, problem, penalty_cfg); })
            .total;
    worst = std::min(worst, v);
  }
  out.min_over_sample_set = worst;

  out.cache_overall = {cache.total_requests(), cache.unique_evaluations()};
  out.cache_outer = {cache.total_requests(EvaluationCache::Phase::outer),
                     cache.unique_evaluations(EvaluationCache::Phase::outer)};
  return out;
}

}  // namespace roed
