#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "roed/weighting.hpp"

namespace roed {

// Clip width for activation probabilities.  The log-probability
// gradient divides by theta_i and 1 - theta_i, so the open interval
// (0, 1) is enforced by clipping to [kThetaClip, 1 - kThetaClip].
inline constexpr double kThetaClip = 1e-3;

// Multivariate Bernoulli design policy.
struct BernoulliPolicy {
  Eigen::VectorXd theta;

  static BernoulliPolicy uniform(int n);  // all entries 0.5

  int size() const { return static_cast<int>(theta.size()); }
  void clip();
  // Degenerate: every entry sits at a clip boundary (point mass up to clipping).
  bool degenerate() const;
};

struct DesignSample {
  std::vector<DesignVector> designs;
  std::uint64_t seed = 0;  // sub-seed used for the draw
};

// n independent draws, entry i ~ Bernoulli(theta_i).  Deterministic in seed.
DesignSample sample(const BernoulliPolicy& policy, int n, std::uint64_t seed);

// Component i: zeta_i / theta_i + (zeta_i - 1) / (1 - theta_i).
Eigen::VectorXd log_prob_gradient(const DesignVector& design, const BernoulliPolicy& policy);

// Sum of f over all 2^n designs weighted by their Bernoulli mass.
// Guarded to n <= 20.
double exact_expectation(const BernoulliPolicy& policy,
                         const std::function<double(const DesignVector&)>& f);

// 1-based enumeration index k = 1 + sum zeta_i 2^i (i from 0).
std::uint64_t design_index(const DesignVector& design);

// Variance-minimizing baseline estimate from n_b batches of n_ens
// samples; values[k] is the objective of samples.designs[k].
double optimal_baseline(const DesignSample& samples, const std::vector<double>& values,
                        const BernoulliPolicy& policy, int n_ens, int n_b);

// Score-function estimate of the policy gradient:
// mean over samples of (value - baseline) * grad log-probability.
// The reduction is an ordered pairwise sum.
Eigen::VectorXd stochastic_gradient(const BernoulliPolicy& policy, const DesignSample& samples,
                                    const std::function<double(const DesignVector&)>& value_fn,
                                    double baseline);

}  // namespace roed
