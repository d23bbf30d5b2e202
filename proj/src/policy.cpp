#include "roed/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "roed/rng.hpp"

namespace roed {

namespace {

// Ordered pairwise reduction; result does not depend on chunking used
// by any parallel caller.
Eigen::VectorXd pairwise_sum(std::vector<Eigen::VectorXd>& terms, std::size_t lo,
                             std::size_t hi) {
  if (hi - lo == 1) return terms[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(terms, lo, mid) + pairwise_sum(terms, mid, hi);
}

}  // namespace

BernoulliPolicy BernoulliPolicy::uniform(int n) {
  BernoulliPolicy policy;
  policy.theta = Eigen::VectorXd::Constant(n, 0.5);
  return policy;
}

void BernoulliPolicy::clip() {
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    theta[i] = std::clamp(theta[i], kThetaClip, 1.0 - kThetaClip);
}

bool BernoulliPolicy::degenerate() const {
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (theta[i] > kThetaClip && theta[i] < 1.0 - kThetaClip) return false;
  }
  return theta.size() > 0;
}

DesignSample sample(const BernoulliPolicy& policy, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample size must be at least 1");
  const int n_sensors = policy.size();
  Rng rng(seed);
  DesignSample out;
  out.seed = seed;
  out.designs.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    DesignVector d = DesignVector::zeros(n_sensors);
    for (int i = 0; i < n_sensors; ++i) d.set(i, rng.bernoulli(policy.theta[i]));
    out.designs.push_back(std::move(d));
  }
  return out;
}

Eigen::VectorXd log_prob_gradient(const DesignVector& design, const BernoulliPolicy& policy) {
  if (design.size() != policy.size())
    throw std::invalid_argument("design and policy dimensions differ");
  Eigen::VectorXd grad(policy.size());
  for (int i = 0; i < policy.size(); ++i) {
    const double z = design.active(i) ? 1.0 : 0.0;
    grad[i] = z / policy.theta[i] + (z - 1.0) / (1.0 - policy.theta[i]);
  }
  return grad;
}

double exact_expectation(const BernoulliPolicy& policy,
                         const std::function<double(const DesignVector&)>& f) {
  const int n = policy.size();
  if (n > 20) throw std::invalid_argument("exact expectation is limited to 20 sensors");
  double total = 0.0;
  const std::uint64_t count = 1ull << n;
  for (std::uint64_t k = 0; k < count; ++k) {
    DesignVector d = DesignVector::from_index(k + 1, n);
    double mass = 1.0;
    for (int i = 0; i < n; ++i)
      mass *= d.active(i) ? policy.theta[i] : 1.0 - policy.theta[i];
    total += mass * f(d);
  }
  return total;
}

std::uint64_t design_index(const DesignVector& design) {
  if (design.size() > 63) throw std::invalid_argument("design index overflows past 63 sensors");
  std::uint64_t k = 0;
  for (int i = 0; i < design.size(); ++i) {
    if (design.active(i)) k |= 1ull << i;
  }
  return k + 1;
}

double optimal_baseline(const DesignSample& samples, const std::vector<double>& values,
                        const BernoulliPolicy& policy, int n_ens, int n_b) {
  if (n_ens < 1 || n_b < 1) throw std::invalid_argument("batch sizes must be positive");
  const std::size_t expected = static_cast<std::size_t>(n_ens) * static_cast<std::size_t>(n_b);
  if (samples.designs.size() != expected || values.size() != expected)
    throw std::invalid_argument("baseline expects n_ens * n_b samples and values");

  double numerator = 0.0;
  for (int e = 0; e < n_b; ++e) {
    Eigen::VectorXd weighted = Eigen::VectorXd::Zero(policy.size());
    Eigen::VectorXd plain = Eigen::VectorXd::Zero(policy.size());
    for (int j = 0; j < n_ens; ++j) {
      const std::size_t k = static_cast<std::size_t>(e) * n_ens + j;
      const Eigen::VectorXd score = log_prob_gradient(samples.designs[k], policy);
      weighted += values[k] * score;
      plain += score;
    }
    numerator += weighted.dot(plain);
  }

  double denom_sum = 0.0;
  for (int i = 0; i < policy.size(); ++i) {
    const double t = policy.theta[i];
    denom_sum += 1.0 / (t - t * t);
  }
  const double denominator =
      static_cast<double>(n_ens) * static_cast<double>(n_b) * denom_sum;
  return numerator / denominator;
}

Eigen::VectorXd stochastic_gradient(const BernoulliPolicy& policy, const DesignSample& samples,
                                    const std::function<double(const DesignVector&)>& value_fn,
                                    double baseline) {
  if (samples.designs.empty()) throw std::invalid_argument("empty design sample");
  std::vector<Eigen::VectorXd> terms;
  terms.reserve(samples.designs.size());
  for (const DesignVector& d : samples.designs)
    terms.push_back((value_fn(d) - baseline) * log_prob_gradient(d, policy));
  return pairwise_sum(terms, 0, terms.size()) / static_cast<double>(terms.size());
}

}  // namespace roed
