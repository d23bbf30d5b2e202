#include "roed/objective.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace roed {

namespace {

void check_inputs(const DesignVector& design, const Eigen::VectorXd& lambda,
                  const Problem& problem) {
  if (design.size() != problem.noise.n_sensors)
    throw std::invalid_argument("design length must equal the sensor count");
  if (lambda.size() != problem.noise.n_sensors)
    throw std::invalid_argument("lambda must have one entry per sensor");
  if (!problem.noise.admissible(lambda))
    throw std::invalid_argument("lambda is outside the admissible box");
}

}  // namespace

double fim_trace(const DesignVector& design, const Eigen::VectorXd& lambda,
                 const Problem& problem) {
  check_inputs(design, lambda, problem);
  const int n_sensors = problem.noise.n_sensors;
  const int n_obs_times = problem.noise.n_obs_times;

  // The noise covariance is diagonal with per-sensor variance lambda_i^2
  // replicated over time blocks, so the masked precision acts row-wise:
  // Tr(F^T W F) = sum over active rows of |row|^2 / lambda^2.
  double trace = 0.0;
  std::vector<double> row_terms;
  row_terms.reserve(static_cast<std::size_t>(design.active_count()) * n_obs_times);
  for (int t = 0; t < n_obs_times; ++t) {
    for (int i = 0; i < n_sensors; ++i) {
      if (!design.active(i)) continue;
      const Eigen::Index r = static_cast<Eigen::Index>(t) * n_sensors + i;
      row_terms.push_back(problem.model.F.row(r).squaredNorm() / (lambda[i] * lambda[i]));
    }
  }
  for (double v : row_terms) trace += v;
  return trace + problem.prior.precision_trace;
}

double penalty(const DesignVector& design, const PenaltyConfig& cfg) {
  const int active = design.active_count();
  switch (cfg.kind) {
    case PenaltyKind::none:
      return 0.0;
    case PenaltyKind::l0_squared:
      return static_cast<double>(active) * static_cast<double>(active);
    case PenaltyKind::budget:
      return std::abs(static_cast<double>(active - cfg.budget));
  }
  return 0.0;
}

ObjectiveValue objective(const DesignVector& design, const Eigen::VectorXd& lambda,
                         const Problem& problem, const PenaltyConfig& cfg) {
  ObjectiveValue value;
  value.utility = fim_trace(design, lambda, problem);
  value.penalty = penalty(design, cfg);
  value.total = value.utility - cfg.alpha * value.penalty;
  return value;
}

Eigen::VectorXd grad_lambda(const DesignVector& design, const Eigen::VectorXd& lambda,
                            const Problem& problem) {
  check_inputs(design, lambda, problem);
  const int n_sensors = problem.noise.n_sensors;
  const int n_obs_times = problem.noise.n_obs_times;

  // d/d lambda_i of sum_t |row_{t,i}|^2 / lambda_i^2 for active sensors;
  // inactive components are exactly zero.
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_sensors);
  for (int i = 0; i < n_sensors; ++i) {
    if (!design.active(i)) continue;
    double rows = 0.0;
    for (int t = 0; t < n_obs_times; ++t) {
      const Eigen::Index r = static_cast<Eigen::Index>(t) * n_sensors + i;
      rows += problem.model.F.row(r).squaredNorm();
    }
    grad[i] = -2.0 * rows / (lambda[i] * lambda[i] * lambda[i]);
  }
  return grad;
}

}  // namespace roed
