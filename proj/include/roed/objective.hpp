#pragma once

#include <Eigen/Dense>

#include "roed/model.hpp"
#include "roed/weighting.hpp"

namespace roed {

enum class PenaltyKind { none, l0_squared, budget };

struct PenaltyConfig {
  PenaltyKind kind = PenaltyKind::none;
  double alpha = 0.0;  // penalty weight; >= 0
  int budget = 1;      // target sensor count, kind == budget only
};

struct ObjectiveValue {
  double utility = 0.0;  // trace of the Fisher information matrix
  double penalty = 0.0;
  double total = 0.0;    // utility - alpha * penalty
};

// Tr(F^T W F) + Tr(prior precision), with W the design-weighted
// precision of the noise covariance at lambda.
double fim_trace(const DesignVector& design, const Eigen::VectorXd& lambda,
                 const Problem& problem);

double penalty(const DesignVector& design, const PenaltyConfig& cfg);

ObjectiveValue objective(const DesignVector& design, const Eigen::VectorXd& lambda,
                         const Problem& problem, const PenaltyConfig& cfg);

// Gradient of fim_trace with respect to lambda.  Components of inactive
// sensors are exactly zero; the penalty does not depend on lambda.
Eigen::VectorXd grad_lambda(const DesignVector& design, const Eigen::VectorXd& lambda,
                            const Problem& problem);

}  // namespace roed
