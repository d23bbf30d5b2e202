#pragma once

// Shared helpers for the test suites.  Oracles here are deliberately
// written as straight-line reference computations, independent of the
// production code paths they check.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <limits>
#include <vector>

#include "roed/config.hpp"
#include "roed/model.hpp"
#include "roed/rng.hpp"
#include "roed/weighting.hpp"

namespace test_support {

inline Eigen::MatrixXd svd_pinv(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff =
      sv.size() > 0 ? sv.maxCoeff() * m.rows() * std::numeric_limits<double>::epsilon() : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) inv[i] = 1.0 / sv[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, roed::Rng& rng, double lo = -1.0,
                                     double hi = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  return m;
}

inline Eigen::MatrixXd random_spd(int n, roed::Rng& rng, double shift = 0.5) {
  const Eigen::MatrixXd r = random_matrix(n, n, rng);
  return r * r.transpose() + shift * n * Eigen::MatrixXd::Identity(n, n);
}

inline roed::DesignVector random_design(int n, roed::Rng& rng, double p = 0.5) {
  roed::DesignVector d = roed::DesignVector::zeros(n);
  for (int i = 0; i < n; ++i) d.set(i, rng.uniform() < p);
  return d;
}

inline Eigen::VectorXd random_lambda(const roed::NoiseModel& nm, roed::Rng& rng,
                                     double margin = 0.0) {
  Eigen::VectorXd lam(nm.n_sensors);
  for (int i = 0; i < nm.n_sensors; ++i)
    lam[i] = rng.uniform(nm.lambda_lo + margin, nm.lambda_hi - margin);
  return lam;
}

// Small synthetic problem with a random forward map and a random SPD
// prior precision; deterministic in the seed.
inline roed::Problem random_problem(int n_sensors, int n_obs_times, int n_param,
                                    std::uint64_t seed, double lambda_lo = 0.02,
                                    double lambda_hi = 0.04) {
  roed::Rng rng(seed);
  roed::Problem problem;
  problem.model = roed::make_forward_model(
      random_matrix(n_sensors * n_obs_times, n_param, rng), n_sensors, n_obs_times);
  problem.prior =
      roed::make_gaussian_prior(Eigen::VectorXd::Zero(n_param), random_spd(n_param, rng));
  problem.noise = roed::make_noise_model(lambda_lo, lambda_hi, n_sensors, n_obs_times);
  return problem;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace test_support
