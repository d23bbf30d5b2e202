#pragma once

#include <Eigen/Dense>
#include <array>
#include <utility>
#include <vector>

namespace roed {

// Linear parameter-to-observable map.  Rows are ordered time-major:
// all sensors at the first observation time, then all sensors at the
// second, and so on.  The mass matrix is the identity, so the adjoint
// is the plain transpose.
struct LinearForwardModel {
  Eigen::MatrixXd F;  // (n_sensors * n_obs_times) x n_param
  int n_sensors = 0;
  int n_obs_times = 0;

  int n_obs() const { return static_cast<int>(F.rows()); }
  int n_param() const { return static_cast<int>(F.cols()); }

  Eigen::VectorXd apply_forward(const Eigen::VectorXd& u) const { return F * u; }
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& v) const { return F.transpose() * v; }
};

// Validates n_obs = n_sensors * n_obs_times.
LinearForwardModel make_forward_model(Eigen::MatrixXd F, int n_sensors, int n_obs_times);

struct GaussianPrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;     // symmetric positive definite
  double precision_trace = 0.0;  // cached trace of precision
};

// Checks symmetry and positive definiteness (Cholesky) at construction.
GaussianPrior make_gaussian_prior(Eigen::VectorXd mean, Eigen::MatrixXd precision);

// Per-sensor noise standard deviations live in [lambda_lo, lambda_hi];
// the covariance replicates across observation times.
struct NoiseModel {
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  int n_sensors = 0;
  int n_obs_times = 0;

  int n_obs() const { return n_sensors * n_obs_times; }
  bool admissible(const Eigen::VectorXd& lambda) const;
  Eigen::VectorXd box_lower() const;
  Eigen::VectorXd box_upper() const;
  Eigen::VectorXd box_midpoint() const;
  Eigen::VectorXd clamp_to_box(const Eigen::VectorXd& lambda) const;
};

NoiseModel make_noise_model(double lambda_lo, double lambda_hi, int n_sensors,
                            int n_obs_times);

struct GridPoint {
  int ix = 0;
  int iy = 0;
};

// Finite-difference advection-diffusion surrogate on the unit square:
// implicit Euler in time, 5-point diffusion with no-flux boundaries,
// first-order upwind advection with a constant velocity.  Column j of
// the result is the spatiotemporal sensor observation of the j-th unit
// initial condition.  Observation times are t1 + s*dt, s = 0 .. n_obs_times-1.
LinearForwardModel build_reference_model(int grid_n, int n_obs_times, double kappa,
                                         const std::array<double, 2>& velocity,
                                         const std::vector<GridPoint>& sensors,
                                         double dt, double t1);

// Prior precision (1/scale) * (delta I + L)^2 with L the 5-point grid
// graph Laplacian; delta > 0 shifts the singular Neumann Laplacian.
GaussianPrior build_laplacian_prior(int grid_n, double delta, double scale);

// I_{n_obs_times} (x) diag(lambda^2); block diagonal, SPD for admissible lambda.
Eigen::MatrixXd noise_covariance(const NoiseModel& nm, const Eigen::VectorXd& lambda);

// d(noise covariance)/d lambda_sensor = I (x) (2 lambda_i e_i e_i^T); sensor is 0-based.
Eigen::MatrixXd noise_covariance_derivative(const NoiseModel& nm,
                                            const Eigen::VectorXd& lambda, int sensor);

// Gaussian posterior (mean, covariance) for the full (unmasked)
// observation operator.  End-to-end sanity only; the optimizer never
// calls this.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> posterior_params(
    const LinearForwardModel& model, const GaussianPrior& prior,
    const Eigen::MatrixXd& noise_cov, const Eigen::VectorXd& data);

// Immutable bundle consumed by the objective, optimizer, and oracle.
struct Problem {
  LinearForwardModel model;
  GaussianPrior prior;
  NoiseModel noise;
};

}  // namespace roed
