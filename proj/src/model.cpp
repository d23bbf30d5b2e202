#include "roed/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace roed {

namespace {

int node_id(int ix, int iy, int grid_n) { return iy * grid_n + ix; }

}  // namespace

LinearForwardModel make_forward_model(Eigen::MatrixXd F, int n_sensors, int n_obs_times) {
  if (n_sensors < 1 || n_obs_times < 1)
    throw std::invalid_argument("forward model needs at least one sensor and one observation time");
  if (F.rows() != static_cast<Eigen::Index>(n_sensors) * n_obs_times)
    throw std::invalid_argument("forward model row count must equal n_sensors * n_obs_times");
  LinearForwardModel model;
  model.F = std::move(F);
  model.n_sensors = n_sensors;
  model.n_obs_times = n_obs_times;
  return model;
}

GaussianPrior make_gaussian_prior(Eigen::VectorXd mean, Eigen::MatrixXd precision) {
  if (precision.rows() != precision.cols())
    throw std::invalid_argument("prior precision must be square");
  if (mean.size() != precision.rows())
    throw std::invalid_argument("prior mean length must match the precision");
  const double scale = std::max(1.0, precision.cwiseAbs().maxCoeff());
  if ((precision - precision.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("prior precision must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("prior precision must be positive definite");
  GaussianPrior prior;
  prior.mean = std::move(mean);
  prior.precision = std::move(precision);
  prior.precision_trace = prior.precision.trace();
  return prior;
}

bool NoiseModel::admissible(const Eigen::VectorXd& lambda) const {
  if (lambda.size() != n_sensors) return false;
  const double slack = 1e-12 * (lambda_hi - lambda_lo);
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (!(lambda[i] >= lambda_lo - slack && lambda[i] <= lambda_hi + slack)) return false;
  }
  return true;
}

Eigen::VectorXd NoiseModel::box_lower() const {
  return Eigen::VectorXd::Constant(n_sensors, lambda_lo);
}

Eigen::VectorXd NoiseModel::box_upper() const {
  return Eigen::VectorXd::Constant(n_sensors, lambda_hi);
}

Eigen::VectorXd NoiseModel::box_midpoint() const {
  return Eigen::VectorXd::Constant(n_sensors, 0.5 * (lambda_lo + lambda_hi));
}

Eigen::VectorXd NoiseModel::clamp_to_box(const Eigen::VectorXd& lambda) const {
  return lambda.cwiseMax(lambda_lo).cwiseMin(lambda_hi);
}

NoiseModel make_noise_model(double lambda_lo, double lambda_hi, int n_sensors,
                            int n_obs_times) {
  if (!(lambda_lo > 0.0))
    throw std::invalid_argument("lambda_lo must be positive for a positive definite covariance");
  if (!(lambda_lo < lambda_hi))
    throw std::invalid_argument("noise box requires lambda_lo < lambda_hi");
  if (n_sensors < 1 || n_obs_times < 1)
    throw std::invalid_argument("noise model needs at least one sensor and one observation time");
  return NoiseModel{lambda_lo, lambda_hi, n_sensors, n_obs_times};
}

LinearForwardModel build_reference_model(int grid_n, int n_obs_times, double kappa,
                                         const std::array<double, 2>& velocity,
                                         const std::vector<GridPoint>& sensors,
                                         double dt, double t1) {
  if (grid_n < 4) throw std::invalid_argument("grid_n must be at least 4");
  if (n_obs_times < 1) throw std::invalid_argument("n_obs_times must be at least 1");
  // kappa = 0 (frozen diffusion) is allowed; only negative values are rejected.
  if (kappa < 0.0) throw std::invalid_argument("kappa must be nonnegative");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(t1 > 0.0)) throw std::invalid_argument("t1 must be positive");
  if (sensors.empty()) throw std::invalid_argument("at least one sensor is required");

  const long steps_to_t1 = std::lround(t1 / dt);
  if (steps_to_t1 < 1 || std::abs(static_cast<double>(steps_to_t1) * dt - t1) >
                             1e-9 * std::max(1.0, t1))
    throw std::invalid_argument("t1 must be a positive integer multiple of dt");

  std::set<std::pair<int, int>> seen;
  for (const auto& s : sensors) {
    if (s.ix < 1 || s.ix > grid_n - 2 || s.iy < 1 || s.iy > grid_n - 2)
      throw std::invalid_argument("sensor (" + std::to_string(s.ix) + "," +
                                  std::to_string(s.iy) + ") is not an interior grid point");
    if (!seen.insert({s.ix, s.iy}).second)
      throw std::invalid_argument("sensor coordinates must be distinct");
  }

  const int n = grid_n;
  const int n_nodes = n * n;
  const double h = 1.0 / (n - 1);
  const double diff = dt * kappa / (h * h);
  const double vx = velocity[0];
  const double vy = velocity[1];

  // B = I + dt (kappa L + A): L the 5-point negative Laplacian with
  // mirror (no-flux) boundaries, A first-order upwind advection.  A
  // missing upwind neighbor mirrors the center value, so B 1 = 1 and
  // the solve obeys the discrete maximum principle.
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n_nodes, n_nodes);
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const int c = node_id(ix, iy, n);
      const int west = ix > 0 ? node_id(ix - 1, iy, n) : -1;
      const int east = ix < n - 1 ? node_id(ix + 1, iy, n) : -1;
      const int south = iy > 0 ? node_id(ix, iy - 1, n) : -1;
      const int north = iy < n - 1 ? node_id(ix, iy + 1, n) : -1;

      for (int nb : {west, east, south, north}) {
        if (nb >= 0) {
          B(c, c) += diff;
          B(c, nb) -= diff;
        }
      }
      if (vx > 0.0 && west >= 0) {
        B(c, c) += dt * vx / h;
        B(c, west) -= dt * vx / h;
      } else if (vx < 0.0 && east >= 0) {
        B(c, c) += dt * (-vx) / h;
        B(c, east) -= dt * (-vx) / h;
      }
      if (vy > 0.0 && south >= 0) {
        B(c, c) += dt * vy / h;
        B(c, south) -= dt * vy / h;
      } else if (vy < 0.0 && north >= 0) {
        B(c, c) += dt * (-vy) / h;
        B(c, north) -= dt * (-vy) / h;
      }
    }
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
  Eigen::MatrixXd propagated = Eigen::MatrixXd::Identity(n_nodes, n_nodes);
  for (long s = 0; s < steps_to_t1; ++s) propagated = lu.solve(propagated);

  const int n_sensors = static_cast<int>(sensors.size());
  Eigen::MatrixXd F(static_cast<Eigen::Index>(n_sensors) * n_obs_times, n_nodes);
  for (int k = 0; k < n_obs_times; ++k) {
    if (k > 0) propagated = lu.solve(propagated);
    for (int s = 0; s < n_sensors; ++s) {
      F.row(static_cast<Eigen::Index>(k) * n_sensors + s) =
          propagated.row(node_id(sensors[s].ix, sensors[s].iy, n));
    }
  }
  return make_forward_model(std::move(F), n_sensors, n_obs_times);
}

GaussianPrior build_laplacian_prior(int grid_n, double delta, double scale) {
  if (grid_n < 2) throw std::invalid_argument("grid_n must be at least 2");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");

  const int n = grid_n;
  const int n_nodes = n * n;
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const int c = node_id(ix, iy, n);
      const int nbs[4] = {ix > 0 ? node_id(ix - 1, iy, n) : -1,
                          ix < n - 1 ? node_id(ix + 1, iy, n) : -1,
                          iy > 0 ? node_id(ix, iy - 1, n) : -1,
                          iy < n - 1 ? node_id(ix, iy + 1, n) : -1};
      for (int nb : nbs) {
        if (nb >= 0) {
          lap(c, c) += 1.0;
          lap(c, nb) -= 1.0;
        }
      }
    }
  }
  Eigen::MatrixXd shifted = delta * Eigen::MatrixXd::Identity(n_nodes, n_nodes) + lap;
  Eigen::MatrixXd precision = (shifted * shifted) / scale;
  const Eigen::MatrixXd sym = 0.5 * (precision + precision.transpose().eval());
  return make_gaussian_prior(Eigen::VectorXd::Zero(n_nodes), sym);
}

Eigen::MatrixXd noise_covariance(const NoiseModel& nm, const Eigen::VectorXd& lambda) {
  if (lambda.size() != nm.n_sensors)
    throw std::invalid_argument("lambda must have one entry per sensor");
  if (!nm.admissible(lambda))
    throw std::invalid_argument("lambda is outside the admissible box");
  const int n_obs = nm.n_obs();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n_obs, n_obs);
  for (int t = 0; t < nm.n_obs_times; ++t) {
    for (int i = 0; i < nm.n_sensors; ++i) {
      const int a = t * nm.n_sensors + i;
      cov(a, a) = lambda[i] * lambda[i];
    }
  }
  return cov;
}

Eigen::MatrixXd noise_covariance_derivative(const NoiseModel& nm,
                                            const Eigen::VectorXd& lambda, int sensor) {
  if (lambda.size() != nm.n_sensors)
    throw std::invalid_argument("lambda must have one entry per sensor");
  if (!nm.admissible(lambda))
    throw std::invalid_argument("lambda is outside the admissible box");
  if (sensor < 0 || sensor >= nm.n_sensors)
    throw std::out_of_range("sensor index out of range");
  const int n_obs = nm.n_obs();
  Eigen::MatrixXd deriv = Eigen::MatrixXd::Zero(n_obs, n_obs);
  for (int t = 0; t < nm.n_obs_times; ++t) {
    const int a = t * nm.n_sensors + sensor;
    deriv(a, a) = 2.0 * lambda[sensor];
  }
  return deriv;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> posterior_params(
    const LinearForwardModel& model, const GaussianPrior& prior,
    const Eigen::MatrixXd& noise_cov, const Eigen::VectorXd& data) {
  if (data.size() != model.n_obs())
    throw std::invalid_argument("data length must equal the observation dimension");
  if (noise_cov.rows() != model.n_obs() || noise_cov.cols() != model.n_obs())
    throw std::invalid_argument("noise covariance has the wrong shape");

  Eigen::LLT<Eigen::MatrixXd> noise_llt(noise_cov);
  if (noise_llt.info() != Eigen::Success)
    throw std::invalid_argument("noise covariance must be positive definite");

  const Eigen::MatrixXd ninv_f = noise_llt.solve(model.F);
  Eigen::MatrixXd fim = model.F.transpose() * ninv_f + prior.precision;
  Eigen::LLT<Eigen::MatrixXd> fim_llt(fim);
  if (fim_llt.info() != Eigen::Success)
    throw std::runtime_error("posterior system is singular");

  Eigen::MatrixXd cov =
      fim_llt.solve(Eigen::MatrixXd::Identity(fim.rows(), fim.cols()));
  cov = 0.5 * (cov + cov.transpose().eval());
  Eigen::VectorXd rhs = prior.precision * prior.mean +
                        model.F.transpose() * noise_llt.solve(data);
  Eigen::VectorXd mean = fim_llt.solve(rhs);
  return {std::move(mean), std::move(cov)};
}

}  // namespace roed
