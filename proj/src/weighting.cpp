#include "roed/weighting.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

namespace roed {

DesignVector::DesignVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (std::uint8_t b : bits_) {
    if (b != 0 && b != 1) throw std::invalid_argument("design entries must be 0 or 1");
  }
}

DesignVector DesignVector::zeros(int n) {
  return DesignVector(std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0));
}

DesignVector DesignVector::ones(int n) {
  return DesignVector(std::vector<std::uint8_t>(static_cast<std::size_t>(n), 1));
}

DesignVector DesignVector::from_index(std::uint64_t index, int n) {
  if (index < 1 || (n < 64 && index > (1ull << n)))
    throw std::out_of_range("design index out of range");
  std::uint64_t k = index - 1;
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) bits[static_cast<std::size_t>(i)] = (k >> i) & 1u;
  return DesignVector(std::move(bits));
}

int DesignVector::active_count() const {
  int count = 0;
  for (std::uint8_t b : bits_) count += b;
  return count;
}

std::vector<int> active_observation_indices(const DesignVector& design, int n_obs_times) {
  if (n_obs_times < 1) throw std::invalid_argument("n_obs_times must be at least 1");
  const int n_sensors = design.size();
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(design.active_count()) * n_obs_times);
  for (int t = 0; t < n_obs_times; ++t) {
    for (int i = 0; i < n_sensors; ++i) {
      if (design.active(i)) idx.push_back(t * n_sensors + i);
    }
  }
  return idx;
}

Eigen::SparseMatrix<double> restriction_matrix(const DesignVector& design, int n_obs_times) {
  const std::vector<int> idx = active_observation_indices(design, n_obs_times);
  const int n_obs = design.size() * n_obs_times;
  Eigen::SparseMatrix<double> P(static_cast<Eigen::Index>(idx.size()), n_obs);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    triplets.emplace_back(static_cast<int>(r), idx[r], 1.0);
  P.setFromTriplets(triplets.begin(), triplets.end());
  return P;
}

namespace {

// Scatter the inverse of the gathered block back to full size.
Eigen::MatrixXd invert_gathered_block(const Eigen::MatrixXd& block,
                                      const std::vector<int>& idx, int n_obs) {
  Eigen::LLT<Eigen::MatrixXd> llt(block);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("active block of the masked covariance is singular");
  const Eigen::MatrixXd inv =
      llt.solve(Eigen::MatrixXd::Identity(block.rows(), block.cols()));
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n_obs, n_obs);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    for (std::size_t c = 0; c < idx.size(); ++c) {
      W(idx[r], idx[c]) = inv(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return W;
}

bool is_diagonal(const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (r != c && m(r, c) != 0.0) return false;
    }
  }
  return true;
}

}  // namespace

Eigen::MatrixXd weighted_precision(const DesignVector& design,
                                   const Eigen::MatrixXd& noise_cov, int n_obs_times) {
  const int n_obs = design.size() * n_obs_times;
  if (noise_cov.rows() != n_obs || noise_cov.cols() != n_obs)
    throw std::invalid_argument("noise covariance has the wrong shape");
  const std::vector<int> idx = active_observation_indices(design, n_obs_times);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n_obs, n_obs);
  if (idx.empty()) return W;

  if (is_diagonal(noise_cov)) {
    for (int a : idx) W(a, a) = 1.0 / noise_cov(a, a);
    return W;
  }
  Eigen::MatrixXd block(idx.size(), idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c)
      block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          noise_cov(idx[r], idx[c]);
  return invert_gathered_block(block, idx, n_obs);
}

WeightMatrix relaxed_weight_matrix(const Eigen::VectorXd& weights, int n_obs_times) {
  if (n_obs_times < 1) throw std::invalid_argument("n_obs_times must be at least 1");
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0 && weights[i] <= 1.0))
      throw std::invalid_argument("weights must lie in [0, 1]");
  }
  const int n_sensors = static_cast<int>(weights.size());
  const int n_obs = n_sensors * n_obs_times;
  // Time-replicated weight vector; the pattern applies at observation level.
  Eigen::VectorXd w(n_obs);
  for (int t = 0; t < n_obs_times; ++t)
    for (int i = 0; i < n_sensors; ++i) w[t * n_sensors + i] = weights[i];

  WeightMatrix omega;
  omega.entries.resize(n_obs, n_obs);
  for (int a = 0; a < n_obs; ++a) {
    for (int b = 0; b < n_obs; ++b) {
      if (a == b)
        omega.entries(a, b) = w[a] == 0.0 ? 0.0 : 1.0 / (w[a] * w[a]);
      else
        omega.entries(a, b) = w[a] * w[b];
    }
  }
  return omega;
}

Eigen::MatrixXd relaxed_weighted_precision(const Eigen::VectorXd& weights,
                                           const Eigen::MatrixXd& noise_cov,
                                           int n_obs_times) {
  const int n_sensors = static_cast<int>(weights.size());
  const int n_obs = n_sensors * n_obs_times;
  if (noise_cov.rows() != n_obs || noise_cov.cols() != n_obs)
    throw std::invalid_argument("noise covariance has the wrong shape");
  const WeightMatrix omega = relaxed_weight_matrix(weights, n_obs_times);

  std::vector<int> idx;
  Eigen::VectorXd w(n_obs);
  for (int t = 0; t < n_obs_times; ++t)
    for (int i = 0; i < n_sensors; ++i) w[t * n_sensors + i] = weights[i];
  for (int a = 0; a < n_obs; ++a)
    if (w[a] != 0.0) idx.push_back(a);

  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n_obs, n_obs);
  if (idx.empty()) return W;
  Eigen::MatrixXd block(idx.size(), idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c)
      block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          omega.entries(idx[r], idx[c]) * noise_cov(idx[r], idx[c]);
  return invert_gathered_block(block, idx, n_obs);
}

}  // namespace roed
