#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <vector>

namespace roed {

// Binary sensor-activation vector.  Entries are strictly 0 or 1.
class DesignVector {
 public:
  DesignVector() = default;
  explicit DesignVector(std::vector<std::uint8_t> bits);

  static DesignVector zeros(int n);
  static DesignVector ones(int n);
  // Inverse of the 1-based enumeration index k = 1 + sum b_i 2^i.
  static DesignVector from_index(std::uint64_t index, int n);

  int size() const { return static_cast<int>(bits_.size()); }
  int active_count() const;
  bool active(int i) const { return bits_[static_cast<std::size_t>(i)] != 0; }
  void set(int i, bool on) { bits_[static_cast<std::size_t>(i)] = on ? 1 : 0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool operator==(const DesignVector& other) const { return bits_ == other.bits_; }
  bool operator!=(const DesignVector& other) const { return bits_ != other.bits_; }

 private:
  std::vector<std::uint8_t> bits_;
};

// Design-weighting matrix realizing the relaxed weight pattern:
// diagonal 0 where w_i = 0 and 1/w_i^2 otherwise, off-diagonal w_i w_j.
struct WeightMatrix {
  Eigen::MatrixXd entries;
};

// Observation indices (time-major) selected by the active sensors.
std::vector<int> active_observation_indices(const DesignVector& design, int n_obs_times);

// Sparse selector P with one unit entry per row; P x gathers the active
// observation entries of x in time-major order.
Eigen::SparseMatrix<double> restriction_matrix(const DesignVector& design, int n_obs_times);

// W = (diag(d) G diag(d))^+ = P^T (P G P^T)^{-1} P with d the
// time-replicated design.  Rows and columns at inactive observation
// indices are zero.
Eigen::MatrixXd weighted_precision(const DesignVector& design,
                                   const Eigen::MatrixXd& noise_cov, int n_obs_times);

// Weight matrix for relaxed (fractional) sensor weights in [0,1],
// applied to the time-replicated weight vector.
WeightMatrix relaxed_weight_matrix(const Eigen::VectorXd& weights, int n_obs_times);

// W = (Omega(w) .* G)^+ computed by restriction to nonzero-weight
// indices; coincides with weighted_precision at binary corners.
Eigen::MatrixXd relaxed_weighted_precision(const Eigen::VectorXd& weights,
                                           const Eigen::MatrixXd& noise_cov,
                                           int n_obs_times);

}  // namespace roed
