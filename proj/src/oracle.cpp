#include "roed/oracle.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace roed {

namespace {

// Moore-Penrose pseudoinverse through a full SVD.  Deliberately the
// generic route: the production path inverts the restricted block, so
// the two sides stay independent checks of each other.
Eigen::MatrixXd pinv_svd(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() > 0
                            ? sv.maxCoeff() * static_cast<double>(std::max(m.rows(), m.cols())) *
                                  std::numeric_limits<double>::epsilon()
                            : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) inv[i] = 1.0 / sv[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double local_penalty(const DesignVector& design, const PenaltyConfig& cfg) {
  int active = 0;
  for (int i = 0; i < design.size(); ++i) active += design.active(i) ? 1 : 0;
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

void format_value(std::ostringstream& os, double v) { os << v; }

}  // namespace

double oracle_objective(const DesignVector& design, const Eigen::VectorXd& lambda,
                        const Problem& problem, const PenaltyConfig& penalty_cfg,
                        bool include_prior_trace) {
  const Eigen::MatrixXd cov = noise_covariance(problem.noise, lambda);
  const int n_obs = static_cast<int>(cov.rows());
  Eigen::VectorXd d(n_obs);
  for (int t = 0; t < problem.noise.n_obs_times; ++t)
    for (int i = 0; i < problem.noise.n_sensors; ++i)
      d[t * problem.noise.n_sensors + i] = design.active(i) ? 1.0 : 0.0;
  const Eigen::MatrixXd masked = d.asDiagonal() * cov * d.asDiagonal();
  const Eigen::MatrixXd w = pinv_svd(masked);
  const double trace =
      (problem.model.F.transpose() * w * problem.model.F).trace() +
      (include_prior_trace ? problem.prior.precision.trace() : 0.0);
  return trace - penalty_cfg.alpha * local_penalty(design, penalty_cfg);
}

BruteForceResult brute_force_maxmin(const SampleSet& sample_set, const Problem& problem,
                                    const PenaltyConfig& penalty_cfg,
                                    bool include_prior_trace) {
  const int n = problem.noise.n_sensors;
  if (n > 20) throw std::invalid_argument("brute force is limited to 20 sensors");
  if (sample_set.empty()) throw std::invalid_argument("sample set must be nonempty");

  BruteForceResult result;
  const std::uint64_t count = 1ull << n;
  result.rows.reserve(count);
  double best = -std::numeric_limits<double>::infinity();
  std::uint64_t best_index = 0;

  for (std::uint64_t k = 1; k <= count; ++k) {
    BruteForceRow row;
    row.design_index = k;
    row.design = DesignVector::from_index(k, n);
    row.values.reserve(sample_set.size());
    double min_value = std::numeric_limits<double>::infinity();
    for (const Eigen::VectorXd& lam : sample_set.members()) {
      const double v =
          oracle_objective(row.design, lam, problem, penalty_cfg, include_prior_trace);
      row.values.push_back(v);
      if (v < min_value) {
        min_value = v;
        row.argmin_lambda = lam;
      }
    }
    row.min_value = min_value;
    row.zero_penalty = local_penalty(row.design, penalty_cfg) == 0.0;
    if (min_value > best) {
      best = min_value;
      best_index = k;
    }
    result.rows.push_back(std::move(row));
  }

  result.optimum_value = best;
  result.optimum = DesignVector::from_index(best_index, n);
  result.rows[best_index - 1].is_optimal = true;
  return result;
}

DesignVector nominal_solve(const Eigen::VectorXd& lambda_nominal, const Problem& problem,
                           const PenaltyConfig& penalty_cfg) {
  const int n = problem.noise.n_sensors;
  if (n > 20) throw std::invalid_argument("exhaustive search is limited to 20 sensors");
  if (!problem.noise.admissible(lambda_nominal))
    throw std::invalid_argument("nominal lambda is outside the admissible box");
  const std::uint64_t count = 1ull << n;
  double best = -std::numeric_limits<double>::infinity();
  std::uint64_t best_index = 1;
  for (std::uint64_t k = 1; k <= count; ++k) {
    const DesignVector d = DesignVector::from_index(k, n);
    const double v = oracle_objective(d, lambda_nominal, problem, penalty_cfg, true);
    if (v > best) {
      best = v;
      best_index = k;
    }
  }
  return DesignVector::from_index(best_index, n);
}

RedundancyReport redundancy_report(const CachePhaseStats& overall,
                                   const CachePhaseStats& outer,
                                   const SolverTrace& trace) {
  RedundancyReport report;
  report.overall_ratio =
      overall.total == 0
          ? 0.0
          : 1.0 - static_cast<double>(overall.unique) / static_cast<double>(overall.total);
  report.outer_ratio =
      outer.total == 0
          ? 0.0
          : 1.0 - static_cast<double>(outer.unique) / static_cast<double>(outer.total);
  report.new_evaluations_per_iteration.reserve(trace.iterations.size());
  for (const IterationRecord& rec : trace.iterations)
    report.new_evaluations_per_iteration.push_back(rec.new_evaluations);
  return report;
}

std::string brute_force_csv(const BruteForceResult& result, const SampleSet& sample_set) {
  std::ostringstream os;
  os.precision(17);
  os << "design_index,design";
  for (std::size_t j = 0; j < sample_set.size(); ++j) os << ",value_lambda_" << j + 1;
  os << ",min_value,argmin_lambda,zero_penalty,is_optimal\n";
  for (const BruteForceRow& row : result.rows) {
    os << row.design_index << ",";
    for (int i = 0; i < row.design.size(); ++i) os << (row.design.active(i) ? '1' : '0');
    for (double v : row.values) {
      os << ",";
      format_value(os, v);
    }
    os << ",";
    format_value(os, row.min_value);
    os << ",\"";
    for (Eigen::Index i = 0; i < row.argmin_lambda.size(); ++i) {
      if (i) os << " ";
      format_value(os, row.argmin_lambda[i]);
    }
    os << "\"," << (row.zero_penalty ? 1 : 0) << "," << (row.is_optimal ? 1 : 0) << "\n";
  }
  return os.str();
}

}  // namespace roed
