#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "roed/model.hpp"
#include "roed/objective.hpp"
#include "roed/optimizer.hpp"

namespace roed {

// Configuration error anchored to a source line (0 = no line).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string file, int line, const std::string& msg);
  const std::string& file() const { return file_; }
  int line() const { return line_; }

 private:
  std::string file_;
  int line_;
};

struct ModelSection {
  // Either a fixture file providing F, the prior precision, and the
  // noise box, or the finite-difference surrogate parameters below.
  std::string fixture;

  int grid_n = 8;
  int n_obs_times = 5;
  double dt = 0.2;
  double t1 = 1.0;
  double kappa = 0.01;
  std::array<double, 2> velocity{1.0, 0.0};
  std::vector<GridPoint> sensors;
};

struct PriorSection {
  double delta = 0.5;
  double scale = 1.0;
};

struct NoiseSection {
  double lambda_lo = 0.02;
  double lambda_hi = 0.04;
};

struct PenaltySection {
  PenaltyKind kind = PenaltyKind::none;
  double alpha = 0.0;
  int budget = 1;
};

struct OutputSection {
  std::string directory = "roed_out";
  std::string formats = "csv";
};

struct ExperimentConfig {
  ModelSection model;
  PriorSection prior;
  NoiseSection noise;
  PenaltySection penalty;
  SolverConfig solver;
  OutputSection output;
};

// Flat sectioned key-value text.  Unknown sections or keys are
// rejected; '#' starts a comment.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& name = "<config>");

// Effective configuration with all defaults resolved; re-parsing the
// output reproduces the same configuration.
std::string render_config(const ExperimentConfig& cfg);

// Cross-field validation; throws ConfigError before any computation.
void validate(const ExperimentConfig& cfg);

// Builds the model bundle (surrogate or fixture).
Problem build_problem(const ExperimentConfig& cfg);

PenaltyConfig penalty_config(const ExperimentConfig& cfg);

// Model fixture: dense forward matrix, prior precision, noise box.
struct ModelFixture {
  int n_sensors = 0;
  int n_obs_times = 0;
  int n_param = 0;
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  Eigen::MatrixXd F;                // row-major in the file
  Eigen::MatrixXd prior_precision;
  Eigen::VectorXd prior_mean;       // optional in the file; zero if absent
};

ModelFixture load_fixture(const std::string& path);
std::string render_fixture(const ModelFixture& fixture);
Problem fixture_problem(const ModelFixture& fixture);

std::string to_string(PenaltyKind kind);
PenaltyKind penalty_kind_from_string(const std::string& s);

}  // namespace roed
