#include "roed/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "roed/rng.hpp"

namespace roed {

namespace fs = std::filesystem;

namespace {

std::ostringstream make_stream() {
  std::ostringstream os;
  os.precision(17);
  return os;
}

std::string bits_string(const DesignVector& d) {
  std::string s;
  s.reserve(static_cast<std::size_t>(d.size()));
  for (int i = 0; i < d.size(); ++i) s.push_back(d.active(i) ? '1' : '0');
  return s;
}

std::string vector_string(const Eigen::VectorXd& v) {
  auto os = make_stream();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << " ";
    os << v[i];
  }
  return os.str();
}

Eigen::VectorXd parse_vector(const std::string& s) {
  std::istringstream is(s);
  std::vector<double> vals;
  double v;
  while (is >> v) vals.push_back(v);
  Eigen::VectorXd out(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) out[static_cast<Eigen::Index>(i)] = vals[i];
  return out;
}

struct ResultRecord {
  std::map<std::string, std::string> fields;
  std::vector<std::string> sample_set_members;
};

ResultRecord parse_result_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  ResultRecord rec;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    while (!value.empty() && value.front() == ' ') value.erase(value.begin());
    if (key == "sample_set_member")
      rec.sample_set_members.push_back(value);
    else
      rec.fields[key] = value;
  }
  return rec;
}

std::string trace_csv_header(int n_sensors) {
  std::ostringstream os;
  os << "iteration,psi_after_outer,psi_after_inner,lambda_added,new_evaluations,"
        "redundancy_ratio,perturbed";
  for (int i = 0; i < n_sensors; ++i) os << ",lambda_" << i + 1;
  for (int i = 0; i < n_sensors; ++i) os << ",theta_" << i + 1;
  os << "\n";
  return os.str();
}

std::string trace_csv_row(const IterationRecord& rec) {
  auto os = make_stream();
  os << rec.iteration << "," << rec.psi_after_outer << "," << rec.psi_after_inner << ","
     << (rec.lambda_added ? 1 : 0) << "," << rec.new_evaluations << ","
     << rec.redundancy_ratio << "," << (rec.perturbed ? 1 : 0);
  for (Eigen::Index i = 0; i < rec.lambda_new.size(); ++i) os << "," << rec.lambda_new[i];
  for (Eigen::Index i = 0; i < rec.theta.size(); ++i) os << "," << rec.theta[i];
  os << "\n";
  return os.str();
}

struct LoadedExperiment {
  ExperimentConfig config;
  Problem problem;
  PenaltyConfig penalty;
};

// Shared front half of the commands: parse, apply overrides, validate,
// build.  Throws ConfigError for anything the user got wrong.
LoadedExperiment load_experiment(const RunOptions& options) {
  LoadedExperiment exp;
  exp.config = parse_config_file(options.config_path);
  if (options.seed_override)
    exp.config.solver.seed = static_cast<std::uint64_t>(*options.seed_override);
  if (!options.out_dir.empty()) exp.config.output.directory = options.out_dir;
  validate(exp.config);
  exp.problem = build_problem(exp.config);
  exp.penalty = penalty_config(exp.config);
  return exp;
}

int report_error(const std::exception& e, int code) {
  std::cerr << "error: " << e.what() << "\n";
  return code;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

int cmd_solve(const RunOptions& options) {
  LoadedExperiment exp;
  try {
    exp = load_experiment(options);
  } catch (const ConfigError& e) {
    return report_error(e, kExitValidation);
  } catch (const std::invalid_argument& e) {
    return report_error(e, kExitValidation);
  } catch (const std::exception& e) {
    return report_error(e, kExitRuntime);
  }

  const fs::path out_dir = exp.config.output.directory;
  std::string trace_rows;
  try {
    fs::create_directories(out_dir);
    write_file_atomic(out_dir / "config_echo.cfg", render_config(exp.config));

    SolveOptions solve_options;
    solve_options.on_iteration = [&](const IterationRecord& rec) {
      trace_rows += trace_csv_row(rec);
      if (!options.quiet)
        std::cout << "iteration " << rec.iteration << ": psi " << rec.psi_after_outer
                  << " -> " << rec.psi_after_inner << ", new evaluations "
                  << rec.new_evaluations << "\n";
    };

    const auto started = std::chrono::steady_clock::now();
    const SolveResult result =
        robust_solve(exp.problem, exp.penalty, exp.config.solver,
                     default_initial_sample(exp.problem.noise), solve_options);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    write_file_atomic(out_dir / "trace.csv",
                      trace_csv_header(exp.problem.noise.n_sensors) + trace_rows);

    auto redundancy = make_stream();
    redundancy << "iteration,new_evaluations\n";
    for (const IterationRecord& rec : result.trace.iterations)
      redundancy << rec.iteration << "," << rec.new_evaluations << "\n";
    write_file_atomic(out_dir / "redundancy.csv", redundancy.str());

    const RedundancyReport ratios =
        redundancy_report(result.cache_overall, result.cache_outer, result.trace);
    auto record = make_stream();
    record << "robust-oed result v1\n";
    record << "n_sensors = " << exp.problem.noise.n_sensors << "\n";
    record << "n_obs_times = " << exp.problem.noise.n_obs_times << "\n";
    record << "design = " << bits_string(result.design) << "\n";
    record << "design_index = " << design_index(result.design) << "\n";
    record << "objective_utility = " << result.objective_value.utility << "\n";
    record << "objective_penalty = " << result.objective_value.penalty << "\n";
    record << "objective_total = " << result.objective_value.total << "\n";
    record << "worst_case_objective = " << result.min_over_sample_set << "\n";
    record << "final_lambda = " << vector_string(result.final_lambda) << "\n";
    record << "final_theta = " << vector_string(result.policy.theta) << "\n";
    record << "iterations = " << result.iterations << "\n";
    record << "converged = " << (result.trace.converged ? 1 : 0) << "\n";
    record << "termination = " << result.trace.termination << "\n";
    record << "perturbations = " << result.trace.perturbations << "\n";
    record << "evaluations_total = " << result.cache_overall.total << "\n";
    record << "evaluations_unique = " << result.cache_overall.unique << "\n";
    record << "redundancy_overall = " << ratios.overall_ratio << "\n";
    record << "redundancy_outer = " << ratios.outer_ratio << "\n";
    record << "seed = " << exp.config.solver.seed << "\n";
    record << "sample_set_size = " << result.sample_set.size() << "\n";
    for (const Eigen::VectorXd& m : result.sample_set.members())
      record << "sample_set_member = " << vector_string(m) << "\n";
    write_file_atomic(out_dir / "result.txt", record.str());

    if (!options.quiet) {
      std::cout << "design " << bits_string(result.design) << " (index "
                << design_index(result.design) << "), objective "
                << result.objective_value.total << ", worst case "
                << result.min_over_sample_set << "\n";
      std::cout << "finished in " << result.iterations << " iterations, " << seconds
                << " s; outputs in " << out_dir.string() << "\n";
    }
    return kExitOk;
  } catch (const std::exception& e) {
    // Flush whatever trace rows completed before the failure.
    try {
      fs::create_directories(out_dir);
      write_file_atomic(out_dir / "trace.csv",
                        trace_csv_header(exp.problem.noise.n_sensors) + trace_rows);
    } catch (...) {
    }
    return report_error(e, kExitRuntime);
  }
}

int cmd_bruteforce(const RunOptions& options) {
  LoadedExperiment exp;
  try {
    exp = load_experiment(options);
    if (exp.problem.noise.n_sensors > 20)
      throw ConfigError(options.config_path, 0,
                        "brute force is limited to 20 sensors; got " +
                            std::to_string(exp.problem.noise.n_sensors));
  } catch (const ConfigError& e) {
    return report_error(e, kExitValidation);
  } catch (const std::invalid_argument& e) {
    return report_error(e, kExitValidation);
  } catch (const std::exception& e) {
    return report_error(e, kExitRuntime);
  }

  try {
    const fs::path out_dir = exp.config.output.directory;
    fs::create_directories(out_dir);

    // Reuse the sample set of a previous solve in this directory when
    // one exists, so the comparison runs over the same scenarios.
    SampleSet set = default_initial_sample(exp.problem.noise);
    const fs::path result_path = out_dir / "result.txt";
    bool have_solve = false;
    ResultRecord solve_record;
    if (fs::exists(result_path)) {
      solve_record = parse_result_file(result_path);
      if (!solve_record.sample_set_members.empty()) {
        SampleSet from_solve;
        for (const std::string& m : solve_record.sample_set_members)
          from_solve.add(parse_vector(m));
        set = from_solve;
        have_solve = solve_record.fields.count("design") > 0;
      }
    }

    const BruteForceResult table = brute_force_maxmin(set, exp.problem, exp.penalty);
    write_file_atomic(out_dir / "bruteforce.csv", brute_force_csv(table, set));

    if (have_solve) {
      const std::string& bits = solve_record.fields.at("design");
      std::uint64_t idx = 1;
      for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i] == '1') idx += 1ull << i;
      const BruteForceRow& row = table.rows.at(idx - 1);
      const double gap = table.optimum_value - row.min_value;
      const double rel =
          std::abs(table.optimum_value) > 0 ? gap / std::abs(table.optimum_value) : gap;
      auto os = make_stream();
      os << "solve_design = " << bits << "\n";
      os << "solve_worst_case = " << row.min_value << "\n";
      os << "bruteforce_optimum_design = " << bits_string(table.optimum) << "\n";
      os << "bruteforce_optimum_value = " << table.optimum_value << "\n";
      os << "optimality_gap_absolute = " << gap << "\n";
      os << "optimality_gap_relative = " << rel << "\n";
      write_file_atomic(out_dir / "optimality_gap.txt", os.str());
      if (!options.quiet)
        std::cout << "optimality gap " << gap << " (relative " << rel << ")\n";
    }
    if (!options.quiet)
      std::cout << "bruteforce.csv: " << table.rows.size() << " designs, optimum "
                << bits_string(table.optimum) << " at " << table.optimum_value << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(e, kExitRuntime);
  }
}

std::vector<GradCheckRow> run_gradient_checks(const Problem& problem,
                                              const PenaltyConfig& penalty_cfg,
                                              std::uint64_t seed, bool inject_sign_flip) {
  std::vector<GradCheckRow> rows;
  const NoiseModel& nm = problem.noise;
  const double h = 1e-6;
  Rng rng(derive_seed(seed, 7001));

  // Analytic lambda gradient against central differences of the trace.
  {
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      DesignVector d = DesignVector::zeros(nm.n_sensors);
      for (int i = 0; i < nm.n_sensors; ++i) d.set(i, rng.uniform() < 0.6);
      Eigen::VectorXd lambda(nm.n_sensors);
      for (int i = 0; i < nm.n_sensors; ++i)
        lambda[i] = rng.uniform(nm.lambda_lo + 2 * h, nm.lambda_hi - 2 * h);

      Eigen::VectorXd grad = grad_lambda(d, lambda, problem);
      if (inject_sign_flip) grad = -grad;
      Eigen::VectorXd fd(nm.n_sensors);
      for (int i = 0; i < nm.n_sensors; ++i) {
        Eigen::VectorXd up = lambda, dn = lambda;
        up[i] += h;
        dn[i] -= h;
        fd[i] = (fim_trace(d, up, problem) - fim_trace(d, dn, problem)) / (2 * h);
      }
      const double scale = std::max(fd.lpNorm<Eigen::Infinity>(), 1e-12);
      worst = std::max(worst, (grad - fd).lpNorm<Eigen::Infinity>() / scale);
    }
    rows.push_back({"lambda_gradient_vs_central_fd", worst, 1e-5, worst <= 1e-5});
  }

  // Directional derivative of the masked pseudoinverse.
  {
    double worst = 0.0;
    const int n_obs = nm.n_obs();
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::MatrixXd r(n_obs, n_obs);
      for (int a = 0; a < n_obs; ++a)
        for (int b = 0; b < n_obs; ++b) r(a, b) = rng.uniform(-1.0, 1.0);
      Eigen::MatrixXd gamma =
          r * r.transpose() + n_obs * Eigen::MatrixXd::Identity(n_obs, n_obs);
      Eigen::MatrixXd direction(n_obs, n_obs);
      for (int a = 0; a < n_obs; ++a)
        for (int b = 0; b < n_obs; ++b) direction(a, b) = rng.uniform(-1.0, 1.0);
      direction = 0.5 * (direction + direction.transpose().eval());

      DesignVector d = DesignVector::zeros(nm.n_sensors);
      while (d.active_count() == 0)
        for (int i = 0; i < nm.n_sensors; ++i) d.set(i, rng.uniform() < 0.6);
      Eigen::VectorXd mask(n_obs);
      for (int t = 0; t < nm.n_obs_times; ++t)
        for (int i = 0; i < nm.n_sensors; ++i)
          mask[t * nm.n_sensors + i] = d.active(i) ? 1.0 : 0.0;
      const Eigen::MatrixXd masked_dir =
          mask.asDiagonal() * direction * mask.asDiagonal();

      const Eigen::MatrixXd w0 = weighted_precision(d, gamma, nm.n_obs_times);
      const Eigen::MatrixXd w1 =
          weighted_precision(d, gamma + h * direction, nm.n_obs_times);
      const Eigen::MatrixXd fd = (w1 - w0) / h;
      const Eigen::MatrixXd analytic = -w0 * masked_dir * w0;
      const double scale = std::max(analytic.norm(), 1e-12);
      worst = std::max(worst, (fd - analytic).norm() / scale);
    }
    rows.push_back({"pseudoinverse_directional_derivative", worst, 1e-4, worst <= 1e-4});
  }

  // Score identity by exact enumeration.
  {
    const int n = std::min(nm.n_sensors, 4);
    BernoulliPolicy policy;
    policy.theta.resize(n);
    for (int i = 0; i < n; ++i) policy.theta[i] = rng.uniform(0.15, 0.85);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const double mean = exact_expectation(
          policy, [&](const DesignVector& d) { return log_prob_gradient(d, policy)[i]; });
      worst = std::max(worst, std::abs(mean));
    }
    rows.push_back({"score_identity_enumeration", worst, 1e-12, worst <= 1e-12});
  }

  // Score-function estimator against the enumerated gradient (z-scores).
  {
    const int n = 3;
    BernoulliPolicy policy;
    policy.theta.resize(n);
    for (int i = 0; i < n; ++i) policy.theta[i] = rng.uniform(0.25, 0.75);
    std::vector<double> table(1ull << n);
    for (std::size_t k = 0; k < table.size(); ++k) {
      double v = 0.0;
      const DesignVector d = DesignVector::from_index(k + 1, n);
      for (int i = 0; i < n; ++i)
        if (d.active(i)) v += 1.0 + 0.7 * i;
      table[k] = v + (d.active_count() == 2 ? 0.9 : 0.0);
    }
    auto value_fn = [&](const DesignVector& d) { return table[design_index(d) - 1]; };

    // Exact gradient by the product rule over the enumeration.
    Eigen::VectorXd exact = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < table.size(); ++k) {
      const DesignVector d = DesignVector::from_index(k + 1, n);
      for (int i = 0; i < n; ++i) {
        double partial = d.active(i) ? 1.0 : -1.0;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          partial *= d.active(j) ? policy.theta[j] : 1.0 - policy.theta[j];
        }
        exact[i] += partial * table[k];
      }
    }

    const int draws = 100000;
    const DesignSample samples =
        sample(policy, draws, derive_seed(seed, 7002));
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(n);
    for (const DesignVector& d : samples.designs) {
      const Eigen::VectorXd term = value_fn(d) * log_prob_gradient(d, policy);
      mean += term;
      sq += term.cwiseProduct(term);
    }
    mean /= draws;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const double var = sq[i] / draws - mean[i] * mean[i];
      const double se = std::sqrt(std::max(var, 1e-300) / draws);
      worst = std::max(worst, std::abs(mean[i] - exact[i]) / se);
    }
    rows.push_back({"estimator_unbiasedness_z_score", worst, 3.0, worst <= 3.0});
  }

  // Inactive design: the gradient vanishes identically.
  {
    const Eigen::VectorXd mid = nm.box_midpoint();
    const double norm =
        grad_lambda(DesignVector::zeros(nm.n_sensors), mid, problem).lpNorm<Eigen::Infinity>();
    rows.push_back({"zero_design_gradient", norm, 0.0, norm == 0.0});
  }

  (void)penalty_cfg;
  return rows;
}

int cmd_gradcheck(const RunOptions& options, bool inject_sign_flip) {
  LoadedExperiment exp;
  try {
    exp = load_experiment(options);
  } catch (const ConfigError& e) {
    return report_error(e, kExitValidation);
  } catch (const std::invalid_argument& e) {
    return report_error(e, kExitValidation);
  } catch (const std::exception& e) {
    return report_error(e, kExitRuntime);
  }

  try {
    const std::vector<GradCheckRow> rows = run_gradient_checks(
        exp.problem, exp.penalty, exp.config.solver.seed, inject_sign_flip);
    auto os = make_stream();
    os << "check,measured,tolerance,pass\n";
    bool all_pass = true;
    for (const GradCheckRow& row : rows) {
      os << row.name << "," << row.measured << "," << row.tolerance << ","
         << (row.pass ? 1 : 0) << "\n";
      if (!options.quiet)
        std::cout << (row.pass ? "pass" : "FAIL") << "  " << row.name << "  measured "
                  << row.measured << "  tolerance " << row.tolerance << "\n";
      all_pass = all_pass && row.pass;
    }
    const fs::path out_dir = exp.config.output.directory;
    fs::create_directories(out_dir);
    write_file_atomic(out_dir / "gradcheck.csv", os.str());
    return all_pass ? kExitOk : kExitCheckFailed;
  } catch (const std::exception& e) {
    return report_error(e, kExitRuntime);
  }
}

int cmd_report(const std::string& runs_dir, bool quiet) {
  try {
    const fs::path root(runs_dir);
    if (!fs::exists(root) || !fs::is_directory(root)) {
      std::cerr << "error: '" << runs_dir << "' is not a directory\n";
      return kExitValidation;
    }

    std::vector<std::pair<std::string, fs::path>> runs;
    if (fs::exists(root / "trace.csv")) runs.emplace_back(root.filename().string(), root);
    std::vector<fs::path> children;
    for (const auto& entry : fs::directory_iterator(root))
      if (entry.is_directory() && fs::exists(entry.path() / "trace.csv"))
        children.push_back(entry.path());
    std::sort(children.begin(), children.end());
    for (const fs::path& child : children) runs.emplace_back(child.filename().string(), child);

    if (runs.empty()) {
      std::cerr << "error: no runs with a trace.csv found under '" << runs_dir << "'\n";
      return kExitValidation;
    }

    auto objective_csv = make_stream();
    auto evals_csv = make_stream();
    auto redundancy_csv = make_stream();
    objective_csv << "run,iteration,psi_after_outer,psi_after_inner\n";
    evals_csv << "run,iteration,new_evaluations\n";
    redundancy_csv << "run,n_sensors,redundancy_overall,redundancy_outer\n";

    for (const auto& [name, dir] : runs) {
      std::ifstream trace(dir / "trace.csv");
      if (!trace) continue;
      std::string line;
      std::getline(trace, line);  // header
      while (std::getline(trace, line)) {
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) cols.push_back(col);
        if (cols.size() < 5) continue;
        objective_csv << name << "," << cols[0] << "," << cols[1] << "," << cols[2] << "\n";
        evals_csv << name << "," << cols[0] << "," << cols[4] << "\n";
      }
      const fs::path result_path = dir / "result.txt";
      if (fs::exists(result_path)) {
        const ResultRecord rec = parse_result_file(result_path);
        const auto get = [&](const char* key) {
          auto it = rec.fields.find(key);
          return it == rec.fields.end() ? std::string("nan") : it->second;
        };
        redundancy_csv << name << "," << get("n_sensors") << "," << get("redundancy_overall")
                       << "," << get("redundancy_outer") << "\n";
      }
    }

    write_file_atomic(root / "summary_objective.csv", objective_csv.str());
    write_file_atomic(root / "summary_new_evals.csv", evals_csv.str());
    write_file_atomic(root / "summary_redundancy.csv", redundancy_csv.str());
    if (!quiet)
      std::cout << "aggregated " << runs.size() << " run(s) into " << root.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(e, kExitRuntime);
  }
}

}  // namespace roed
