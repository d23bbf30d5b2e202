#include "roed/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace roed {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_comment(const std::string& s) {
  const std::size_t pos = s.find('#');
  return pos == std::string::npos ? s : s.substr(0, pos);
}

double parse_double(const std::string& file, int line, const std::string& key,
                    const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (trim(value.substr(pos)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(file, line, "key '" + key + "' expects a real number, got '" + value + "'");
}

long long parse_int(const std::string& file, int line, const std::string& key,
                    const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (trim(value.substr(pos)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(file, line, "key '" + key + "' expects an integer, got '" + value + "'");
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

void format(std::ostringstream& os, double v) { os << v; }

}  // namespace

ConfigError::ConfigError(std::string file, int line, const std::string& msg)
    : std::runtime_error(line > 0 ? file + ":" + std::to_string(line) + ": " + msg
                                  : file + ": " + msg),
      file_(std::move(file)),
      line_(line) {}

std::string to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::none:
      return "none";
    case PenaltyKind::l0_squared:
      return "l0_squared";
    case PenaltyKind::budget:
      return "budget";
  }
  return "none";
}

PenaltyKind penalty_kind_from_string(const std::string& s) {
  if (s == "none") return PenaltyKind::none;
  if (s == "l0_squared") return PenaltyKind::l0_squared;
  if (s == "budget") return PenaltyKind::budget;
  throw std::invalid_argument("unknown penalty kind '" + s + "'");
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& name) {
  ExperimentConfig cfg;
  std::istringstream stream(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  int fixture_line = 0;
  bool pde_keys_seen = false;
  bool prior_keys_seen = false;
  bool noise_keys_seen = false;
  int pde_line = 0;

  const std::unordered_set<std::string> sections = {"model",   "prior",  "noise",
                                                    "penalty", "solver", "output"};

  while (std::getline(stream, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(name, line_no, "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section))
        throw ConfigError(name, line_no, "unknown section '" + section + "'");
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(name, line_no, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError(name, line_no, "key '" + key + "' appears before any section");
    if (value.empty()) throw ConfigError(name, line_no, "key '" + key + "' has no value");

    if (section == "model") {
      if (key == "fixture") {
        cfg.model.fixture = value;
        fixture_line = line_no;
      } else if (key == "grid_n") {
        cfg.model.grid_n = static_cast<int>(parse_int(name, line_no, key, value));
        pde_keys_seen = true, pde_line = line_no;
      } else if (key == "n_obs_times") {
        cfg.model.n_obs_times = static_cast<int>(parse_int(name, line_no, key, value));
        pde_keys_seen = true, pde_line = line_no;
      } else if (key == "dt") {
        cfg.model.dt = parse_double(name, line_no, key, value);
        pde_keys_seen = true, pde_line = line_no;
      } else if (key == "t1") {
        cfg.model.t1 = parse_double(name, line_no, key, value);
        pde_keys_seen = true, pde_line = line_no;
      } else if (key == "kappa") {
        cfg.model.kappa = parse_double(name, line_no, key, value);
        pde_keys_seen = true, pde_line = line_no;
      } else if (key == "velocity") {
        const auto toks = split_ws(value);
        if (toks.size() != 2)
          throw ConfigError(name, line_no, "velocity expects two components");
        cfg.model.velocity = {parse_double(name, line_no, key, toks[0]),
                              parse_double(name, line_no, key, toks[1])};
        pde_keys_seen = true, pde_line = line_no;
      } else if (key == "sensors") {
        cfg.model.sensors.clear();
        for (const std::string& tok : split_ws(value)) {
          const std::size_t comma = tok.find(',');
          if (comma == std::string::npos)
            throw ConfigError(name, line_no, "sensor entries take the form ix,iy");
          GridPoint p;
          p.ix = static_cast<int>(parse_int(name, line_no, key, tok.substr(0, comma)));
          p.iy = static_cast<int>(parse_int(name, line_no, key, tok.substr(comma + 1)));
          cfg.model.sensors.push_back(p);
        }
        pde_keys_seen = true, pde_line = line_no;
      } else {
        throw ConfigError(name, line_no, "unknown key '" + key + "' in section [model]");
      }
    } else if (section == "prior") {
      prior_keys_seen = true;
      if (key == "delta")
        cfg.prior.delta = parse_double(name, line_no, key, value);
      else if (key == "scale")
        cfg.prior.scale = parse_double(name, line_no, key, value);
      else
        throw ConfigError(name, line_no, "unknown key '" + key + "' in section [prior]");
    } else if (section == "noise") {
      noise_keys_seen = true;
      if (key == "lambda_lo")
        cfg.noise.lambda_lo = parse_double(name, line_no, key, value);
      else if (key == "lambda_hi")
        cfg.noise.lambda_hi = parse_double(name, line_no, key, value);
      else
        throw ConfigError(name, line_no, "unknown key '" + key + "' in section [noise]");
    } else if (section == "penalty") {
      if (key == "kind") {
        try {
          cfg.penalty.kind = penalty_kind_from_string(value);
        } catch (const std::exception& e) {
          throw ConfigError(name, line_no, e.what());
        }
      } else if (key == "alpha") {
        cfg.penalty.alpha = parse_double(name, line_no, key, value);
      } else if (key == "budget") {
        cfg.penalty.budget = static_cast<int>(parse_int(name, line_no, key, value));
      } else {
        throw ConfigError(name, line_no, "unknown key '" + key + "' in section [penalty]");
      }
    } else if (section == "solver") {
      if (key == "gamma1")
        cfg.solver.gamma1 = parse_double(name, line_no, key, value);
      else if (key == "outer_steps_per_call")
        cfg.solver.outer_steps_per_call = static_cast<int>(parse_int(name, line_no, key, value));
      else if (key == "max_iterations")
        cfg.solver.max_iterations = static_cast<int>(parse_int(name, line_no, key, value));
      else if (key == "tol")
        cfg.solver.tol = parse_double(name, line_no, key, value);
      else if (key == "pgtol")
        cfg.solver.pgtol = parse_double(name, line_no, key, value);
      else if (key == "n_ens")
        cfg.solver.n_ens = static_cast<int>(parse_int(name, line_no, key, value));
      else if (key == "n_b")
        cfg.solver.n_b = static_cast<int>(parse_int(name, line_no, key, value));
      else if (key == "m_final")
        cfg.solver.m_final = static_cast<int>(parse_int(name, line_no, key, value));
      else if (key == "seed")
        cfg.solver.seed = static_cast<std::uint64_t>(parse_int(name, line_no, key, value));
      else
        throw ConfigError(name, line_no, "unknown key '" + key + "' in section [solver]");
    } else if (section == "output") {
      if (key == "directory")
        cfg.output.directory = value;
      else if (key == "formats")
        cfg.output.formats = value;
      else
        throw ConfigError(name, line_no, "unknown key '" + key + "' in section [output]");
    }
  }

  if (!cfg.model.fixture.empty()) {
    if (pde_keys_seen)
      throw ConfigError(name, std::max(fixture_line, pde_line),
                        "a model fixture replaces the surrogate model keys");
    if (prior_keys_seen || noise_keys_seen)
      throw ConfigError(name, fixture_line,
                        "a model fixture provides the prior and noise sections");
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open configuration file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

std::string render_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "# effective configuration (defaults resolved)\n";
  os << "[model]\n";
  if (!cfg.model.fixture.empty()) {
    os << "fixture = " << cfg.model.fixture << "\n";
  } else {
    os << "grid_n = " << cfg.model.grid_n << "\n";
    os << "n_obs_times = " << cfg.model.n_obs_times << "\n";
    os << "dt = ";
    format(os, cfg.model.dt);
    os << "  # simulation time step\n";
    os << "t1 = ";
    format(os, cfg.model.t1);
    os << "  # first observation time\n";
    os << "kappa = ";
    format(os, cfg.model.kappa);
    os << "  # diffusivity\n";
    os << "velocity = ";
    format(os, cfg.model.velocity[0]);
    os << " ";
    format(os, cfg.model.velocity[1]);
    os << "\n";
    os << "sensors =";
    for (const GridPoint& p : cfg.model.sensors) os << " " << p.ix << "," << p.iy;
    os << "  # interior grid indices\n";
    os << "\n[prior]\n";
    os << "delta = ";
    format(os, cfg.prior.delta);
    os << "\n";
    os << "scale = ";
    format(os, cfg.prior.scale);
    os << "\n";
    os << "\n[noise]\n";
    os << "lambda_lo = ";
    format(os, cfg.noise.lambda_lo);
    os << "\n";
    os << "lambda_hi = ";
    format(os, cfg.noise.lambda_hi);
    os << "\n";
  }
  os << "\n[penalty]\n";
  os << "kind = " << to_string(cfg.penalty.kind) << "\n";
  os << "alpha = ";
  format(os, cfg.penalty.alpha);
  os << "\n";
  os << "budget = " << cfg.penalty.budget << "\n";
  os << "\n[solver]\n";
  os << "gamma1 = ";
  format(os, cfg.solver.gamma1);
  os << "\n";
  os << "outer_steps_per_call = " << cfg.solver.outer_steps_per_call << "\n";
  os << "max_iterations = " << cfg.solver.max_iterations << "\n";
  os << "tol = ";
  format(os, cfg.solver.tol);
  os << "\n";
  os << "pgtol = ";
  format(os, cfg.solver.pgtol);
  os << "\n";
  os << "n_ens = " << cfg.solver.n_ens << "\n";
  os << "n_b = " << cfg.solver.n_b << "\n";
  os << "m_final = " << cfg.solver.m_final << "\n";
  os << "seed = " << cfg.solver.seed << "\n";
  os << "\n[output]\n";
  os << "directory = " << cfg.output.directory << "\n";
  os << "formats = " << cfg.output.formats << "\n";
  return os.str();
}

void validate(const ExperimentConfig& cfg) {
  const std::string where = "<config>";
  if (cfg.model.fixture.empty()) {
    if (cfg.model.grid_n < 4) throw ConfigError(where, 0, "model.grid_n must be at least 4");
    if (cfg.model.n_obs_times < 1)
      throw ConfigError(where, 0, "model.n_obs_times must be at least 1");
    if (!(cfg.model.dt > 0.0)) throw ConfigError(where, 0, "model.dt must be positive");
    if (!(cfg.model.t1 > 0.0)) throw ConfigError(where, 0, "model.t1 must be positive");
    if (cfg.model.kappa < 0.0) throw ConfigError(where, 0, "model.kappa must be nonnegative");
    if (cfg.model.sensors.empty())
      throw ConfigError(where, 0, "model.sensors must list at least one grid point");
    if (!(cfg.prior.delta > 0.0)) throw ConfigError(where, 0, "prior.delta must be positive");
    if (!(cfg.prior.scale > 0.0)) throw ConfigError(where, 0, "prior.scale must be positive");
    if (!(cfg.noise.lambda_lo > 0.0))
      throw ConfigError(where, 0, "noise.lambda_lo must be positive");
    if (!(cfg.noise.lambda_lo < cfg.noise.lambda_hi))
      throw ConfigError(where, 0, "noise.lambda_lo must be smaller than noise.lambda_hi");
  }
  if (cfg.penalty.alpha < 0.0) throw ConfigError(where, 0, "penalty.alpha must be nonnegative");
  if (cfg.penalty.kind == PenaltyKind::budget && cfg.penalty.budget < 1)
    throw ConfigError(where, 0, "penalty.budget must be at least 1");
  try {
    validate(cfg.solver);
  } catch (const std::exception& e) {
    throw ConfigError(where, 0, std::string("solver: ") + e.what());
  }
  if (cfg.output.directory.empty())
    throw ConfigError(where, 0, "output.directory must not be empty");
}

PenaltyConfig penalty_config(const ExperimentConfig& cfg) {
  PenaltyConfig pc;
  pc.kind = cfg.penalty.kind;
  pc.alpha = cfg.penalty.alpha;
  pc.budget = cfg.penalty.budget;
  return pc;
}

Problem build_problem(const ExperimentConfig& cfg) {
  validate(cfg);
  if (!cfg.model.fixture.empty()) return fixture_problem(load_fixture(cfg.model.fixture));
  Problem problem;
  problem.model = build_reference_model(cfg.model.grid_n, cfg.model.n_obs_times,
                                        cfg.model.kappa, cfg.model.velocity,
                                        cfg.model.sensors, cfg.model.dt, cfg.model.t1);
  problem.prior = build_laplacian_prior(cfg.model.grid_n, cfg.prior.delta, cfg.prior.scale);
  problem.noise = make_noise_model(cfg.noise.lambda_lo, cfg.noise.lambda_hi,
                                   problem.model.n_sensors, cfg.model.n_obs_times);
  return problem;
}

ModelFixture load_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open fixture file");
  std::string magic;
  in >> magic;
  if (magic != "roed-fixture-v1") throw ConfigError(path, 0, "not a roed fixture file");

  ModelFixture fx;
  bool have_f = false, have_prec = false, have_mean = false;
  std::string tok;
  while (in >> tok) {
    if (tok == "n_sensors") {
      in >> fx.n_sensors;
    } else if (tok == "n_obs_times") {
      in >> fx.n_obs_times;
    } else if (tok == "n_param") {
      in >> fx.n_param;
    } else if (tok == "lambda_lo") {
      in >> fx.lambda_lo;
    } else if (tok == "lambda_hi") {
      in >> fx.lambda_hi;
    } else if (tok == "F") {
      if (fx.n_sensors < 1 || fx.n_obs_times < 1 || fx.n_param < 1)
        throw ConfigError(path, 0, "fixture dimensions must precede the F block");
      fx.F.resize(static_cast<Eigen::Index>(fx.n_sensors) * fx.n_obs_times, fx.n_param);
      for (Eigen::Index r = 0; r < fx.F.rows(); ++r)
        for (Eigen::Index c = 0; c < fx.F.cols(); ++c)
          if (!(in >> fx.F(r, c))) throw ConfigError(path, 0, "truncated F block");
      have_f = true;
    } else if (tok == "prior_precision") {
      if (fx.n_param < 1)
        throw ConfigError(path, 0, "fixture dimensions must precede the precision block");
      fx.prior_precision.resize(fx.n_param, fx.n_param);
      for (Eigen::Index r = 0; r < fx.n_param; ++r)
        for (Eigen::Index c = 0; c < fx.n_param; ++c)
          if (!(in >> fx.prior_precision(r, c)))
            throw ConfigError(path, 0, "truncated prior_precision block");
      have_prec = true;
    } else if (tok == "prior_mean") {
      if (fx.n_param < 1)
        throw ConfigError(path, 0, "fixture dimensions must precede the mean block");
      fx.prior_mean.resize(fx.n_param);
      for (Eigen::Index i = 0; i < fx.n_param; ++i)
        if (!(in >> fx.prior_mean(i))) throw ConfigError(path, 0, "truncated prior_mean block");
      have_mean = true;
    } else if (tok == "end") {
      break;
    } else {
      throw ConfigError(path, 0, "unknown fixture token '" + tok + "'");
    }
    if (in.fail()) throw ConfigError(path, 0, "malformed fixture value near '" + tok + "'");
  }
  if (!have_f) throw ConfigError(path, 0, "fixture is missing the F block");
  if (!have_prec) throw ConfigError(path, 0, "fixture is missing the prior_precision block");
  if (!have_mean) fx.prior_mean = Eigen::VectorXd::Zero(fx.n_param);
  return fx;
}

std::string render_fixture(const ModelFixture& fixture) {
  std::ostringstream os;
  os.precision(17);
  os << "roed-fixture-v1\n";
  os << "n_sensors " << fixture.n_sensors << "\n";
  os << "n_obs_times " << fixture.n_obs_times << "\n";
  os << "n_param " << fixture.n_param << "\n";
  os << "lambda_lo ";
  format(os, fixture.lambda_lo);
  os << "\nlambda_hi ";
  format(os, fixture.lambda_hi);
  os << "\nF\n";
  for (Eigen::Index r = 0; r < fixture.F.rows(); ++r) {
    for (Eigen::Index c = 0; c < fixture.F.cols(); ++c) {
      if (c) os << " ";
      format(os, fixture.F(r, c));
    }
    os << "\n";
  }
  os << "prior_precision\n";
  for (Eigen::Index r = 0; r < fixture.prior_precision.rows(); ++r) {
    for (Eigen::Index c = 0; c < fixture.prior_precision.cols(); ++c) {
      if (c) os << " ";
      format(os, fixture.prior_precision(r, c));
    }
    os << "\n";
  }
  os << "prior_mean\n";
  for (Eigen::Index i = 0; i < fixture.prior_mean.size(); ++i) {
    if (i) os << " ";
    format(os, fixture.prior_mean(i));
  }
  os << "\nend\n";
  return os.str();
}

Problem fixture_problem(const ModelFixture& fixture) {
  Problem problem;
  problem.model = make_forward_model(fixture.F, fixture.n_sensors, fixture.n_obs_times);
  problem.prior = make_gaussian_prior(fixture.prior_mean, fixture.prior_precision);
  problem.noise = make_noise_model(fixture.lambda_lo, fixture.lambda_hi, fixture.n_sensors,
                                   fixture.n_obs_times);
  return problem;
}

}  // namespace roed
