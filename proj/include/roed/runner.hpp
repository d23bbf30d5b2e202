#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "roed/config.hpp"
#include "roed/oracle.hpp"

namespace roed {

// Exit codes shared by the CLI and the C API.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitCheckFailed = 3;

struct RunOptions {
  std::string config_path;
  std::string out_dir;  // empty: use the configured output directory
  std::optional<std::int64_t> seed_override;
  bool quiet = false;
};

// Writes the full content to a temporary file in the target directory
// and renames it into place, so outputs are fully written or absent.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Runs the robust solve and writes result.txt, trace.csv,
// redundancy.csv, and config_echo.cfg into the output directory.  On a
// runtime error the partial trace is still flushed.
int cmd_solve(const RunOptions& options);

// Writes the exhaustive per-design table (bruteforce.csv); when a
// previous solve result exists in the output directory, also writes
// optimality_gap.txt comparing the two.
int cmd_bruteforce(const RunOptions& options);

struct GradCheckRow {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Finite-difference and enumeration checks of the analytic gradients
// and the score-function estimator; inject_sign_flip is a fault hook
// that must make the suite fail.
std::vector<GradCheckRow> run_gradient_checks(const Problem& problem,
                                              const PenaltyConfig& penalty_cfg,
                                              std::uint64_t seed, bool inject_sign_flip);

int cmd_gradcheck(const RunOptions& options, bool inject_sign_flip = false);

// Aggregates trace CSVs of one or more runs found under runs_dir into
// summary tables written to the same directory.
int cmd_report(const std::string& runs_dir, bool quiet);

}  // namespace roed
