#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nitsche/convergence.hpp"
#include "nitsche/types.hpp"

namespace nitsche::cli {

enum ExitCode : int { ok = 0, check_failed = 1, config_error = 2, solver_failure = 3 };

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Flat JSON object; unknown keys are rejected.
///   problem, dim, order, levels          required
///   coarse_cells (8), diagnostics ([]), seed (0),
///   newton_tol (1e-12), linear_tol (1e-12), output_dir
/// A relative output_dir is taken relative to the config file; the default
/// is the config file's directory.
struct StudyConfig {
  std::string problem;
  int dim = 1;
  int order = 1;
  int levels = 3;
  int coarse_cells = 8;
  std::vector<Diagnostic> diagnostics;
  std::uint64_t seed = 0;
  double newton_tol = 1e-12;
  double linear_tol = 1e-12;
  std::filesystem::path output_dir;
};

/// Throws ConfigError with a message naming the offending key.
StudyConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
StudyConfig load_config(const std::filesystem::path& path);

StudyOptions study_options(const StudyConfig& config);

std::string rates_csv(const ConvergenceReport& report);
std::string diagnostics_csv(const ConvergenceReport& report);
std::string report_text(const ConvergenceReport& report, const std::vector<CheckResult>& checks);

/// Runs the configured study and writes rates.csv, diagnostics.csv and
/// report.txt. Nothing is written when the config is invalid.
int run(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);

/// One line per built-in problem: name, energy density, Euler-Lagrange
/// equation, classification.
std::string list_problems();

/// Writes l2.dat, h1.dat and rates.gp next to the CSV. Without `order` the
/// reference slopes use the fitted H1 slope rounded to an integer.
int plot(const std::filesystem::path& rates_path, std::optional<int> order, std::ostream& out, std::ostream& err);

}  // namespace nitsche::cli
