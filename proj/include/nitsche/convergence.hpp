#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nitsche/analysis.hpp"
#include "nitsche/energy.hpp"
#include "nitsche/solver.hpp"

namespace nitsche {

enum class Diagnostic { galerkin, adjoint, pq, ellipticity, inverse_estimate };

std::string to_string(Diagnostic d);
/// Throws std::invalid_argument for unknown names.
Diagnostic diagnostic_from_string(const std::string& name);

struct StudyOptions {
  int coarse_cells = 8;
  NewtonOptions newton;
  std::vector<Diagnostic> diagnostics;
  std::uint64_t seed = 0;
  /// Start each level from the prolonged solution of the previous one.
  bool continuation = false;
  int pq_samples = 10;
  /// Gauss points for the t-integral of the Galerkin defect. Twelve points
  /// resolve non-polynomial dependence on t (cosine, minimal surface) below
  /// solver tolerances.
  int galerkin_t_points = 12;
  int inverse_estimate_trials = 20;
  /// Exponent of the monitored ||u_h||_{W^{1,q}}.
  double monitor_q = 4.0;
};

struct LevelResult {
  int level = 0;
  double h = 0.0;
  int dofs = 0;
  NormReport error;
  int newton_iters = 0;
  double final_residual = 0.0;
  double uh_w1q = 0.0;
  /// (name, value) in a fixed order per enabled diagnostic.
  std::vector<std::pair<std::string, double>> diagnostics;

  double diagnostic(const std::string& name) const;
};

/// Full W^{1,2} error sqrt(l2^2 + h1_semi^2); the H1 rate is fitted to it.
double h1_error(const NormReport& n);

struct ConvergenceReport {
  std::string problem;
  int dim = 1;
  int order = 1;
  Classification classification = Classification::linear;
  std::vector<LevelResult> levels;
  RateEstimate l2_rate;
  RateEstimate h1_rate;
  bool failed = false;
  std::string failure;
};

/// Minimizes the problem's energy on `levels` uniformly refined meshes of
/// (0,1)^d starting from `coarse_cells` cells per side, measures errors
/// against the exact solution, runs the enabled diagnostics and fits rates.
///
/// Galerkin and adjoint diagnostics compare against a reference solution on
/// the mesh two levels finer with order max(m, 2). For the Galerkin defect
/// the level solution is recomputed with the reference quadrature so both
/// discrete problems integrate identically.
///
/// Solver failures stop the study; the report is marked failed and keeps
/// the levels completed so far.
ConvergenceReport convergence_study(const ManufacturedProblem& problem, int order, int levels,
                                    const StudyOptions& opts = {});

/// Outcome of one pass/fail check on a report.
struct CheckResult {
  std::string name;
  bool passed = false;
  /// Informational checks are reported but do not affect the verdict.
  bool gating = true;
  std::string detail;
};

/// Rate windows: H1 slope in [m - 0.15, m + 0.25] with r^2 >= 0.995,
/// L2 slope in [m + 0.75, m + 1.3] with r^2 >= 0.99; plus one check per
/// enabled diagnostic. The H2-regularity and PQ stability checks are
/// informational for quasilinear problems.
std::vector<CheckResult> evaluate_checks(const ConvergenceReport& report, const StudyOptions& opts);

}  // namespace nitsche
