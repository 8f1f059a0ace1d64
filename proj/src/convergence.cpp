#include "nitsche/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "nitsche/format.hpp"

namespace nitsche {

std::string to_string(Diagnostic d) {
  switch (d) {
    case Diagnostic::galerkin: return "galerkin";
    case Diagnostic::adjoint: return "adjoint";
    case Diagnostic::pq: return "pq";
    case Diagnostic::ellipticity: return "ellipticity";
    case Diagnostic::inverse_estimate: return "inverse_estimate";
  }
  return "unknown";
}

Diagnostic diagnostic_from_string(const std::string& name) {
  for (Diagnostic d : {Diagnostic::galerkin, Diagnostic::adjoint, Diagnostic::pq, Diagnostic::ellipticity,
                       Diagnostic::inverse_estimate}) {
    if (to_string(d) == name) return d;
  }
  throw std::invalid_argument("unknown diagnostic '" + name + "'");
}

double h1_error(const NormReport& n) { return std::hypot(n.l2, n.h1_semi); }

double LevelResult::diagnostic(const std::string& name) const {
  for (const auto& [n, v] : diagnostics) {
    if (n == name) return v;
  }
  throw std::out_of_range("level " + std::to_string(level) + " has no diagnostic '" + name + "'");
}

namespace {

bool enabled(const StudyOptions& opts, Diagnostic d) {
  return std::find(opts.diagnostics.begin(), opts.diagnostics.end(), d) != opts.diagnostics.end();
}

class MeshHierarchy {
 public:
  MeshHierarchy(int dim, int cells) { meshes_.push_back(std::make_shared<const Mesh>(build_unit_mesh(dim, cells))); }

  const std::shared_ptr<const Mesh>& at(int level) {
    while (static_cast<int>(meshes_.size()) <= level) {
      meshes_.push_back(std::make_shared<const Mesh>(refine(meshes_.back())));
    }
    return meshes_[level];
  }

 private:
  std::vector<std::shared_ptr<const Mesh>> meshes_;
};

void run_level(const ManufacturedProblem& problem, int order, int level, const StudyOptions& opts,
               MeshHierarchy& meshes, const FEFunction* previous, LevelResult& out, FEFunction& solution) {
  const EnergyModel& model = *problem.model;
  const SpacePtr space = make_space(meshes.at(level), order, problem.boundary_fn);

  NewtonOptions newton = opts.newton;
  GuessSource guess;
  if (opts.continuation && previous != nullptr) {
    newton.initial_guess = InitialGuess::prolonged_coarse;
    guess.coarse = *previous;
  }
  MinimizeResult solved = minimize(model, space, newton, guess);
  solution = solved.u;

  out.level = level;
  out.h = space->width();
  out.dofs = space->num_dofs();
  out.error = norms(problem.exact, solution);
  out.newton_iters = solved.log.newton_steps();
  out.final_residual = solved.log.iterations.back().residual_norm;
  NormOptions monitor;
  monitor.q = opts.monitor_q;
  out.uh_w1q = norms(solution, monitor).w1q;

  const bool need_reference = enabled(opts, Diagnostic::galerkin) || enabled(opts, Diagnostic::adjoint);
  std::optional<FEFunction> u_ref;
  if (need_reference) {
    const SpacePtr ref_space = make_space(meshes.at(level + 2), std::max(order, 2), problem.boundary_fn);
    NewtonOptions ref_opts = opts.newton;
    ref_opts.initial_guess = InitialGuess::prolonged_coarse;
    u_ref = minimize(model, ref_space, ref_opts, {{}, solution}).u;
  }

  for (Diagnostic d : opts.diagnostics) {
    switch (d) {
      case Diagnostic::galerkin: {
        NewtonOptions matched = opts.newton;
        matched.assembly.quad_degree = u_ref->space->default_quad_degree();
        matched.assembly.quad_subdivisions = 2;
        matched.initial_guess = InitialGuess::prolonged_coarse;
        const FEFunction u_matched = minimize(model, space, matched, {{}, solution}).u;
        out.diagnostics.emplace_back("galerkin_defect", galerkin_defect(model, *u_ref, u_matched, opts.galerkin_t_points));
        break;
      }
      case Diagnostic::adjoint: {
        const FEFunction rhs = prolong(solution, u_ref->space) - *u_ref;
        const FEFunction w = solve_adjoint(model, *u_ref, rhs, opts.newton.linear_tol);
        const DualityIdentity id = aubin_nitsche_identity(model, problem.exact, solution, *u_ref, w);
        out.diagnostics.emplace_back("adjoint_identity_residual", id.relative_residual);
        out.diagnostics.emplace_back("h2_regularity_ratio", h2_regularity_ratio(w, rhs));
        break;
      }
      case Diagnostic::pq: {
        FEFunction state = solution;
        if (order < 2) state = prolong(solution, make_space(meshes.at(level), 2, problem.boundary_fn));
        const PQEstimate pq = estimate_pq_constant(model, state, {1, 2.0}, opts.pq_samples, opts.seed + 11);
        out.diagnostics.emplace_back("pq_ratio", pq.max_ratio);
        break;
      }
      case Diagnostic::ellipticity: {
        EigenOptions eig;
        eig.seed = opts.seed + 3;
        const EllipticityEstimate est = estimate_ellipticity(model, solution, eig);
        out.diagnostics.emplace_back("lambda_min", est.lambda_min);
        out.diagnostics.emplace_back("lambda_max", est.lambda_max);
        if (!(est.lambda_min > 0.0)) {
          throw SolverError("second variation is not coercive at the discrete minimizer", est.lambda_min);
        }
        break;
      }
      case Diagnostic::inverse_estimate:
        out.diagnostics.emplace_back("inverse_estimate_ratio",
                                     check_inverse_estimate(*space, opts.inverse_estimate_trials, opts.seed + 1));
        break;
    }
  }
}

}  // namespace

ConvergenceReport convergence_study(const ManufacturedProblem& problem, int order, int levels,
                                    const StudyOptions& opts) {
  if (levels < 3) throw std::invalid_argument("convergence_study: need at least three levels");
  ConvergenceReport report;
  report.problem = problem.name;
  report.dim = problem.dim;
  report.order = order;
  report.classification = classify(*problem.model, problem.dim);

  MeshHierarchy meshes(problem.dim, opts.coarse_cells);
  std::optional<FEFunction> previous;
  for (int level = 0; level < levels; ++level) {
    LevelResult result;
    FEFunction solution;
    try {
      run_level(problem, order, level, opts, meshes, previous ? &*previous : nullptr, result, solution);
    } catch (const SolverError& e) {
      report.failed = true;
      report.failure = "level " + std::to_string(level) + ": " + e.what();
      if (result.dofs > 0) report.levels.push_back(std::move(result));
      break;
    }
    report.levels.push_back(std::move(result));
    previous = std::move(solution);
  }

  if (report.levels.size() >= 3) {
    std::vector<std::pair<double, double>> l2, h1;
    for (const auto& lv : report.levels) {
      l2.emplace_back(lv.h, lv.error.l2);
      h1.emplace_back(lv.h, h1_error(lv.error));
    }
    try {
      report.l2_rate = estimate_rate(l2);
      report.h1_rate = estimate_rate(h1);
    } catch (const std::invalid_argument& e) {
      report.failed = true;
      report.failure = std::string("rate fit: ") + e.what();
    }
  }
  return report;
}

namespace {

std::vector<double> collect(const ConvergenceReport& report, const std::string& name) {
  std::vector<double> values;
  for (const auto& lv : report.levels) {
    for (const auto& [n, v] : lv.diagnostics) {
      if (n == name) values.push_back(v);
    }
  }
  return values;
}

double max_of(const std::vector<double>& v) {
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : *std::max_element(v.begin(), v.end());
}

double min_of(const std::vector<double>& v) {
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : *std::min_element(v.begin(), v.end());
}

CheckResult window_check(const std::string& name, const RateEstimate& rate, double lo, double hi, double r2_min) {
  CheckResult c;
  c.name = name;
  c.passed = rate.slope >= lo && rate.slope <= hi && rate.r_squared >= r2_min;
  c.detail = "slope " + format_double(rate.slope) + " in [" + format_double(lo) + ", " + format_double(hi) +
             "], r^2 " + format_double(rate.r_squared) + " >= " + format_double(r2_min);
  return c;
}

}  // namespace

std::vector<CheckResult> evaluate_checks(const ConvergenceReport& report, const StudyOptions& opts) {
  std::vector<CheckResult> checks;
  const double m = report.order;
  checks.push_back({"study_completed", !report.failed, true, report.failed ? report.failure : "all levels solved"});
  if (report.failed || report.levels.size() < 3) return checks;

  checks.push_back(window_check("h1_rate", report.h1_rate, m - 0.15, m + 0.25, 0.995));
  checks.push_back(window_check("l2_rate", report.l2_rate, m + 0.75, m + 1.3, 0.99));

  if (enabled(opts, Diagnostic::galerkin)) {
    const auto v = collect(report, "galerkin_defect");
    double bound = 100.0 * (opts.newton.residual_tol + opts.newton.linear_tol);
    if (report.classification == Classification::linear) bound = std::min(bound, 1e-10);
    checks.push_back({"galerkin_defect", max_of(v) <= bound, true,
                      "max defect " + format_double(max_of(v)) + " <= " + format_double(bound)});
  }
  if (enabled(opts, Diagnostic::adjoint)) {
    const auto id = collect(report, "adjoint_identity_residual");
    checks.push_back({"adjoint_identity", max_of(id) < 0.05, true,
                      "max relative identity residual " + format_double(max_of(id)) + " < 0.05"});
    const auto h2 = collect(report, "h2_regularity_ratio");
    const double spread = max_of(h2) / min_of(h2) - 1.0;
    checks.push_back({"h2_regularity_stability", spread <= 0.15,
                      report.classification != Classification::quasilinear,
                      "ratio spread " + format_double(spread) + " <= 0.15"});
  }
  if (enabled(opts, Diagnostic::pq)) {
    const auto v = collect(report, "pq_ratio");
    if (report.classification == Classification::linear) {
      checks.push_back({"pq_ratio", max_of(v) < 1e-13, true, "max ratio " + format_double(max_of(v)) + " < 1e-13"});
    } else {
      const double growth = max_of(v) / min_of(v);
      checks.push_back({"pq_ratio", growth < 2.0, report.classification == Classification::semilinear,
                        "growth across levels " + format_double(growth) + " < 2"});
    }
  }
  if (enabled(opts, Diagnostic::ellipticity)) {
    const auto v = collect(report, "lambda_min");
    checks.push_back({"coercivity", min_of(v) > 0.0, true, "min lambda_min " + format_double(min_of(v)) + " > 0"});
  }
  if (enabled(opts, Diagnostic::inverse_estimate)) {
    const auto v = collect(report, "inverse_estimate_ratio");
    const double spread = (max_of(v) - min_of(v)) / min_of(v);
    checks.push_back({"inverse_estimate", spread < 0.10, true,
                      "ratio variation " + format_double(spread) + " < 0.1"});
  }
  return checks;
}

}  // namespace nitsche
