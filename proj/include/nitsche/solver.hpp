#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "nitsche/assembly.hpp"
#include "nitsche/energy.hpp"
#include "nitsche/fe_space.hpp"

namespace nitsche {

struct LinearSolveResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients. Throws SolverError when the
/// relative residual does not reach `tol` within `max_iters` (0 selects
/// 10 * dim).
LinearSolveResult linear_solve(const SparseOperator& a, const Eigen::VectorXd& b, double tol = 1e-12,
                               int max_iters = 0);

enum class Damping { none, armijo };
enum class InitialGuess { zero_interior, interpolant_of_exact, prolonged_coarse };

struct NewtonOptions {
  int max_iters = 50;
  /// Sup norm of the boundary-masked residual.
  double residual_tol = 1e-12;
  double linear_tol = 1e-12;
  Damping damping = Damping::armijo;
  double armijo_c1 = 1e-4;
  double backtrack_factor = 0.5;
  InitialGuess initial_guess = InitialGuess::zero_interior;
  AssemblyOptions assembly;
};

/// Data backing the non-default initial guesses.
struct GuessSource {
  ScalarField exact;
  std::optional<FEFunction> coarse;
};

struct NewtonStep {
  double residual_norm = 0.0;
  double energy = 0.0;
  double step_length = 0.0;
};

struct SolveLog {
  std::vector<NewtonStep> iterations;
  bool converged = false;

  /// Number of Newton updates taken.
  int newton_steps() const { return iterations.empty() ? 0 : static_cast<int>(iterations.size()) - 1; }
};

struct MinimizeResult {
  FEFunction u;
  SolveLog log;
};

/// Damped Newton iteration on dJ(u_h)(V_h) = 0 over the space with its
/// boundary data. The log records the state before each update and the
/// final state; the step length of the final entry is zero.
/// Throws SolverError on linear-solve failure, line-search underflow or
/// when the iteration cap is reached.
MinimizeResult minimize(const EnergyModel& model, const SpacePtr& space, const NewtonOptions& opts = {},
                        const GuessSource& source = {});

/// Matrix P with P(i, j) = phi_j(x_i) for the coarse basis phi_j and fine
/// nodes x_i. The fine mesh must descend from the coarse mesh and the fine
/// order must not be lower.
SparseOperator::Matrix prolongation_matrix(const FESpace& coarse, const FESpace& fine);

/// Exact representation of a coarse function in a nested finer space.
FEFunction prolong(const FEFunction& f, const SpacePtr& fine);

}  // namespace nitsche
