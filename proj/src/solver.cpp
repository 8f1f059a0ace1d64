#include "nitsche/solver.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/IterativeLinearSolvers>

namespace nitsche {

LinearSolveResult linear_solve(const SparseOperator& a, const Eigen::VectorXd& b, double tol, int max_iters) {
  if (b.size() != a.dim()) throw std::invalid_argument("linear_solve: dimension mismatch");
  LinearSolveResult result;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    result.x = Eigen::VectorXd::Zero(b.size());
    return result;
  }
  Eigen::ConjugateGradient<SparseOperator::Matrix, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(max_iters > 0 ? max_iters : std::max(10 * a.dim(), 100));
  cg.compute(a.matrix());
  result.x = cg.solve(b);
  result.iterations = static_cast<int>(cg.iterations());
  result.relative_residual = (b - a.matrix() * result.x).norm() / bnorm;
  if (cg.info() != Eigen::Success || !std::isfinite(result.relative_residual)) {
    throw SolverError("conjugate gradients did not converge after " + std::to_string(result.iterations) +
                          " iterations (relative residual " + std::to_string(result.relative_residual) + ")",
                      result.relative_residual);
  }
  return result;
}

namespace {

FEFunction initial_iterate(const SpacePtr& space, const NewtonOptions& opts, const GuessSource& source) {
  switch (opts.initial_guess) {
    case InitialGuess::zero_interior:
      return boundary_lift(space);
    case InitialGuess::interpolant_of_exact: {
      if (!source.exact) throw std::invalid_argument("minimize: interpolant_of_exact needs an exact function");
      FEFunction u = interpolate(space, source.exact);
      for (int b : space->boundary_dofs()) u.coeffs[b] = space->boundary_values()[b];
      return u;
    }
    case InitialGuess::prolonged_coarse: {
      if (!source.coarse) throw std::invalid_argument("minimize: prolonged_coarse needs a coarse solution");
      FEFunction u = prolong(*source.coarse, space);
      for (int b : space->boundary_dofs()) u.coeffs[b] = space->boundary_values()[b];
      return u;
    }
  }
  return boundary_lift(space);
}

}  // namespace

MinimizeResult minimize(const EnergyModel& model, const SpacePtr& space, const NewtonOptions& opts,
                        const GuessSource& source) {
  if (!(opts.residual_tol > 0.0)) throw std::invalid_argument("minimize: residual_tol must be positive");
  if (!(opts.armijo_c1 > 0.0 && opts.armijo_c1 < 1.0)) throw std::invalid_argument("minimize: c1 must lie in (0,1)");
  if (!(opts.backtrack_factor > 0.0 && opts.backtrack_factor < 1.0)) {
    throw std::invalid_argument("minimize: backtrack factor must lie in (0,1)");
  }

  MinimizeResult out{initial_iterate(space, opts, source), {}};
  FEFunction& u = out.u;
  for (int it = 0;; ++it) {
    const Eigen::VectorXd r = assemble_residual(model, u, opts.assembly);
    const double rnorm = r.lpNorm<Eigen::Infinity>();
    const double energy = total_energy(model, u, opts.assembly);
    out.log.iterations.push_back({rnorm, energy, 0.0});
    if (rnorm <= opts.residual_tol) {
      out.log.converged = true;
      return out;
    }
    if (it >= opts.max_iters) {
      throw SolverError("Newton iteration cap reached (residual " + std::to_string(rnorm) + ")", rnorm);
    }

    const SparseOperator h = assemble_hessian(model, u, opts.assembly);
    const Eigen::VectorXd step = linear_solve(h, -r, opts.linear_tol).x;

    double alpha = 1.0;
    if (opts.damping == Damping::armijo) {
      const double slope = r.dot(step);
      if (!(slope < 0.0)) throw SolverError("Newton direction is not a descent direction", rnorm);
      // Below this scale energy differences are rounding noise.
      const double noise = 1e-13 * std::max(1.0, std::abs(energy));
      while (-alpha * slope > noise) {
        const FEFunction trial(space, u.coeffs + alpha * step);
        if (total_energy(model, trial, opts.assembly) <= energy + opts.armijo_c1 * alpha * slope) break;
        alpha *= opts.backtrack_factor;
        if (alpha < 1e-12) throw SolverError("line search step underflow", rnorm);
      }
    }
    u.coeffs += alpha * step;
    out.log.iterations.back().step_length = alpha;
  }
}

SparseOperator::Matrix prolongation_matrix(const FESpace& coarse, const FESpace& fine) {
  if (!fine.mesh().descends_from(coarse.mesh())) {
    throw std::invalid_argument("prolong: fine mesh does not refine the coarse mesh");
  }
  if (fine.order() < coarse.order()) throw std::invalid_argument("prolong: fine order below coarse order");

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<char> done(fine.num_dofs(), 0);
  for (std::size_t e = 0; e < fine.mesh().num_elements(); ++e) {
    const int ancestor = fine.mesh().ancestor_element(e, coarse.mesh());
    const ElementMap& map = coarse.element_map(ancestor);
    const auto coarse_dofs = coarse.element_dofs(ancestor);
    for (int i : fine.element_dofs(e)) {
      if (done[i]) continue;
      done[i] = 1;
      const BasisTabulation tab = coarse.basis().tabulate(map.to_reference(fine.dof_coord(i)));
      for (std::size_t j = 0; j < coarse_dofs.size(); ++j) {
        if (std::abs(tab.values[j]) > 1e-15) triplets.emplace_back(i, coarse_dofs[j], tab.values[j]);
      }
    }
  }
  SparseOperator::Matrix p(fine.num_dofs(), coarse.num_dofs());
  p.setFromTriplets(triplets.begin(), triplets.end());
  return p;
}

FEFunction prolong(const FEFunction& f, const SpacePtr& fine) {
  return FEFunction(fine, prolongation_matrix(*f.space, *fine) * f.coeffs);
}

}  // namespace nitsche
