#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nitsche/assembly.hpp"
#include "nitsche/energy.hpp"
#include "nitsche/fe_space.hpp"
#include "nitsche/solver.hpp"

namespace nitsche {

/// Extreme generalized eigenvalues of d^2J(v) against the H1 Gram matrix
/// (mass + stiffness) on interior dofs.
struct EllipticityEstimate {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  std::string state;
};

struct EigenOptions {
  double tol = 1e-6;
  /// Cap on Krylov dimension.
  int max_iters = 2000;
  std::uint64_t seed = 3;
  double linear_tol = 1e-12;
};

/// Extreme eigenvalues of G^{-1} H on interior dofs by Lanczos iteration in
/// the G inner product with full reorthogonalization. Converged when both
/// extreme Ritz values change by at most 1e-2 * tol (relative) on three
/// consecutive steps, or when the Krylov space becomes invariant. Throws
/// SolverError on stagnation.
EllipticityEstimate estimate_ellipticity(const EnergyModel& model, const FEFunction& v,
                                         const EigenOptions& opts = {});

/// max over interior coarse basis functions V_h of
///   | int_0^1 d^2J(G(t))(V_h, u_h - u_fine) dt |,  G(t) = (1-t) u_fine + t u_h,
/// evaluated on the fine space with a Gauss rule of `t_points` nodes.
double galerkin_defect(const EnergyModel& model, const FEFunction& u_fine, const FEFunction& u_h,
                       int t_points = 5, const AssemblyOptions& opts = {});

/// W with d^2J(u_ref)(W, V) = -(V, rhs_diff)_{L2} for all V vanishing on
/// the boundary. Requires order >= 2.
FEFunction solve_adjoint(const EnergyModel& model, const FEFunction& u_ref, const FEFunction& rhs_diff,
                         double linear_tol = 1e-12);

/// (||W||_{L2} + |W|_{H1} + |W|_{H2,broken}) / ||rhs_diff||_{L2}.
double h2_regularity_ratio(const FEFunction& w, const FEFunction& rhs_diff);

/// Terms of the duality identity ||u - u_h||^2 + d^2J(u)(W, u_h - u) = 0,
/// with u_ref standing in for u inside the second variation.
struct DualityIdentity {
  double l2_error_sq = 0.0;
  double pairing = 0.0;
  double relative_residual = 0.0;
};

DualityIdentity aubin_nitsche_identity(const EnergyModel& model, const SmoothFunction& exact, const FEFunction& u_h,
                                       const FEFunction& u_ref, const FEFunction& w);

struct NormPair {
  int o = 1;
  double r = 2.0;
};

struct PQEstimate {
  int samples = 0;
  double max_ratio = 0.0;
  double max_ratio_smooth = 0.0;
  double max_ratio_rough = 0.0;
  NormPair norm_pair;
};

/// Lower bound for the constant C3 in
///   |d^3J(u)(U, V, V)| <= C3 ||U||_{W^{2,2}} ||V||_{W^{1,2}} ||V||_{W^{o,r}}
/// from random smooth U and two populations of V (smooth, nodal noise).
PQEstimate estimate_pq_constant(const EnergyModel& model, const FEFunction& u, NormPair norm_pair, int samples,
                                std::uint64_t seed = 11);

struct RateEstimate {
  std::vector<std::pair<double, double>> levels;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<std::string> warnings;
};

/// Least-squares fit of log(error) against log(h). Non-positive errors are
/// dropped with a warning; fewer than three usable pairs or repeated h
/// values throw std::invalid_argument.
RateEstimate estimate_rate(const std::vector<std::pair<double, double>>& pairs);

}  // namespace nitsche
