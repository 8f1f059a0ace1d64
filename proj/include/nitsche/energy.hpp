#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nitsche/types.hpp"

namespace nitsche {

/// Pointwise argument (p, z, x) of a Lagrangian L(p, z, x): p is the
/// gradient, z the value, x the position.
struct State {
  SmallVector p;
  double z = 0.0;
  Point x;
};

/// Which third-order blocks vanish identically by construction.
struct StructureFlags {
  bool ppp_zero = false;
  bool ppz_zero = false;
};

enum class Classification { linear, semilinear, quasilinear };

std::string to_string(Classification c);

/// Scalar Lagrangian L(p, z, x) with analytic partial derivatives through
/// third order. Third-order blocks are exposed as contractions with the
/// given gradient directions:
///   d3L_ppp(a, b, c) = sum_ijk d^3L/dp_i dp_j dp_k a_i b_j c_k
///   d3L_ppz(a, b)    = sum_ij  d^3L/dp_i dp_j dz a_i b_j
///   d3L_pzz          = d^3L/dp dz^2 (a d-vector)
///   d3L_zzz          = d^3L/dz^3
///
/// Built-in models have no explicit x-dependence in dL/dp.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;

  virtual double eval(const State& s) const = 0;
  virtual SmallVector dL_dp(const State& s) const = 0;
  virtual double dL_dz(const State& s) const = 0;
  virtual SmallMatrix d2L_dpp(const State& s) const = 0;
  virtual SmallVector d2L_dpz(const State& s) const = 0;
  virtual double d2L_dzz(const State& s) const = 0;
  virtual double d3L_ppp(const State& s, const SmallVector& a, const SmallVector& b,
                         const SmallVector& c) const = 0;
  virtual double d3L_ppz(const State& s, const SmallVector& a, const SmallVector& b) const = 0;
  virtual SmallVector d3L_pzz(const State& s) const = 0;
  virtual double d3L_zzz(const State& s) const = 0;

  virtual StructureFlags flags() const = 0;
  virtual std::string description() const = 0;
};

using ModelPtr = std::shared_ptr<const EnergyModel>;

/// A potential psi(z) with its first three derivatives.
struct Potential {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::function<double(double)> d3;
  std::string formula;
};

Potential zero_potential();
/// psi(z) = z^4 / 4
Potential quartic_potential();
/// psi(z) = cos z
Potential cosine_potential();

/// L(p, z, x) = |p|^2 / 2 + psi(z) - f(x) z.
ModelPtr dirichlet_potential_model(Potential psi, ScalarField forcing = {});

/// L(p, z, x) = sqrt(1 + |p|^2) - f(x) z.
ModelPtr minimal_surface_model(ScalarField forcing = {});

/// Samples 100 random states and directions and reports which third-order
/// blocks vanish (|value| < 1e-12 everywhere).
Classification classify(const EnergyModel& model, int dim = 2, std::uint64_t seed = 7);

/// Model together with a smooth exact minimizer; the forcing is chosen so
/// that exact.value satisfies the Euler-Lagrange equation
/// -div dL/dp(Du, u, x) + dL/dz(Du, u, x) = 0.
struct ManufacturedProblem {
  std::string name;
  /// Euler-Lagrange equation in strong form.
  std::string equation;
  int dim = 1;
  ModelPtr model;
  SmoothFunction exact;
  ScalarField boundary_fn;
};

enum class PsiChoice { quartic, cosine };

/// u(x) = prod_i sin(pi x_i) for
///   -lap u + psi'(u) = f.
ManufacturedProblem manufactured_semilinear(int dim, PsiChoice psi);
/// psi = 0: the Poisson problem -lap u = f with the same u.
ManufacturedProblem manufactured_linear(int dim);
/// -div(Du / sqrt(1 + |Du|^2)) = f with the same u.
ManufacturedProblem manufactured_minimal_surface(int dim);

/// Built-in problems by name: linear, quartic, cosine, minimal_surface.
ManufacturedProblem make_problem(const std::string& name, int dim);
const std::vector<std::string>& problem_names();

/// The sine-product u(x) = prod_i sin(pi x_i) on (0,1)^dim.
SmoothFunction sine_product(int dim);

/// Pointwise Euler-Lagrange residual of the exact solution, from analytic
/// derivatives of u and L.
double el_residual(const ManufacturedProblem& problem, const Point& x);

}  // namespace nitsche
