#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "nitsche/energy.hpp"
#include "nitsche/fe_space.hpp"

namespace nitsche {

/// Quadrature used for element integrals. A degree of 0 selects the space
/// default 2m + 2. `quad_subdivisions` > 0 applies the rule on uniformly
/// refined sub-simplices, which reproduces the quadrature points of a mesh
/// that many levels finer.
struct AssemblyOptions {
  int quad_degree = 0;
  int quad_subdivisions = 0;
};

/// Symmetric sparse operator in row-compressed storage.
class SparseOperator {
 public:
  using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  SparseOperator() = default;
  explicit SparseOperator(Matrix m) : matrix_(std::move(m)) {}

  int dim() const noexcept { return static_cast<int>(matrix_.rows()); }
  const Matrix& matrix() const noexcept { return matrix_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return matrix_ * x; }
  double max_asymmetry() const;

 private:
  Matrix matrix_;
};

/// J(v) = int L(Dv, v, x) dx.
double total_energy(const EnergyModel& model, const FEFunction& v, const AssemblyOptions& opts = {});

/// J evaluated on a smooth function by quadrature on the given space's mesh.
double total_energy(const EnergyModel& model, const SmoothFunction& u, const FESpace& space,
                    const AssemblyOptions& opts = {});

/// dJ(v)(phi_i) for every basis function; boundary entries are zero.
Eigen::VectorXd assemble_residual(const EnergyModel& model, const FEFunction& v, const AssemblyOptions& opts = {});

/// d^2J(v)(phi_i, phi_j) with boundary rows and columns replaced by the
/// identity.
SparseOperator assemble_hessian(const EnergyModel& model, const FEFunction& v, const AssemblyOptions& opts = {});

/// d^2J(v)(U, W) by quadrature, without boundary masking.
double second_variation(const EnergyModel& model, const FEFunction& v, const FEFunction& u, const FEFunction& w,
                        const AssemblyOptions& opts = {});

/// Selects third-order blocks of L entering d^3J.
struct BlockMask {
  bool ppp = true;
  bool ppz = true;
  bool pzz = true;
  bool zzz = true;
};

/// d^3J(v)(U, V, W); symmetric in (U, V, W).
double apply_third_variation(const EnergyModel& model, const FEFunction& v, const FEFunction& u,
                             const FEFunction& dv, const FEFunction& w, const BlockMask& mask = {},
                             const AssemblyOptions& opts = {});

/// L2 Gram (mass) matrix, no boundary masking.
SparseOperator assemble_gram_l2(const FESpace& space, const AssemblyOptions& opts = {});

/// Mass + stiffness with boundary rows and columns replaced by the identity.
SparseOperator assemble_gram_h1(const FESpace& space, const AssemblyOptions& opts = {});

/// Zeroes entries at boundary dofs.
void mask_boundary(const FESpace& space, Eigen::VectorXd& v);

/// Element-wise (broken) norms of a difference f - g.
struct NormReport {
  double l1 = 0.0;
  double l2 = 0.0;
  double h1_semi = 0.0;
  double q = 2.0;
  double lq = 0.0;
  double w1q = 0.0;
  double broken_h2 = 0.0;
  double linf = 0.0;
  double w1inf = 0.0;
};

struct NormOptions {
  /// Exponent of the W^{1,q} norm; infinity selects the sup norm.
  double q = 2.0;
  bool include_broken_h2 = false;
  int quad_degree = 0;
};

/// Norms of exact - g. Sup norms are sampled on a per-element lattice.
NormReport norms(const SmoothFunction& exact, const FEFunction& g, const NormOptions& opts = {});
/// Norms of f - g (same space).
NormReport norms(const FEFunction& f, const FEFunction& g, const NormOptions& opts = {});
/// Norms of g itself.
NormReport norms(const FEFunction& g, const NormOptions& opts = {});

}  // namespace nitsche
