#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "nitsche/mesh.hpp"
#include "nitsche/quadrature.hpp"
#include "nitsche/reference_basis.hpp"
#include "nitsche/types.hpp"

namespace nitsche {

/// Continuous Lagrange space of order m on a mesh, with Dirichlet data
/// represented exactly at the boundary nodes.
class FESpace {
 public:
  FESpace(std::shared_ptr<const Mesh> mesh, int order, ScalarField boundary_fn);

  const Mesh& mesh() const noexcept { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const noexcept { return mesh_; }
  int dim() const noexcept { return mesh_->dim(); }
  int order() const noexcept { return basis_.order(); }
  const ReferenceBasis& basis() const noexcept { return basis_; }

  int num_dofs() const noexcept { return static_cast<int>(dof_coords_.size()); }
  int dofs_per_element() const noexcept { return basis_.size(); }
  std::span<const int> element_dofs(std::size_t e) const {
    const auto n = static_cast<std::size_t>(basis_.size());
    return {elem_dofs_.data() + e * n, n};
  }
  const Point& dof_coord(int i) const { return dof_coords_[i]; }
  const std::vector<Point>& dof_coords() const noexcept { return dof_coords_; }

  bool is_boundary(int i) const { return boundary_mask_[i] != 0; }
  const std::vector<int>& boundary_dofs() const noexcept { return boundary_dofs_; }
  /// Prescribed values at boundary dofs; zero at interior dofs.
  const Eigen::VectorXd& boundary_values() const noexcept { return boundary_values_; }
  const ScalarField& boundary_function() const noexcept { return boundary_fn_; }

  const ElementMap& element_map(std::size_t e) const { return maps_[e]; }
  double width() const noexcept { return width_; }

  /// Quadrature degree used by default for this space: 2m + 2.
  int default_quad_degree() const noexcept { return 2 * order() + 2; }

 private:
  std::shared_ptr<const Mesh> mesh_;
  ReferenceBasis basis_;
  ScalarField boundary_fn_;
  std::vector<Point> dof_coords_;
  std::vector<int> elem_dofs_;
  std::vector<std::uint8_t> boundary_mask_;
  std::vector<int> boundary_dofs_;
  Eigen::VectorXd boundary_values_;
  std::vector<ElementMap> maps_;
  double width_ = 0.0;
};

using SpacePtr = std::shared_ptr<const FESpace>;

SpacePtr make_space(std::shared_ptr<const Mesh> mesh, int order, ScalarField boundary_fn);

/// Coefficient vector over an FESpace.
struct FEFunction {
  SpacePtr space;
  Eigen::VectorXd coeffs;

  FEFunction() = default;
  explicit FEFunction(SpacePtr s);
  FEFunction(SpacePtr s, Eigen::VectorXd c);
};

FEFunction operator+(const FEFunction& a, const FEFunction& b);
FEFunction operator-(const FEFunction& a, const FEFunction& b);
FEFunction operator*(double s, const FEFunction& a);

/// Zero at interior dofs, boundary data at boundary dofs.
FEFunction boundary_lift(const SpacePtr& space);

/// Nodal interpolant. Throws std::domain_error on a non-finite nodal value.
FEFunction interpolate(const SpacePtr& space, const ScalarField& g);

struct PointValue {
  double value = 0.0;
  SmallVector gradient;
};

/// Value and physical gradient at a reference point of an element.
PointValue evaluate(const FEFunction& f, std::size_t element, const Point& ref_point);
/// Physical Hessian at a reference point of an element.
SmallMatrix evaluate_hessian(const FEFunction& f, std::size_t element, const Point& ref_point);

/// Basis tabulations at every point of a rule.
std::vector<BasisTabulation> tabulate(const ReferenceBasis& basis, const std::vector<Point>& points);

/// Physical basis gradients (n x d) on an element from a reference tabulation.
Eigen::MatrixXd physical_gradients(const BasisTabulation& tab, const ElementMap& map);

/// max over elements T of ||v||_{W^{1,inf}(T)} / (h^{-d/2} ||v||_{W^{1,2}(T)}),
/// with the sup norm sampled on a reference lattice.
double inverse_estimate_ratio(const FEFunction& v);

/// Largest ratio ||v||_{W^{1,inf}(T)} / (h^{-d/2} ||v||_{W^{1,2}(T)}) over
/// all elements T and `trials` random discrete functions v.
double check_inverse_estimate(const FESpace& space, int trials, std::uint64_t seed = 1);

}  // namespace nitsche
