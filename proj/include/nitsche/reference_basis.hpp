#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "nitsche/types.hpp"

namespace nitsche {

/// Basis values and reference-coordinate derivatives at one point.
struct BasisTabulation {
  Eigen::VectorXd values;            // n
  Eigen::MatrixXd gradients;         // n x d
  std::vector<SmallMatrix> hessians; // n entries, d x d
};

/// Lagrange basis of order m on the reference simplex.
///
/// Nodes sit at the barycentric lattice points alpha / m with |alpha| = m;
/// vertex nodes come first, then edge nodes, then interior nodes. Basis
/// functions are products of one-dimensional Lagrange factors in the
/// barycentric coordinates.
class ReferenceBasis {
 public:
  static constexpr int max_order = 3;

  ReferenceBasis(int dim, int order);

  int dim() const noexcept { return dim_; }
  int order() const noexcept { return order_; }
  int size() const noexcept { return static_cast<int>(indices_.size()); }

  /// Barycentric multi-index of node i (entries 0..dim used).
  const std::array<int, 3>& multi_index(int i) const { return indices_[i]; }
  Point node(int i) const;

  BasisTabulation tabulate(const Point& ref) const;

 private:
  int dim_;
  int order_;
  std::vector<std::array<int, 3>> indices_;
};

}  // namespace nitsche
