#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "nitsche/types.hpp"

namespace nitsche {

/// Vertex indices of an interval (2 used) or triangle (3 used).
using Simplex = std::array<int, 3>;

/// A boundary point (d = 1) or boundary edge (d = 2).
struct BoundaryFacet {
  std::array<int, 2> vertices{-1, -1};
  int marker = 0;
};

/// Affine map F_h from a physical simplex T_h onto the reference simplex T.
///
/// The reference simplex is [0,1] for d = 1 and conv{(0,0), (1,0), (0,1)}
/// for d = 2. `jacobian` is DF_h, so F_h(x) = jacobian * x + offset and
/// |T_h| = |T| / |det|.
struct ElementMap {
  int element_id = -1;
  SmallMatrix jacobian;
  SmallVector offset;
  double det = 0.0;
  /// DF_h^{-1}; columns are the element edge vectors leaving vertex 0.
  SmallMatrix inverse_jacobian;
  Point origin;

  Point to_physical(const Point& ref) const { return origin + inverse_jacobian * ref; }
  Point to_reference(const Point& x) const { return jacobian * x + offset; }
};

/// Conforming simplicial mesh of a domain in R^1 or R^2.
///
/// Immutable after construction. A refined mesh keeps a handle to the mesh it
/// was refined from, and records for each of its elements the coarse element
/// containing it.
class Mesh {
 public:
  /// Throws MeshError on out-of-range indices or degenerate elements.
  Mesh(int dim, std::vector<Point> vertices, std::vector<Simplex> elements,
       std::vector<BoundaryFacet> boundary_facets);

  int dim() const noexcept { return dim_; }
  int vertices_per_element() const noexcept { return dim_ + 1; }
  std::size_t num_vertices() const noexcept { return vertices_.size(); }
  std::size_t num_elements() const noexcept { return elements_.size(); }

  const Point& vertex(std::size_t i) const { return vertices_[i]; }
  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  std::span<const int> element(std::size_t e) const {
    return {elements_[e].data(), static_cast<std::size_t>(dim_ + 1)};
  }
  const std::vector<BoundaryFacet>& boundary_facets() const noexcept { return boundary_; }

  int level() const noexcept { return level_; }
  const std::shared_ptr<const Mesh>& parent() const noexcept { return parent_; }
  /// Index of the element of parent() that contains element `e`.
  int parent_element(std::size_t e) const { return parent_elements_[e]; }

  ElementMap element_map(std::size_t e) const;
  double element_measure(std::size_t e) const;

  /// True when `ancestor` is this mesh or one of its refinement predecessors.
  bool descends_from(const Mesh& ancestor) const;
  /// Element of `ancestor` containing element `e` of this mesh.
  int ancestor_element(std::size_t e, const Mesh& ancestor) const;

 private:
  friend Mesh refine(const std::shared_ptr<const Mesh>& coarse);

  int dim_;
  std::vector<Point> vertices_;
  std::vector<Simplex> elements_;
  std::vector<BoundaryFacet> boundary_;
  int level_ = 0;
  std::shared_ptr<const Mesh> parent_;
  std::vector<int> parent_elements_;
};

/// Uniform mesh of (0,1)^dim. In 2-D every square is cut along the same
/// diagonal. Boundary markers: 1 = x_min / bottom, 2 = x_max / right,
/// 3 = top, 4 = left.
Mesh build_unit_mesh(int dim, int cells_per_side);

/// Uniform red refinement: intervals are bisected, triangles split into
/// four congruent children. Child elements of coarse element e are numbered
/// 2^d * e ... 2^d * e + 2^d - 1.
Mesh refine(const std::shared_ptr<const Mesh>& coarse);

/// Longest edge over all elements.
double width(const Mesh& mesh);

/// Checks that element closures meet in common faces: no interior edge is
/// shared by more than two elements, edges owned by a single element are
/// exactly the boundary facets, and no vertex lies inside another element or
/// on the interior of an edge it does not span.
bool is_conforming(const Mesh& mesh);

/// Plain-text mesh dump: `v x [y]`, `e i0 i1 [i2]`, `b i0 [i1] marker`.
/// Floats are written in shortest round-trip form.
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);

}  // namespace nitsche
