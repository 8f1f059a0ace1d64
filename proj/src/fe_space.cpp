#include "nitsche/fe_space.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace nitsche {

namespace {

// A Lagrange node is identified globally by the mesh vertices it depends on
// and their barycentric weights, which neighbouring elements agree on.
using NodeKey = std::array<std::pair<int, int>, 3>;

NodeKey node_key(std::span<const int> vertices, const std::array<int, 3>& alpha, int nb) {
  NodeKey key;
  key.fill({-1, 0});
  int n = 0;
  for (int k = 0; k < nb; ++k) {
    if (alpha[k] > 0) key[n++] = {vertices[k], alpha[k]};
  }
  std::sort(key.begin(), key.begin() + n);
  return key;
}

}  // namespace

FESpace::FESpace(std::shared_ptr<const Mesh> mesh, int order, ScalarField boundary_fn)
    : mesh_(std::move(mesh)), basis_(mesh_ ? mesh_->dim() : 1, order), boundary_fn_(std::move(boundary_fn)) {
  if (!mesh_) throw std::invalid_argument("FESpace: null mesh");
  if (!boundary_fn_) boundary_fn_ = [](const Point&) { return 0.0; };
  const Mesh& m = *mesh_;
  const int nb = m.vertices_per_element();
  const int nloc = basis_.size();

  std::set<int> boundary_vertices;
  std::set<std::pair<int, int>> boundary_edges;
  for (const auto& facet : m.boundary_facets()) {
    boundary_vertices.insert(facet.vertices[0]);
    if (m.dim() == 2) {
      boundary_vertices.insert(facet.vertices[1]);
      boundary_edges.insert(std::minmax(facet.vertices[0], facet.vertices[1]));
    }
  }

  std::map<NodeKey, int> numbering;
  elem_dofs_.reserve(m.num_elements() * nloc);
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    const auto verts = m.element(e);
    for (int i = 0; i < nloc; ++i) {
      const auto& alpha = basis_.multi_index(i);
      const NodeKey key = node_key(verts, alpha, nb);
      const auto [it, inserted] = numbering.try_emplace(key, static_cast<int>(dof_coords_.size()));
      if (inserted) {
        Point x = Point::Zero(m.dim());
        for (int k = 0; k < nb; ++k) x += (static_cast<double>(alpha[k]) / order) * m.vertex(verts[k]);
        dof_coords_.push_back(x);
        const int support = static_cast<int>(std::count_if(key.begin(), key.end(), [](const auto& p) { return p.first >= 0; }));
        bool on_boundary = false;
        if (support == 1) on_boundary = boundary_vertices.count(key[0].first) > 0;
        else if (support == 2 && m.dim() == 2) on_boundary = boundary_edges.count({key[0].first, key[1].first}) > 0;
        boundary_mask_.push_back(on_boundary ? 1 : 0);
      }
      elem_dofs_.push_back(it->second);
    }
  }

  boundary_values_ = Eigen::VectorXd::Zero(num_dofs());
  for (int i = 0; i < num_dofs(); ++i) {
    if (boundary_mask_[i]) {
      boundary_dofs_.push_back(i);
      boundary_values_[i] = boundary_fn_(dof_coords_[i]);
    }
  }
  maps_.reserve(m.num_elements());
  for (std::size_t e = 0; e < m.num_elements(); ++e) maps_.push_back(m.element_map(e));
  width_ = nitsche::width(m);
}

SpacePtr make_space(std::shared_ptr<const Mesh> mesh, int order, ScalarField boundary_fn) {
  return std::make_shared<const FESpace>(std::move(mesh), order, std::move(boundary_fn));
}

FEFunction::FEFunction(SpacePtr s) : space(std::move(s)) {
  if (!space) throw std::invalid_argument("FEFunction: null space");
  coeffs = Eigen::VectorXd::Zero(space->num_dofs());
}

FEFunction::FEFunction(SpacePtr s, Eigen::VectorXd c) : space(std::move(s)), coeffs(std::move(c)) {
  if (!space) throw std::invalid_argument("FEFunction: null space");
  if (coeffs.size() != space->num_dofs()) {
    throw std::invalid_argument("FEFunction: coefficient count " + std::to_string(coeffs.size()) +
                                " does not match space dimension " + std::to_string(space->num_dofs()));
  }
}

namespace {
void require_same_space(const FEFunction& a, const FEFunction& b) {
  if (a.space != b.space) throw std::invalid_argument("FE functions live on different spaces");
}
}  // namespace

FEFunction operator+(const FEFunction& a, const FEFunction& b) {
  require_same_space(a, b);
  return FEFunction(a.space, a.coeffs + b.coeffs);
}

FEFunction operator-(const FEFunction& a, const FEFunction& b) {
  require_same_space(a, b);
  return FEFunction(a.space, a.coeffs - b.coeffs);
}

FEFunction operator*(double s, const FEFunction& a) { return FEFunction(a.space, s * a.coeffs); }

FEFunction boundary_lift(const SpacePtr& space) { return FEFunction(space, space->boundary_values()); }

FEFunction interpolate(const SpacePtr& space, const ScalarField& g) {
  FEFunction f(space);
  for (int i = 0; i < space->num_dofs(); ++i) {
    const double v = g(space->dof_coord(i));
    if (!std::isfinite(v)) throw std::domain_error("interpolate: non-finite value at dof " + std::to_string(i));
    f.coeffs[i] = v;
  }
  return f;
}

std::vector<BasisTabulation> tabulate(const ReferenceBasis& basis, const std::vector<Point>& points) {
  std::vector<BasisTabulation> tabs;
  tabs.reserve(points.size());
  for (const auto& p : points) tabs.push_back(basis.tabulate(p));
  return tabs;
}

Eigen::MatrixXd physical_gradients(const BasisTabulation& tab, const ElementMap& map) {
  return tab.gradients * map.jacobian;
}

PointValue evaluate(const FEFunction& f, std::size_t element, const Point& ref_point) {
  const FESpace& space = *f.space;
  const BasisTabulation tab = space.basis().tabulate(ref_point);
  const auto dofs = space.element_dofs(element);
  const Eigen::MatrixXd grads = physical_gradients(tab, space.element_map(element));
  PointValue out;
  out.gradient = SmallVector::Zero(space.dim());
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    out.value += f.coeffs[dofs[i]] * tab.values[i];
    out.gradient += f.coeffs[dofs[i]] * grads.row(i).transpose();
  }
  return out;
}

SmallMatrix evaluate_hessian(const FEFunction& f, std::size_t element, const Point& ref_point) {
  const FESpace& space = *f.space;
  const BasisTabulation tab = space.basis().tabulate(ref_point);
  const auto dofs = space.element_dofs(element);
  const SmallMatrix& a = space.element_map(element).jacobian;
  SmallMatrix ref = SmallMatrix::Zero(space.dim(), space.dim());
  for (std::size_t i = 0; i < dofs.size(); ++i) ref += f.coeffs[dofs[i]] * tab.hessians[i];
  return a.transpose() * ref * a;
}

namespace {

struct InverseEstimateTables {
  QuadRule rule;
  std::vector<BasisTabulation> quad_tabs;
  std::vector<BasisTabulation> lattice_tabs;

  explicit InverseEstimateTables(const FESpace& space)
      : rule(make_quad_rule(space.dim(), 2 * space.order())),
        quad_tabs(tabulate(space.basis(), rule.points)),
        lattice_tabs(tabulate(space.basis(), reference_lattice(space.dim(), space.dim() == 1 ? 20 : 16))) {}
};

double max_element_ratio(const FESpace& space, const InverseEstimateTables& t, const Eigen::VectorXd& v) {
  const double scale = std::pow(space.width(), -0.5 * space.dim());
  double max_ratio = 0.0;
  for (std::size_t e = 0; e < space.mesh().num_elements(); ++e) {
    const ElementMap& map = space.element_map(e);
    const auto dofs = space.element_dofs(e);
    Eigen::VectorXd local(dofs.size());
    for (std::size_t i = 0; i < dofs.size(); ++i) local[i] = v[dofs[i]];

    double w12_sq = 0.0;
    const double jac = 1.0 / std::abs(map.det);
    for (std::size_t q = 0; q < t.rule.size(); ++q) {
      const double value = t.quad_tabs[q].values.dot(local);
      const SmallVector grad = physical_gradients(t.quad_tabs[q], map).transpose() * local;
      w12_sq += t.rule.weights[q] * jac * (value * value + grad.squaredNorm());
    }
    double w1inf = 0.0;
    for (const auto& tab : t.lattice_tabs) {
      const double value = tab.values.dot(local);
      const SmallVector grad = physical_gradients(tab, map).transpose() * local;
      w1inf = std::max({w1inf, std::abs(value), grad.norm()});
    }
    if (w12_sq > 0.0) max_ratio = std::max(max_ratio, w1inf / (scale * std::sqrt(w12_sq)));
  }
  return max_ratio;
}

}  // namespace

double inverse_estimate_ratio(const FEFunction& v) {
  return max_element_ratio(*v.space, InverseEstimateTables(*v.space), v.coeffs);
}

double check_inverse_estimate(const FESpace& space, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("check_inverse_estimate: trials must be >= 1");
  const InverseEstimateTables tables(space);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  Eigen::VectorXd v(space.num_dofs());
  double max_ratio = 0.0;
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < v.size(); ++i) v[i] = coeff(rng);
    max_ratio = std::max(max_ratio, max_element_ratio(space, tables, v));
  }
  return max_ratio;
}

}  // namespace nitsche
