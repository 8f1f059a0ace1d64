#include "nitsche/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>

#include <Eigen/LU>

#include "nitsche/format.hpp"

namespace nitsche {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

Point make_point(int dim) { return Point::Zero(dim); }

}  // namespace

Mesh::Mesh(int dim, std::vector<Point> vertices, std::vector<Simplex> elements,
           std::vector<BoundaryFacet> boundary_facets)
    : dim_(dim),
      vertices_(std::move(vertices)),
      elements_(std::move(elements)),
      boundary_(std::move(boundary_facets)) {
  if (dim_ != 1 && dim_ != 2) throw std::invalid_argument("mesh dimension must be 1 or 2");
  const int n = static_cast<int>(vertices_.size());
  for (const auto& v : vertices_) {
    if (v.size() != dim_) throw MeshError("vertex coordinate has wrong dimension");
  }
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    for (int k = 0; k <= dim_; ++k) {
      if (elements_[e][k] < 0 || elements_[e][k] >= n) {
        throw MeshError("element " + std::to_string(e) + " has vertex index out of range");
      }
    }
    if (dim_ == 1) elements_[e][2] = -1;
    if (!(element_measure(e) > 0.0)) {
      throw MeshError("element " + std::to_string(e) + " is degenerate");
    }
  }
  for (auto& facet : boundary_) {
    for (int k = 0; k < dim_; ++k) {
      if (facet.vertices[k] < 0 || facet.vertices[k] >= n) {
        throw MeshError("boundary facet has vertex index out of range");
      }
    }
    if (dim_ == 1) facet.vertices[1] = -1;
  }
}

ElementMap Mesh::element_map(std::size_t e) const {
  const auto& s = elements_[e];
  ElementMap map;
  map.element_id = static_cast<int>(e);
  map.origin = vertices_[s[0]];
  map.inverse_jacobian.resize(dim_, dim_);
  for (int k = 0; k < dim_; ++k) {
    map.inverse_jacobian.col(k) = vertices_[s[k + 1]] - vertices_[s[0]];
  }
  const double inv_det = map.inverse_jacobian.determinant();
  if (inv_det == 0.0) throw MeshError("element " + std::to_string(e) + " is degenerate");
  map.jacobian = map.inverse_jacobian.inverse();
  map.det = 1.0 / inv_det;
  map.offset = -map.jacobian * map.origin;
  return map;
}

double Mesh::element_measure(std::size_t e) const {
  const auto& s = elements_[e];
  if (dim_ == 1) return std::abs(vertices_[s[1]][0] - vertices_[s[0]][0]);
  const Point a = vertices_[s[1]] - vertices_[s[0]];
  const Point b = vertices_[s[2]] - vertices_[s[0]];
  return 0.5 * std::abs(a[0] * b[1] - a[1] * b[0]);
}

bool Mesh::descends_from(const Mesh& ancestor) const {
  for (const Mesh* m = this; m != nullptr; m = m->parent_.get()) {
    if (m == &ancestor) return true;
  }
  return false;
}

int Mesh::ancestor_element(std::size_t e, const Mesh& ancestor) const {
  int element = static_cast<int>(e);
  for (const Mesh* m = this; m != &ancestor; m = m->parent_.get()) {
    if (m == nullptr) throw std::invalid_argument("mesh does not descend from the given ancestor");
    element = m->parent_elements_[element];
  }
  return element;
}

Mesh build_unit_mesh(int dim, int cells_per_side) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("build_unit_mesh: dim must be 1 or 2");
  if (cells_per_side < 1) throw std::invalid_argument("build_unit_mesh: cells_per_side must be >= 1");
  const int n = cells_per_side;
  std::vector<Point> vertices;
  std::vector<Simplex> elements;
  std::vector<BoundaryFacet> boundary;

  if (dim == 1) {
    for (int i = 0; i <= n; ++i) {
      Point p = make_point(1);
      p[0] = static_cast<double>(i) / n;
      vertices.push_back(p);
    }
    for (int i = 0; i < n; ++i) elements.push_back({i, i + 1, -1});
    boundary.push_back({{0, -1}, 1});
    boundary.push_back({{n, -1}, 2});
    return Mesh(1, std::move(vertices), std::move(elements), std::move(boundary));
  }

  const auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      Point p = make_point(2);
      p << static_cast<double>(i) / n, static_cast<double>(j) / n;
      vertices.push_back(p);
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  for (int i = 0; i < n; ++i) boundary.push_back({{id(i, 0), id(i + 1, 0)}, 1});
  for (int j = 0; j < n; ++j) boundary.push_back({{id(n, j), id(n, j + 1)}, 2});
  for (int i = n; i > 0; --i) boundary.push_back({{id(i, n), id(i - 1, n)}, 3});
  for (int j = n; j > 0; --j) boundary.push_back({{id(0, j), id(0, j - 1)}, 4});
  return Mesh(2, std::move(vertices), std::move(elements), std::move(boundary));
}

Mesh refine(const std::shared_ptr<const Mesh>& coarse) {
  if (!coarse) throw std::invalid_argument("refine: null mesh");
  const int dim = coarse->dim();
  std::vector<Point> vertices = coarse->vertices();
  std::vector<Simplex> elements;
  std::vector<BoundaryFacet> boundary;
  std::vector<int> parents;

  std::unordered_map<std::uint64_t, int> midpoints;
  const auto midpoint = [&](int a, int b) {
    const auto [it, inserted] = midpoints.try_emplace(edge_key(a, b), static_cast<int>(vertices.size()));
    if (inserted) vertices.push_back(0.5 * (coarse->vertex(a) + coarse->vertex(b)));
    return it->second;
  };

  const int children = dim == 1 ? 2 : 4;
  elements.reserve(coarse->num_elements() * children);
  parents.reserve(coarse->num_elements() * children);
  for (std::size_t e = 0; e < coarse->num_elements(); ++e) {
    const auto s = coarse->element(e);
    if (dim == 1) {
      const int m = midpoint(s[0], s[1]);
      elements.push_back({s[0], m, -1});
      elements.push_back({m, s[1], -1});
    } else {
      const int ab = midpoint(s[0], s[1]);
      const int bc = midpoint(s[1], s[2]);
      const int ca = midpoint(s[2], s[0]);
      elements.push_back({s[0], ab, ca});
      elements.push_back({ab, s[1], bc});
      elements.push_back({ca, bc, s[2]});
      elements.push_back({ab, bc, ca});
    }
    parents.insert(parents.end(), children, static_cast<int>(e));
  }
  for (const auto& facet : coarse->boundary_facets()) {
    if (dim == 1) {
      boundary.push_back(facet);
    } else {
      const int m = midpoint(facet.vertices[0], facet.vertices[1]);
      boundary.push_back({{facet.vertices[0], m}, facet.marker});
      boundary.push_back({{m, facet.vertices[1]}, facet.marker});
    }
  }

  Mesh fine(dim, std::move(vertices), std::move(elements), std::move(boundary));
  fine.level_ = coarse->level() + 1;
  fine.parent_ = coarse;
  fine.parent_elements_ = std::move(parents);
  return fine;
}

double width(const Mesh& mesh) {
  double h = 0.0;
  const int nv = mesh.vertices_per_element();
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto s = mesh.element(e);
    for (int a = 0; a < nv; ++a) {
      for (int b = a + 1; b < nv; ++b) {
        h = std::max(h, (mesh.vertex(s[a]) - mesh.vertex(s[b])).norm());
      }
    }
  }
  return h;
}

namespace {

bool conforming_1d(const Mesh& mesh) {
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto s = mesh.element(e);
    order.emplace_back(std::min(mesh.vertex(s[0])[0], mesh.vertex(s[1])[0]), e);
  }
  std::sort(order.begin(), order.end());
  const auto left = [&](std::size_t e) {
    const auto s = mesh.element(e);
    return mesh.vertex(s[0])[0] < mesh.vertex(s[1])[0] ? s[0] : s[1];
  };
  const auto right = [&](std::size_t e) {
    const auto s = mesh.element(e);
    return mesh.vertex(s[0])[0] < mesh.vertex(s[1])[0] ? s[1] : s[0];
  };
  std::set<int> ends;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k + 1 < order.size()) {
      const std::size_t e = order[k].second;
      const std::size_t f = order[k + 1].second;
      // Neighbours either share a vertex or leave a gap (a second component).
      if (right(e) != left(f) && mesh.vertex(right(e))[0] > mesh.vertex(left(f))[0]) return false;
      if (right(e) != left(f)) {
        ends.insert(right(e));
        ends.insert(left(f));
      }
    }
  }
  if (!order.empty()) {
    ends.insert(left(order.front().second));
    ends.insert(right(order.back().second));
  }
  std::set<int> facets;
  for (const auto& facet : mesh.boundary_facets()) facets.insert(facet.vertices[0]);
  return facets == ends;
}

double orient(const Point& a, const Point& b, const Point& c) {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

bool conforming_2d(const Mesh& mesh) {
  std::unordered_map<std::uint64_t, int> edge_count;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto s = mesh.element(e);
    for (int k = 0; k < 3; ++k) ++edge_count[edge_key(s[k], s[(k + 1) % 3])];
  }
  std::set<std::uint64_t> single;
  for (const auto& [key, count] : edge_count) {
    if (count > 2) return false;
    if (count == 1) single.insert(key);
  }
  std::set<std::uint64_t> facets;
  for (const auto& facet : mesh.boundary_facets()) {
    facets.insert(edge_key(facet.vertices[0], facet.vertices[1]));
  }
  if (single != facets) return false;

  // Bucket elements on a uniform grid over the bounding box and test every
  // vertex against the elements sharing its bucket.
  Point lo = mesh.vertex(0), hi = mesh.vertex(0);
  for (const auto& v : mesh.vertices()) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const int nb = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.num_elements()))));
  const double span = std::max((hi - lo).maxCoeff(), 1e-300);
  const double tol = 1e-12 * span;
  const auto bucket = [&](double x, double l) {
    return std::clamp(static_cast<int>((x - l) / span * nb), 0, nb - 1);
  };
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(nb) * nb);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto s = mesh.element(e);
    Point elo = mesh.vertex(s[0]), ehi = mesh.vertex(s[0]);
    for (int k = 1; k < 3; ++k) {
      elo = elo.cwiseMin(mesh.vertex(s[k]));
      ehi = ehi.cwiseMax(mesh.vertex(s[k]));
    }
    for (int j = bucket(elo[1] - tol, lo[1]); j <= bucket(ehi[1] + tol, lo[1]); ++j) {
      for (int i = bucket(elo[0] - tol, lo[0]); i <= bucket(ehi[0] + tol, lo[0]); ++i) {
        buckets[j * nb + i].push_back(static_cast<int>(e));
      }
    }
  }
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    const Point& p = mesh.vertex(v);
    for (int e : buckets[bucket(p[1], lo[1]) * nb + bucket(p[0], lo[0])]) {
      const auto s = mesh.element(e);
      if (s[0] == static_cast<int>(v) || s[1] == static_cast<int>(v) || s[2] == static_cast<int>(v)) continue;
      const double area = orient(mesh.vertex(s[0]), mesh.vertex(s[1]), mesh.vertex(s[2]));
      const double sign = area > 0 ? 1.0 : -1.0;
      bool inside = true;
      for (int k = 0; k < 3 && inside; ++k) {
        const double o = sign * orient(mesh.vertex(s[k]), mesh.vertex(s[(k + 1) % 3]), p);
        inside = o > -tol * span;
      }
      if (inside) return false;
    }
  }
  return true;
}

}  // namespace

bool is_conforming(const Mesh& mesh) {
  return mesh.dim() == 1 ? conforming_1d(mesh) : conforming_2d(mesh);
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  for (const auto& v : mesh.vertices()) {
    out << 'v';
    for (int k = 0; k < mesh.dim(); ++k) out << ' ' << format_double(v[k]);
    out << '\n';
  }
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    out << 'e';
    for (int i : mesh.element(e)) out << ' ' << i;
    out << '\n';
  }
  for (const auto& facet : mesh.boundary_facets()) {
    out << 'b';
    for (int k = 0; k < mesh.dim(); ++k) out << ' ' << facet.vertices[k];
    out << ' ' << facet.marker << '\n';
  }
}

Mesh read_mesh(std::istream& in) {
  std::vector<std::vector<std::string>> v_lines, e_lines, b_lines;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream tokens(line);
    std::string tag;
    if (!(tokens >> tag)) continue;
    std::vector<std::string> fields;
    for (std::string f; tokens >> f;) fields.push_back(f);
    if (tag == "v") v_lines.push_back(std::move(fields));
    else if (tag == "e") e_lines.push_back(std::move(fields));
    else if (tag == "b") b_lines.push_back(std::move(fields));
    else throw MeshError("mesh dump: unknown record '" + tag + "'");
  }
  if (v_lines.empty()) throw MeshError("mesh dump: no vertices");
  const int dim = static_cast<int>(v_lines.front().size());
  if (dim != 1 && dim != 2) throw MeshError("mesh dump: vertices must have 1 or 2 coordinates");

  const auto parse_double = [](const std::string& s) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw MeshError("mesh dump: bad number '" + s + "'");
    return value;
  };
  const auto parse_int = [](const std::string& s) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw MeshError("mesh dump: bad index '" + s + "'");
    return value;
  };

  std::vector<Point> vertices;
  for (const auto& f : v_lines) {
    if (static_cast<int>(f.size()) != dim) throw MeshError("mesh dump: inconsistent vertex dimension");
    Point p(dim);
    for (int k = 0; k < dim; ++k) p[k] = parse_double(f[k]);
    vertices.push_back(p);
  }
  std::vector<Simplex> elements;
  for (const auto& f : e_lines) {
    if (static_cast<int>(f.size()) != dim + 1) throw MeshError("mesh dump: element arity mismatch");
    Simplex s{-1, -1, -1};
    for (int k = 0; k <= dim; ++k) s[k] = parse_int(f[k]);
    elements.push_back(s);
  }
  std::vector<BoundaryFacet> boundary;
  for (const auto& f : b_lines) {
    if (static_cast<int>(f.size()) != dim + 1) throw MeshError("mesh dump: boundary facet arity mismatch");
    BoundaryFacet facet;
    for (int k = 0; k < dim; ++k) facet.vertices[k] = parse_int(f[k]);
    facet.marker = parse_int(f[dim]);
    boundary.push_back(facet);
  }
  return Mesh(dim, std::move(vertices), std::move(elements), std::move(boundary));
}

}  // namespace nitsche
