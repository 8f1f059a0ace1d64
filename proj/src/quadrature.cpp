#include "nitsche/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nitsche/mesh.hpp"

namespace nitsche {

QuadRule gauss_legendre(int num_points) {
  if (num_points < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
  const int n = num_points;
  QuadRule rule;
  rule.dim = 1;
  rule.exactness_degree = 2 * n - 1;
  rule.points.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n for the roots in (-1, 1), mapped to [0, 1].
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 1.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i] = Point::Constant(1, 0.5 * (1.0 - x));
    rule.points[n - 1 - i] = Point::Constant(1, 0.5 * (1.0 + x));
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

QuadRule make_quad_rule(int dim, int degree) {
  if (degree < 0) throw std::invalid_argument("make_quad_rule: negative degree");
  if (dim == 1) {
    QuadRule rule = gauss_legendre(degree / 2 + 1);
    rule.exactness_degree = std::max(rule.exactness_degree, degree);
    return rule;
  }
  if (dim != 2) throw std::invalid_argument("make_quad_rule: dim must be 1 or 2");
  // (u, v) -> (u, v (1 - u)); the Jacobian (1 - u) raises the degree in u by one.
  const QuadRule gu = gauss_legendre((degree + 2 + 1) / 2);
  const QuadRule gv = gauss_legendre((degree + 1 + 1) / 2);
  QuadRule rule;
  rule.dim = 2;
  rule.exactness_degree = degree;
  for (std::size_t i = 0; i < gu.size(); ++i) {
    const double u = gu.points[i][0];
    for (std::size_t j = 0; j < gv.size(); ++j) {
      const double v = gv.points[j][0];
      Point p(2);
      p << u, v * (1.0 - u);
      rule.points.push_back(p);
      rule.weights.push_back(gu.weights[i] * gv.weights[j] * (1.0 - u));
    }
  }
  return rule;
}

QuadRule make_composite_rule(int dim, int degree, int levels) {
  const QuadRule base = make_quad_rule(dim, degree);
  if (levels <= 0) return base;

  std::vector<Point> vertices;
  std::vector<Simplex> elements;
  std::vector<BoundaryFacet> boundary;
  if (dim == 1) {
    vertices = {Point::Constant(1, 0.0), Point::Constant(1, 1.0)};
    elements = {{0, 1, -1}};
    boundary = {{{0, -1}, 1}, {{1, -1}, 2}};
  } else {
    Point a(2), b(2), c(2);
    a << 0.0, 0.0;
    b << 1.0, 0.0;
    c << 0.0, 1.0;
    vertices = {a, b, c};
    elements = {{0, 1, 2}};
    boundary = {{{0, 1}, 1}, {{1, 2}, 1}, {{2, 0}, 1}};
  }
  auto mesh = std::make_shared<const Mesh>(dim, vertices, elements, boundary);
  for (int l = 0; l < levels; ++l) mesh = std::make_shared<const Mesh>(refine(mesh));

  QuadRule rule;
  rule.dim = dim;
  rule.exactness_degree = base.exactness_degree;
  const double total = reference_measure(dim);
  for (std::size_t e = 0; e < mesh->num_elements(); ++e) {
    const ElementMap map = mesh->element_map(e);
    const double scale = mesh->element_measure(e) / total;
    for (std::size_t q = 0; q < base.size(); ++q) {
      rule.points.push_back(map.to_physical(base.points[q]));
      rule.weights.push_back(base.weights[q] * scale);
    }
  }
  return rule;
}

double reference_measure(int dim) { return dim == 1 ? 1.0 : 0.5; }

std::vector<Point> reference_lattice(int dim, int n) {
  std::vector<Point> points;
  if (dim == 1) {
    for (int i = 0; i <= n; ++i) points.push_back(Point::Constant(1, static_cast<double>(i) / n));
    return points;
  }
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i + j <= n; ++i) {
      Point p(2);
      p << static_cast<double>(i) / n, static_cast<double>(j) / n;
      points.push_back(p);
    }
  }
  return points;
}

}  // namespace nitsche
