#pragma once

#include <vector>

#include "nitsche/types.hpp"

namespace nitsche {

/// Quadrature on the reference simplex.
struct QuadRule {
  int dim = 1;
  std::vector<Point> points;
  std::vector<double> weights;
  int exactness_degree = 0;

  std::size_t size() const noexcept { return points.size(); }
};

/// Gauss-Legendre nodes and weights on [0,1].
QuadRule gauss_legendre(int num_points);

/// Rule on the reference simplex integrating polynomials of total degree
/// <= `degree` exactly. Gauss-Legendre for d = 1; for d = 2 a collapsed
/// (Duffy) tensor product of Gauss-Legendre rules, all weights positive.
QuadRule make_quad_rule(int dim, int degree);

/// The rule of the given degree applied on each of the 2^(d*levels)
/// sub-simplices obtained by `levels` uniform red refinements of the
/// reference simplex, with the same child ordering as `refine`.
QuadRule make_composite_rule(int dim, int degree, int levels);

/// |T| of the reference simplex.
double reference_measure(int dim);

/// Points of the uniform lattice {k / n} inside the closed reference
/// simplex; used for sup-norm sampling.
std::vector<Point> reference_lattice(int dim, int n);

}  // namespace nitsche
