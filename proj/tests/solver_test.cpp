#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fd_oracle.hpp"
#include "nitsche/assembly.hpp"
#include "nitsche/solver.hpp"

using namespace nitsche;
using nitsche::testing::random_function;
using nitsche::testing::zero_field;

namespace {

std::shared_ptr<const Mesh> unit(int dim, int cells) { return std::make_shared<const Mesh>(build_unit_mesh(dim, cells)); }

std::shared_ptr<const Mesh> refined(const std::shared_ptr<const Mesh>& m, int times) {
  auto r = m;
  for (int i = 0; i < times; ++i) r = std::make_shared<const Mesh>(refine(r));
  return r;
}

SparseOperator from_dense(const Eigen::MatrixXd& a) {
  SparseOperator::Matrix m = a.sparseView();
  return SparseOperator(m);
}

// Squared L2 distance between a coarse function and its fine representation,
// sampled at the fine quadrature points.
double nested_distance_sq(const FEFunction& coarse, const FEFunction& fine) {
  const FESpace& fs = *fine.space;
  const QuadRule rule = make_quad_rule(fs.dim(), 8);
  double s = 0.0;
  for (std::size_t e = 0; e < fs.mesh().num_elements(); ++e) {
    const ElementMap& fmap = fs.element_map(e);
    const int ce = fs.mesh().ancestor_element(e, coarse.space->mesh());
    const ElementMap& cmap = coarse.space->element_map(ce);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point x = fmap.to_physical(rule.points[q]);
      const double d = evaluate(fine, e, rule.points[q]).value - evaluate(coarse, ce, cmap.to_reference(x)).value;
      s += rule.weights[q] / std::abs(fmap.det) * d * d;
    }
  }
  return s;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("linear solve") {
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(6, -1.0, 2.0);
    CHECK((linear_solve(from_dense(Eigen::MatrixXd::Identity(6, 6)), b).x - b).norm() < 1e-15);
    CHECK(linear_solve(from_dense(Eigen::MatrixXd::Identity(6, 6)), Eigen::VectorXd::Zero(6)).x.norm() == 0.0);

    std::mt19937_64 rng(41);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd g(50, 50);
    for (int i = 0; i < 50; ++i)
      for (int j = 0; j < 50; ++j) g(i, j) = n(rng);
    const Eigen::MatrixXd a = g * g.transpose() + 50 * Eigen::MatrixXd::Identity(50, 50);
    Eigen::VectorXd rhs(50);
    for (int i = 0; i < 50; ++i) rhs[i] = n(rng);
    const LinearSolveResult r = linear_solve(from_dense(a), rhs);
    CHECK((a * r.x - rhs).norm() / rhs.norm() <= 1e-12);
    CHECK(r.relative_residual <= 1e-12);

    CHECK_THROWS_AS(linear_solve(from_dense(a), rhs, 1e-14, 1), SolverError);
  }

  TEST_CASE("discrete Poisson solve recovers the sine") {
    double prev = 0.0;
    for (int cells : {8, 16, 32}) {
      const SpacePtr s = make_space(unit(1, cells), 1, zero_field);
      const SparseOperator k = assemble_hessian(*dirichlet_potential_model(zero_potential()), FEFunction(s));
      const FEFunction f = interpolate(s, [](const Point& x) {
        return std::numbers::pi * std::numbers::pi * std::sin(std::numbers::pi * x[0]);
      });
      Eigen::VectorXd b = assemble_gram_l2(*s).apply(f.coeffs);
      mask_boundary(*s, b);
      const FEFunction u(s, linear_solve(k, b).x);
      const double err = norms(u, interpolate(s, [](const Point& x) { return std::sin(std::numbers::pi * x[0]); })).l2;
      if (prev > 0.0) CHECK(std::log2(prev / err) == doctest::Approx(2.0).epsilon(0.05));
      prev = err;
    }
  }

  TEST_CASE("quadratic energies converge in one Newton step") {
    const ManufacturedProblem p = make_problem("linear", 2);
    const SpacePtr s = make_space(unit(2, 4), 2, p.boundary_fn);
    const MinimizeResult r = minimize(*p.model, s);
    CHECK(r.log.converged);
    CHECK(r.log.newton_steps() == 1);
    NewtonOptions from_exact;
    from_exact.initial_guess = InitialGuess::interpolant_of_exact;
    const MinimizeResult r2 = minimize(*p.model, s, from_exact, {p.exact.value, {}});
    CHECK(r2.log.newton_steps() <= 1);
    CHECK((r.u.coeffs - r2.u.coeffs).lpNorm<Eigen::Infinity>() < 1e-11);
  }

  TEST_CASE("quartic Newton from zero") {
    const ManufacturedProblem p = make_problem("quartic", 1);
    const SpacePtr s = make_space(unit(1, 16), 1, p.boundary_fn);
    const MinimizeResult r = minimize(*p.model, s);
    CHECK(r.log.converged);
    CHECK(r.log.newton_steps() <= 6);
    CHECK(assemble_residual(*p.model, r.u).lpNorm<Eigen::Infinity>() < 1e-12);
    for (std::size_t i = 1; i < r.log.iterations.size(); ++i) {
      CHECK(r.log.iterations[i].energy <= r.log.iterations[i - 1].energy + 1e-14);
    }
    const FEFunction ui = interpolate(s, p.exact.value);
    CHECK(total_energy(*p.model, r.u) <= total_energy(*p.model, ui) + 1e-12);

    std::mt19937_64 rng(42);
    for (int k = 0; k < 5; ++k) {
      FEFunction w = random_function(s, rng, 1e-3);
      mask_boundary(*s, w.coeffs);
      CHECK(total_energy(*p.model, r.u) <= total_energy(*p.model, r.u + w) + 1e-14);
    }

    NewtonOptions capped;
    capped.max_iters = 1;
    CHECK_THROWS_AS(minimize(*p.model, s, capped), SolverError);
  }

  TEST_CASE("every built-in problem converges with and without damping") {
    for (const std::string& name : problem_names()) {
      const ManufacturedProblem p = make_problem(name, 2);
      const SpacePtr s = make_space(unit(2, 4), 2, p.boundary_fn);
      for (Damping d : {Damping::armijo, Damping::none}) {
        NewtonOptions o;
        o.damping = d;
        const MinimizeResult r = minimize(*p.model, s, o);
        CHECK(r.log.converged);
        CHECK(r.log.iterations.back().residual_norm < 1e-12);
      }
    }
  }

  TEST_CASE("prolongation is exact") {
    std::mt19937_64 rng(43);
    for (int dim : {1, 2}) {
      auto coarse_mesh = unit(dim, 2);
      for (int m : {1, 2, 3}) {
        const SpacePtr coarse = make_space(coarse_mesh, m, zero_field);
        for (int levels : {0, 1, 2}) {
          for (int fine_order = m; fine_order <= 3; ++fine_order) {
            const SpacePtr fine = make_space(refined(coarse_mesh, levels), fine_order, zero_field);
            const FEFunction c = interpolate(coarse, [](const Point&) { return 0.75; });
            CHECK((prolong(c, fine).coeffs.array() - 0.75).abs().maxCoeff() < 1e-14);
            const FEFunction f = random_function(coarse, rng, 1.0, false);
            CHECK(nested_distance_sq(f, prolong(f, fine)) < 1e-26);
          }
        }
      }
    }
    const SpacePtr p2 = make_space(unit(1, 4), 2, zero_field);
    const SpacePtr p1_fine = make_space(refined(unit(1, 4), 1), 1, zero_field);
    CHECK_THROWS_AS(prolongation_matrix(*p2, *p1_fine), std::invalid_argument);
  }

  TEST_CASE("energy is invariant under prolongation") {
    std::mt19937_64 rng(44);
    for (const std::string& name : problem_names()) {
      const ManufacturedProblem p = make_problem(name, 2);
      auto mesh = unit(2, 3);
      const SpacePtr coarse = make_space(mesh, 2, p.boundary_fn);
      const SpacePtr fine = make_space(refined(mesh, 1), 2, p.boundary_fn);
      const FEFunction f = random_function(coarse, rng, 0.5);
      AssemblyOptions matched;
      matched.quad_degree = fine->default_quad_degree();
      matched.quad_subdivisions = 1;
      CHECK(total_energy(*p.model, f, matched) ==
            doctest::Approx(total_energy(*p.model, prolong(f, fine))).epsilon(1e-12));
    }
  }
}
