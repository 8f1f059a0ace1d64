#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "fd_oracle.hpp"
#include "nitsche/assembly.hpp"
#include "nitsche/solver.hpp"

using namespace nitsche;
using nitsche::testing::central_difference;
using nitsche::testing::random_function;
using nitsche::testing::relative_error;
using nitsche::testing::zero_field;

namespace {

std::shared_ptr<const Mesh> unit(int dim, int cells) { return std::make_shared<const Mesh>(build_unit_mesh(dim, cells)); }

Eigen::MatrixXd dense(const SparseOperator& a) { return Eigen::MatrixXd(a.matrix()); }

FEFunction constant(const SpacePtr& s, double c) { return interpolate(s, [c](const Point&) { return c; }); }

}  // namespace

TEST_SUITE("assembly") {
  TEST_CASE("quadratic energy with no load has zero residual at zero") {
    const ModelPtr zero = dirichlet_potential_model(zero_potential());
    const SpacePtr s = make_space(unit(2, 3), 2, zero_field);
    CHECK(assemble_residual(*zero, FEFunction(s)).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(total_energy(*zero, FEFunction(s)) == 0.0);
  }

  TEST_CASE("residual is the derivative of the energy") {
    std::mt19937_64 rng(31);
    for (const std::string& name : problem_names()) {
      for (int dim : {1, 2}) {
        const ManufacturedProblem p = make_problem(name, dim);
        const SpacePtr s = make_space(unit(dim, 3), 2, p.boundary_fn);
        const FEFunction v = random_function(s, rng, 0.8);
        const Eigen::VectorXd r = assemble_residual(*p.model, v);
        std::uniform_int_distribution<int> pick(0, s->num_dofs() - 1);
        for (int k = 0; k < 20; ++k) {
          const int i = pick(rng);
          if (s->is_boundary(i)) {
            CHECK(r[i] == 0.0);
            continue;
          }
          const double fd = central_difference(
              [&](double t) {
                FEFunction w = v;
                w.coeffs[i] += t;
                return total_energy(*p.model, w);
              },
              1e-3);
          CHECK(relative_error(fd, r[i], 1e-6) < 1e-6);
        }
      }
    }
  }

  TEST_CASE("Hessian is the derivative of the residual") {
    std::mt19937_64 rng(32);
    for (const std::string& name : problem_names()) {
      const ManufacturedProblem p = make_problem(name, 2);
      const SpacePtr s = make_space(unit(2, 3), 2, p.boundary_fn);
      const FEFunction v = random_function(s, rng, 0.8);
      FEFunction dir = random_function(s, rng, 1.0);
      mask_boundary(*s, dir.coeffs);
      const SparseOperator h = assemble_hessian(*p.model, v);
      CHECK(h.max_asymmetry() < 1e-12);
      const Eigen::VectorXd fd = central_difference(
          [&](double t) { return assemble_residual(*p.model, FEFunction(s, v.coeffs + t * dir.coeffs)); }, 1e-3);
      CHECK(relative_error(fd, h.apply(dir.coeffs)) < 1e-6);
      for (int i : s->boundary_dofs()) CHECK(h.matrix().coeff(i, i) == 1.0);
    }
  }

  TEST_CASE("P1 stiffness and mass by hand") {
    const SpacePtr s = make_space(unit(1, 4), 1, zero_field);
    const Eigen::MatrixXd k = dense(assemble_hessian(*dirichlet_potential_model(zero_potential()), FEFunction(s)));
    const Eigen::MatrixXd m = dense(assemble_gram_l2(*s));
    const double h = 0.25;
    for (int i = 1; i <= 3; ++i) {
      CHECK(k(i, i) == doctest::Approx(8.0).epsilon(1e-14));
      CHECK(m(i, i) == doctest::Approx(2 * h / 3).epsilon(1e-14));
      if (i < 3) {
        CHECK(k(i, i + 1) == doctest::Approx(-4.0).epsilon(1e-14));
        CHECK(m(i, i + 1) == doctest::Approx(h / 6).epsilon(1e-14));
      }
    }
    CHECK(k(1, 3) == 0.0);

    for (int dim : {1, 2}) {
      const SpacePtr q = make_space(unit(dim, 3), 3, zero_field);
      const Eigen::MatrixXd mm = dense(assemble_gram_l2(*q));
      const Eigen::VectorXd one = Eigen::VectorXd::Ones(q->num_dofs());
      CHECK(one.dot(mm * one) == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(mm).eigenvalues().minCoeff() > 0.0);
    }
  }

  TEST_CASE("quartic Hessian at zero equals the stiffness matrix") {
    const SpacePtr s = make_space(unit(2, 3), 2, zero_field);
    const Eigen::MatrixXd a = dense(assemble_hessian(*dirichlet_potential_model(quartic_potential()), FEFunction(s)));
    const Eigen::MatrixXd b = dense(assemble_hessian(*dirichlet_potential_model(zero_potential()), FEFunction(s)));
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("third variation") {
    const SpacePtr s1 = make_space(unit(1, 4), 2, zero_field);
    const FEFunction one = constant(s1, 1.0);
    CHECK(apply_third_variation(*dirichlet_potential_model(quartic_potential()), one, one, one, one) ==
          doctest::Approx(6.0).epsilon(1e-13));

    std::mt19937_64 rng(33);
    for (const std::string& name : problem_names()) {
      for (int dim : {1, 2}) {
        const ManufacturedProblem p = make_problem(name, dim);
        const SpacePtr s = make_space(unit(dim, 3), 2, p.boundary_fn);
        const FEFunction v = random_function(s, rng, 0.8);
        const FEFunction u = random_function(s, rng, 1.0, false);
        const FEFunction a = random_function(s, rng, 1.0, false);
        const FEFunction b = random_function(s, rng, 1.0, false);
        const double d3 = apply_third_variation(*p.model, v, u, a, b);
        if (name == "linear") {
          CHECK(d3 == 0.0);
          continue;
        }
        const double fd = central_difference(
            [&](double t) { return second_variation(*p.model, FEFunction(s, v.coeffs + t * u.coeffs), a, b); }, 1e-3);
        CHECK(relative_error(fd, d3, 1e-6) < 1e-5);
        CHECK(apply_third_variation(*p.model, v, a, u, b) == doctest::Approx(d3).epsilon(1e-12));
        CHECK(apply_third_variation(*p.model, v, b, a, u) == doctest::Approx(d3).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("norms") {
    const SmoothFunction lin{[](const Point& x) { return 1 + 2 * x[0] - x[1]; },
                             [](const Point&) { SmallVector g(2); g << 2, -1; return g; },
                             [](const Point&) { return SmallMatrix::Zero(2, 2).eval(); }};
    const SpacePtr s = make_space(unit(2, 3), 1, zero_field);
    NormOptions all;
    all.q = 4;
    const NormReport n = norms(lin, interpolate(s, lin.value), all);
    CHECK(n.l2 < 1e-13);
    CHECK(n.h1_semi < 1e-13);
    CHECK(n.w1q < 1e-13);
    CHECK(n.linf < 1e-13);
    CHECK(n.w1inf < 1e-13);

    const SmoothFunction sine{[](const Point& x) { return std::sin(std::numbers::pi * x[0]); },
                              [](const Point& x) { SmallVector g(1); g << std::numbers::pi * std::cos(std::numbers::pi * x[0]); return g; },
                              [](const Point& x) { SmallMatrix h(1, 1); h << -std::numbers::pi * std::numbers::pi * std::sin(std::numbers::pi * x[0]); return h; }};
    const SpacePtr f = make_space(unit(1, 64), 2, zero_field);
    const NormReport z = norms(sine, FEFunction(f));
    CHECK(z.l2 == doctest::Approx(std::sqrt(0.5)).epsilon(1e-8));
    CHECK(z.h1_semi == doctest::Approx(std::numbers::pi / std::sqrt(2.0)).epsilon(1e-8));
    CHECK(z.w1q == doctest::Approx(std::hypot(z.l2, z.h1_semi)).epsilon(1e-12));
    CHECK(z.linf == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(z.l1 == doctest::Approx(2 / std::numbers::pi).epsilon(1e-8));

    NormOptions h2;
    h2.include_broken_h2 = true;
    CHECK(norms(sine, FEFunction(f), h2).broken_h2 ==
          doctest::Approx(std::pow(std::numbers::pi, 2) / std::sqrt(2.0)).epsilon(1e-8));
    CHECK_THROWS_AS(norms(FEFunction(make_space(unit(1, 4), 1, zero_field)), h2), std::invalid_argument);

    const FEFunction g = interpolate(f, sine.value);
    CHECK(norms(g, g).l2 == 0.0);
  }

  TEST_CASE("assembly does not depend on the worker count") {
    const ManufacturedProblem p = make_problem("cosine", 2);
    const SpacePtr s = make_space(unit(2, 8), 2, p.boundary_fn);
    std::mt19937_64 rng(34);
    const FEFunction v = random_function(s, rng);
    setenv("NITSCHE_THREADS", "1", 1);
    const Eigen::VectorXd r1 = assemble_residual(*p.model, v);
    const SparseOperator h1 = assemble_hessian(*p.model, v);
    const double e1 = total_energy(*p.model, v);
    setenv("NITSCHE_THREADS", "3", 1);
    const Eigen::VectorXd r3 = assemble_residual(*p.model, v);
    const SparseOperator h3 = assemble_hessian(*p.model, v);
    const double e3 = total_energy(*p.model, v);
    unsetenv("NITSCHE_THREADS");
    CHECK((r1 - r3).cwiseAbs().maxCoeff() == 0.0);
    CHECK(Eigen::MatrixXd(h1.matrix() - h3.matrix()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(e1 == e3);
  }
}
