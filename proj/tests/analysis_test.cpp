#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fd_oracle.hpp"
#include "nitsche/analysis.hpp"
#include "nitsche/assembly.hpp"
#include "nitsche/solver.hpp"

using namespace nitsche;
using nitsche::testing::zero_field;

namespace {

std::shared_ptr<const Mesh> unit(int dim, int cells) { return std::make_shared<const Mesh>(build_unit_mesh(dim, cells)); }

std::shared_ptr<const Mesh> refined(const std::shared_ptr<const Mesh>& m, int times) {
  auto r = m;
  for (int i = 0; i < times; ++i) r = std::make_shared<const Mesh>(refine(r));
  return r;
}

// Generalized eigenvalue k of (stiffness, mass + stiffness) for uniform P1 on
// (0,1) with n cells; eigenvectors are sin(k pi x_j).
double p1_eigenvalue(int k, int n) {
  const double h = 1.0 / n, c = std::cos(k * std::numbers::pi * h);
  const double stiff = 2.0 / h * (1.0 - c), mass = h / 3.0 * (2.0 + c);
  return stiff / (mass + stiff);
}

struct NestedPair {
  FEFunction fine;
  FEFunction coarse;
};

// Coarse and reference solutions computed with identical quadrature points.
NestedPair nested_solutions(const ManufacturedProblem& p, int dim, int cells, int m, const NewtonOptions& base = {}) {
  auto mesh = unit(dim, cells);
  const SpacePtr ref = make_space(refined(mesh, 2), std::max(m, 2), p.boundary_fn);
  const FEFunction fine = minimize(*p.model, ref).u;
  NewtonOptions matched = base;
  matched.assembly.quad_degree = ref->default_quad_degree();
  matched.assembly.quad_subdivisions = 2;
  const FEFunction coarse = minimize(*p.model, make_space(mesh, m, p.boundary_fn), matched).u;
  return {fine, coarse};
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("ellipticity of the Dirichlet form matches closed-form eigenvalues") {
    const ModelPtr zero = dirichlet_potential_model(zero_potential());
    const ModelPtr quartic = dirichlet_potential_model(quartic_potential());
    double first_min = 0.0, first_max = 0.0;
    for (int n : {8, 16, 32}) {
      const SpacePtr s = make_space(unit(1, n), 1, zero_field);
      const EllipticityEstimate e = estimate_ellipticity(*zero, FEFunction(s));
      CHECK(e.lambda_min == doctest::Approx(p1_eigenvalue(1, n)).epsilon(1e-6));
      CHECK(e.lambda_max == doctest::Approx(p1_eigenvalue(n - 1, n)).epsilon(1e-6));
      const EllipticityEstimate q = estimate_ellipticity(*quartic, FEFunction(s));
      CHECK(std::abs(q.lambda_min - e.lambda_min) < 1e-10);
      CHECK(std::abs(q.lambda_max - e.lambda_max) < 1e-10);
      if (n == 8) {
        first_min = e.lambda_min;
        first_max = e.lambda_max;
      }
      CHECK(std::abs(e.lambda_min / first_min - 1) < 0.05);
      CHECK(std::abs(e.lambda_max / first_max - 1) < 0.10);
    }
    // Poincare: lambda_min tends to pi^2 / (1 + pi^2).
    const double pi2 = std::numbers::pi * std::numbers::pi;
    CHECK(p1_eigenvalue(1, 1024) == doctest::Approx(pi2 / (1 + pi2)).epsilon(1e-5));
  }

  TEST_CASE("ellipticity in two dimensions") {
    const ManufacturedProblem p = make_problem("cosine", 2);
    const SpacePtr s = make_space(unit(2, 8), 2, p.boundary_fn);
    const FEFunction u = minimize(*p.model, s).u;
    const EllipticityEstimate e = estimate_ellipticity(*p.model, u);
    CHECK(e.lambda_min > 0.0);
    CHECK(e.lambda_min <= e.lambda_max);
    CHECK(e.lambda_max < 1.5);
  }

  TEST_CASE("Galerkin defect") {
    SUBCASE("quadratic energy") {
      const ManufacturedProblem p = make_problem("linear", 1);
      const NestedPair n = nested_solutions(p, 1, 8, 1);
      for (int t : {1, 2, 5}) CHECK(galerkin_defect(*p.model, n.fine, n.coarse, t) < 1e-10);
    }
    SUBCASE("quartic: the t-integrand is quadratic") {
      const ManufacturedProblem p = make_problem("quartic", 2);
      const NestedPair n = nested_solutions(p, 2, 4, 1);
      const double two = galerkin_defect(*p.model, n.fine, n.coarse, 2);
      const double five = galerkin_defect(*p.model, n.fine, n.coarse, 5);
      CHECK(two < 10 * 2e-12);
      CHECK(std::abs(two - five) < 1e-13);
    }
    SUBCASE("an unconverged coarse solution is detected") {
      const ManufacturedProblem p = make_problem("quartic", 1);
      auto mesh = unit(1, 8);
      const SpacePtr ref = make_space(refined(mesh, 2), 2, p.boundary_fn);
      const FEFunction fine = minimize(*p.model, ref).u;
      const SpacePtr coarse = make_space(mesh, 1, p.boundary_fn);
      FEFunction rough = minimize(*p.model, coarse).u;
      std::mt19937_64 rng(51);
      std::uniform_real_distribution<double> u(-1e-3, 1e-3);
      for (int i = 0; i < rough.coeffs.size(); ++i)
        if (!coarse->is_boundary(i)) rough.coeffs[i] += u(rng);
      AssemblyOptions matched;
      matched.quad_degree = ref->default_quad_degree();
      matched.quad_subdivisions = 2;
      const double scale = assemble_residual(*p.model, rough, matched).lpNorm<Eigen::Infinity>();
      const double defect = galerkin_defect(*p.model, fine, rough, 5);
      CHECK(defect > 1e-6);
      CHECK(defect == doctest::Approx(scale).epsilon(1e-6));
    }
  }

  TEST_CASE("adjoint solve") {
    const ModelPtr zero = dirichlet_potential_model(zero_potential());
    const SpacePtr s = make_space(unit(1, 8), 2, zero_field);
    CHECK(solve_adjoint(*zero, FEFunction(s), FEFunction(s)).coeffs.norm() == 0.0);

    // -W'' = -sin(pi x) with zero boundary values: W = -sin(pi x) / pi^2.
    const auto sine = [](const Point& x) { return std::sin(std::numbers::pi * x[0]); };
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double prev = 0.0;
    for (int n : {4, 8, 16}) {
      const SpacePtr sp = make_space(unit(1, n), 2, zero_field);
      const FEFunction w = solve_adjoint(*zero, FEFunction(sp), interpolate(sp, sine));
      const FEFunction oracle = interpolate(sp, [&](const Point& x) { return -sine(x) / pi2; });
      const double err = norms(w, oracle).l2;
      CHECK(err < 5e-4);
      if (prev > 0.0) CHECK(std::log2(prev / err) > 1.9);
      prev = err;
    }
    CHECK_THROWS_AS(solve_adjoint(*zero, FEFunction(make_space(unit(1, 4), 1, zero_field)),
                                  FEFunction(make_space(unit(1, 4), 1, zero_field))),
                    std::invalid_argument);
  }

  TEST_CASE("H2 regularity ratio") {
    const ModelPtr zero = dirichlet_potential_model(zero_potential());
    const auto bump = [](const Point& x) { return x[0] * (1 - x[0]) * std::exp(x[0]); };
    double first = 0.0;
    for (int n : {8, 16, 32}) {
      const SpacePtr s = make_space(unit(1, n), 2, zero_field);
      const FEFunction rhs = interpolate(s, bump);
      const FEFunction w = solve_adjoint(*zero, FEFunction(s), rhs);
      const double r = h2_regularity_ratio(w, rhs);
      const FEFunction w10 = solve_adjoint(*zero, FEFunction(s), 10.0 * rhs);
      CHECK(h2_regularity_ratio(w10, 10.0 * rhs) == doctest::Approx(r).epsilon(1e-12));
      if (first == 0.0) first = r;
      CHECK(std::abs(r / first - 1) < 0.10);
    }
    const SpacePtr s = make_space(unit(1, 4), 2, zero_field);
    CHECK_THROWS_AS(h2_regularity_ratio(FEFunction(s), FEFunction(s)), std::invalid_argument);
  }

  TEST_CASE("Aubin-Nitsche identity residual shrinks with the reference") {
    const ManufacturedProblem p = make_problem("quartic", 1);
    auto mesh = unit(1, 8);
    const FEFunction uh = minimize(*p.model, make_space(mesh, 1, p.boundary_fn)).u;
    double prev = 1.0;
    for (int extra : {1, 2, 3}) {
      const SpacePtr ref = make_space(refined(mesh, extra), 2, p.boundary_fn);
      const FEFunction uref = minimize(*p.model, ref).u;
      const FEFunction w = solve_adjoint(*p.model, uref, prolong(uh, ref) - uref);
      const DualityIdentity id = aubin_nitsche_identity(*p.model, p.exact, uh, uref, w);
      CHECK(id.l2_error_sq > 0.0);
      CHECK(id.relative_residual < prev);
      prev = id.relative_residual;
    }
    CHECK(prev < 0.01);
  }

  TEST_CASE("predominant quadraticity constant") {
    const ManufacturedProblem lin = make_problem("linear", 1);
    const SpacePtr s = make_space(unit(1, 8), 2, lin.boundary_fn);
    CHECK(estimate_pq_constant(*lin.model, interpolate(s, lin.exact.value), {1, 2.0}, 5).max_ratio == 0.0);
    CHECK_THROWS_AS(estimate_pq_constant(*lin.model, FEFunction(make_space(unit(1, 8), 1, zero_field)), {1, 2.0}, 3),
                    std::invalid_argument);

    const ManufacturedProblem q = make_problem("quartic", 1);
    std::vector<double> ratios;
    auto mesh = unit(1, 8);
    for (int level = 0; level < 3; ++level) {
      const SpacePtr sp = make_space(mesh, 2, q.boundary_fn);
      ratios.push_back(estimate_pq_constant(*q.model, minimize(*q.model, sp).u, {1, 2.0}, 10).max_ratio);
      mesh = std::make_shared<const Mesh>(refine(mesh));
    }
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    CHECK(*lo > 0.0);
    CHECK(*hi / *lo < 2.0);

    const ManufacturedProblem ms = make_problem("minimal_surface", 2);
    const SpacePtr sp = make_space(unit(2, 4), 2, ms.boundary_fn);
    const PQEstimate e = estimate_pq_constant(*ms.model, minimize(*ms.model, sp).u, {0, 2.0}, 4);
    CHECK(std::isfinite(e.max_ratio_rough));
    CHECK(e.max_ratio_rough > 0.0);
    CHECK(e.max_ratio == std::max(e.max_ratio_rough, e.max_ratio_smooth));
  }

  TEST_CASE("rate estimation") {
    std::vector<std::pair<double, double>> exact, noisy;
    std::mt19937_64 rng(52);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (int k = 0; k < 5; ++k) {
      const double h = std::pow(0.5, k + 3);
      exact.emplace_back(h, 3.0 * h * h);
      noisy.emplace_back(h, 3.0 * h * h * (1 + u(rng)));
    }
    const RateEstimate e = estimate_rate(exact);
    CHECK(std::abs(e.slope - 2.0) < 1e-12);
    CHECK(e.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    const RateEstimate n = estimate_rate(noisy);
    CHECK(n.slope >= 1.9);
    CHECK(n.slope <= 2.1);

    auto dup = exact;
    dup[1].first = dup[0].first;
    CHECK_THROWS_AS(estimate_rate(dup), std::invalid_argument);
    auto zero = exact;
    zero[4].second = 0.0;
    const RateEstimate z = estimate_rate(zero);
    CHECK(z.levels.size() == 4);
    CHECK(z.warnings.size() == 1);
    CHECK_THROWS_AS(estimate_rate({exact[0], exact[1]}), std::invalid_argument);
  }
}
