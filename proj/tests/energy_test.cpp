#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "fd_oracle.hpp"
#include "nitsche/assembly.hpp"
#include "nitsche/energy.hpp"

using namespace nitsche;
using nitsche::testing::central_difference;
using nitsche::testing::random_vector;
using nitsche::testing::relative_error;

namespace {

State random_state(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), x01(0.0, 1.0);
  State s;
  s.p = random_vector(dim, rng, 1.5);
  s.z = u(rng);
  s.x = SmallVector(dim);
  for (int i = 0; i < dim; ++i) s.x[i] = x01(rng);
  return s;
}

State shifted(const State& s, const SmallVector& dp, double dz, double t) {
  return State{s.p + t * dp, s.z + t * dz, s.x};
}

}  // namespace

TEST_SUITE("energy") {
  TEST_CASE("potential derivatives") {
    const Potential q = quartic_potential();
    for (double z : {-1.3, -0.2, 0.0, 0.7, 2.1}) {
      CHECK(q.d2(z) == doctest::Approx(3 * z * z).epsilon(1e-15));
      CHECK(q.d3(z) == doctest::Approx(6 * z).epsilon(1e-15));
      for (const Potential& p : {quartic_potential(), cosine_potential()}) {
        CHECK(std::abs(central_difference([&](double t) { return p.value(z + t); }, 1e-3) - p.d1(z)) < 1e-6);
        CHECK(std::abs(central_difference([&](double t) { return p.d1(z + t); }, 1e-3) - p.d2(z)) < 1e-6);
        CHECK(std::abs(central_difference([&](double t) { return p.d2(z + t); }, 1e-3) - p.d3(z)) < 1e-6);
      }
    }
  }

  TEST_CASE("density derivatives agree with finite differences") {
    std::mt19937_64 rng(21);
    for (const std::string& name : problem_names()) {
      for (int dim : {1, 2}) {
        const ManufacturedProblem prob = make_problem(name, dim);
        const EnergyModel& L = *prob.model;
        for (int k = 0; k < 100; ++k) {
          const State s = random_state(dim, rng);
          const SmallVector a = random_vector(dim, rng), b = random_vector(dim, rng), c = random_vector(dim, rng);
          const double h = 1e-3;
          // first order
          const double dl = central_difference([&](double t) { return L.eval(shifted(s, a, 0.7, t)); }, h);
          CHECK(relative_error(dl, L.dL_dp(s).dot(a) + 0.7 * L.dL_dz(s)) < 1e-5);
          // second order: directional derivative of the gradient
          const double d2 = central_difference(
              [&](double t) {
                const State st = shifted(s, b, 0.3, t);
                return L.dL_dp(st).dot(a) + 0.5 * L.dL_dz(st);
              },
              h);
          const double d2_exact = a.dot(L.d2L_dpp(s) * b) + 0.3 * a.dot(L.d2L_dpz(s)) +
                                  0.5 * b.dot(L.d2L_dpz(s)) + 0.15 * L.d2L_dzz(s);
          CHECK(relative_error(d2, d2_exact) < 1e-5);
          // third order
          const double d3 = central_difference(
              [&](double t) {
                const State st = shifted(s, c, 0.0, t);
                return a.dot(L.d2L_dpp(st) * b);
              },
              h);
          CHECK(relative_error(d3, L.d3L_ppp(s, a, b, c)) < 1e-5);
          const double d3z = central_difference(
              [&](double t) {
                const State st = shifted(s, SmallVector::Zero(dim), 1.0, t);
                return a.dot(L.d2L_dpp(st) * b);
              },
              h);
          CHECK(relative_error(d3z, L.d3L_ppz(s, a, b)) < 1e-5);
          const SmallVector pzz = central_difference(
              [&](double t) { return Eigen::VectorXd(L.d2L_dpz(shifted(s, SmallVector::Zero(dim), 1.0, t))); }, h);
          CHECK(relative_error(Eigen::VectorXd(pzz), Eigen::VectorXd(L.d3L_pzz(s))) < 1e-5);
          const double zzz =
              central_difference([&](double t) { return L.d2L_dzz(shifted(s, SmallVector::Zero(dim), 1.0, t)); }, h);
          CHECK(relative_error(zzz, L.d3L_zzz(s)) < 1e-5);
        }
      }
    }
  }

  TEST_CASE("minimal surface density") {
    const ModelPtr ms = minimal_surface_model();
    State flat{SmallVector::Zero(2), 0.0, SmallVector::Zero(2)};
    CHECK(ms->eval(flat) == doctest::Approx(1.0));
    CHECK((ms->d2L_dpp(flat) - SmallMatrix::Identity(2, 2)).norm() < 1e-15);

    std::mt19937_64 rng(4);
    for (int k = 0; k < 20; ++k) {
      State s{random_vector(2, rng, 2.0), 0.0, SmallVector::Zero(2)};
      const double w = 1.0 + s.p.squaredNorm();
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(Eigen::Matrix2d(ms->d2L_dpp(s)));
      CHECK(eig.eigenvalues()[0] == doctest::Approx(std::pow(w, -1.5)).epsilon(1e-12));
      CHECK(eig.eigenvalues()[1] == doctest::Approx(1.0 / std::sqrt(w)).epsilon(1e-12));
    }
  }

  TEST_CASE("classification") {
    CHECK(classify(*dirichlet_potential_model(zero_potential())) == Classification::linear);
    CHECK(classify(*dirichlet_potential_model(quartic_potential())) == Classification::semilinear);
    CHECK(classify(*dirichlet_potential_model(cosine_potential())) == Classification::semilinear);
    CHECK(classify(*minimal_surface_model()) == Classification::quasilinear);
    CHECK(classify(*minimal_surface_model(), 1) == Classification::quasilinear);
    CHECK(to_string(Classification::semilinear) == "semilinear");

    const ModelPtr zero = dirichlet_potential_model(zero_potential());
    std::mt19937_64 rng(2);
    const State s = random_state(2, rng);
    const SmallVector a = random_vector(2, rng);
    CHECK(zero->d3L_ppp(s, a, a, a) == 0.0);
    CHECK(zero->d3L_ppz(s, a, a) == 0.0);
    CHECK(zero->d3L_zzz(s) == 0.0);
    CHECK(zero->d3L_pzz(s).norm() == 0.0);
  }

  TEST_CASE("manufactured problems satisfy their equations") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const std::string& name : problem_names()) {
      for (int dim : {1, 2}) {
        const ManufacturedProblem p = make_problem(name, dim);
        CHECK(p.name == name);
        CHECK(p.dim == dim);
        for (int k = 0; k < 50; ++k) {
          Point x(dim);
          for (int i = 0; i < dim; ++i) x[i] = u(rng);
          CHECK(std::abs(el_residual(p, x)) < 1e-10);
        }
        Point corner = Point::Zero(dim);
        CHECK(std::abs(p.boundary_fn(corner)) < 1e-15);
        if (dim == 2) {
          Point edge(2);
          edge << 0.3, 1.0;
          CHECK(std::abs(p.boundary_fn(edge)) < 1e-15);
        }
      }
    }
    // d = 1 quartic forcing: pi^2 sin(pi x) + sin(pi x)^3.
    const ManufacturedProblem q = make_problem("quartic", 1);
    for (double xv : {0.1, 0.37, 0.5, 0.81}) {
      const double sx = std::sin(std::numbers::pi * xv);
      State s{SmallVector::Zero(1), 0.0, Point::Constant(1, xv)};
      CHECK(-q.model->dL_dz(s) == doctest::Approx(std::numbers::pi * std::numbers::pi * sx + sx * sx * sx).epsilon(1e-13));
    }
    CHECK_THROWS_AS(make_problem("nope", 1), std::invalid_argument);
    CHECK_THROWS_AS(make_problem("linear", 3), std::invalid_argument);
  }

  TEST_CASE("energy of the exact solution") {
    // int 1/2 |u'|^2 - f u = pi^2/4 - pi^2/2 for u = sin(pi x), f = pi^2 sin(pi x).
    const ManufacturedProblem p = make_problem("linear", 1);
    auto mesh = std::make_shared<const Mesh>(build_unit_mesh(1, 64));
    const SpacePtr s = make_space(mesh, 3, p.boundary_fn);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    CHECK(total_energy(*p.model, p.exact, *s) == doctest::Approx(-pi2 / 4).epsilon(1e-12));
  }
}
