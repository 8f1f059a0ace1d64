#include "nitsche/energy.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace nitsche {

std::string to_string(Classification c) {
  switch (c) {
    case Classification::linear: return "linear";
    case Classification::semilinear: return "semilinear";
    case Classification::quasilinear: return "quasilinear";
  }
  return "unknown";
}

Potential zero_potential() {
  const auto zero = [](double) { return 0.0; };
  return {zero, zero, zero, zero, "0"};
}

Potential quartic_potential() {
  return {[](double z) { return 0.25 * z * z * z * z; }, [](double z) { return z * z * z; },
          [](double z) { return 3.0 * z * z; }, [](double z) { return 6.0 * z; }, "z^4/4"};
}

Potential cosine_potential() {
  return {[](double z) { return std::cos(z); }, [](double z) { return -std::sin(z); },
          [](double z) { return -std::cos(z); }, [](double z) { return std::sin(z); }, "cos z"};
}

namespace {

double forcing_at(const ScalarField& f, const Point& x) { return f ? f(x) : 0.0; }

class DirichletPotentialModel final : public EnergyModel {
 public:
  DirichletPotentialModel(Potential psi, ScalarField f) : psi_(std::move(psi)), f_(std::move(f)) {}

  double eval(const State& s) const override {
    return 0.5 * s.p.squaredNorm() + psi_.value(s.z) - forcing_at(f_, s.x) * s.z;
  }
  SmallVector dL_dp(const State& s) const override { return s.p; }
  double dL_dz(const State& s) const override { return psi_.d1(s.z) - forcing_at(f_, s.x); }
  SmallMatrix d2L_dpp(const State& s) const override { return SmallMatrix::Identity(s.p.size(), s.p.size()); }
  SmallVector d2L_dpz(const State& s) const override { return SmallVector::Zero(s.p.size()); }
  double d2L_dzz(const State& s) const override { return psi_.d2(s.z); }
  double d3L_ppp(const State&, const SmallVector&, const SmallVector&, const SmallVector&) const override {
    return 0.0;
  }
  double d3L_ppz(const State&, const SmallVector&, const SmallVector&) const override { return 0.0; }
  SmallVector d3L_pzz(const State& s) const override { return SmallVector::Zero(s.p.size()); }
  double d3L_zzz(const State& s) const override { return psi_.d3(s.z); }

  StructureFlags flags() const override { return {true, true}; }
  std::string description() const override {
    return psi_.formula == "0" ? "|p|^2/2 - f z" : "|p|^2/2 + " + psi_.formula + " - f z";
  }

 private:
  Potential psi_;
  ScalarField f_;
};

class MinimalSurfaceModel final : public EnergyModel {
 public:
  explicit MinimalSurfaceModel(ScalarField f) : f_(std::move(f)) {}

  double eval(const State& s) const override {
    return std::sqrt(1.0 + s.p.squaredNorm()) - forcing_at(f_, s.x) * s.z;
  }
  SmallVector dL_dp(const State& s) const override { return s.p / std::sqrt(1.0 + s.p.squaredNorm()); }
  double dL_dz(const State& s) const override { return -forcing_at(f_, s.x); }
  SmallMatrix d2L_dpp(const State& s) const override {
    const double w = 1.0 + s.p.squaredNorm();
    const auto n = s.p.size();
    return (SmallMatrix::Identity(n, n) - s.p * s.p.transpose() / w) / std::sqrt(w);
  }
  SmallVector d2L_dpz(const State& s) const override { return SmallVector::Zero(s.p.size()); }
  double d2L_dzz(const State&) const override { return 0.0; }
  double d3L_ppp(const State& s, const SmallVector& a, const SmallVector& b,
                 const SmallVector& c) const override {
    const double w = 1.0 + s.p.squaredNorm();
    const double root = std::sqrt(w);
    const double pa = s.p.dot(a), pb = s.p.dot(b), pc = s.p.dot(c);
    return -(a.dot(b) * pc + a.dot(c) * pb + b.dot(c) * pa) / (w * root) +
           3.0 * pa * pb * pc / (w * w * root);
  }
  double d3L_ppz(const State&, const SmallVector&, const SmallVector&) const override { return 0.0; }
  SmallVector d3L_pzz(const State& s) const override { return SmallVector::Zero(s.p.size()); }
  double d3L_zzz(const State&) const override { return 0.0; }

  StructureFlags flags() const override { return {false, true}; }
  std::string description() const override { return "sqrt(1 + |p|^2) - f z"; }

 private:
  ScalarField f_;
};

}  // namespace

ModelPtr dirichlet_potential_model(Potential psi, ScalarField forcing) {
  return std::make_shared<DirichletPotentialModel>(std::move(psi), std::move(forcing));
}

ModelPtr minimal_surface_model(ScalarField forcing) {
  return std::make_shared<MinimalSurfaceModel>(std::move(forcing));
}

Classification classify(const EnergyModel& model, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> sym(-2.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto random_vector = [&] {
    SmallVector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = sym(rng);
    return v;
  };
  constexpr double tol = 1e-12;
  bool ppp = true, ppz = true, others = true;
  for (int k = 0; k < 100; ++k) {
    State s{random_vector(), sym(rng), Point(dim)};
    for (int i = 0; i < dim; ++i) s.x[i] = unit(rng);
    const SmallVector a = random_vector(), b = random_vector(), c = random_vector();
    ppp = ppp && std::abs(model.d3L_ppp(s, a, b, c)) < tol;
    ppz = ppz && std::abs(model.d3L_ppz(s, a, b)) < tol;
    others = others && model.d3L_pzz(s).cwiseAbs().maxCoeff() < tol && std::abs(model.d3L_zzz(s)) < tol;
  }
  if (ppp && ppz && others) return Classification::linear;
  if (ppp && ppz) return Classification::semilinear;
  return Classification::quasilinear;
}

SmoothFunction sine_product(int dim) {
  constexpr double pi = std::numbers::pi;
  SmoothFunction u;
  u.value = [dim](const Point& x) {
    double v = 1.0;
    for (int i = 0; i < dim; ++i) v *= std::sin(pi * x[i]);
    return v;
  };
  u.gradient = [dim](const Point& x) {
    SmallVector g(dim);
    for (int i = 0; i < dim; ++i) {
      double v = pi * std::cos(pi * x[i]);
      for (int j = 0; j < dim; ++j) {
        if (j != i) v *= std::sin(pi * x[j]);
      }
      g[i] = v;
    }
    return g;
  };
  u.hessian = [dim](const Point& x) {
    SmallMatrix h(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        double v = 1.0;
        for (int k = 0; k < dim; ++k) {
          if (k == i && k == j) v *= -pi * pi * std::sin(pi * x[k]);
          else if (k == i || k == j) v *= pi * std::cos(pi * x[k]);
          else v *= std::sin(pi * x[k]);
        }
        h(i, j) = v;
      }
    }
    return h;
  };
  return u;
}

namespace {

ManufacturedProblem potential_problem(int dim, Potential psi, std::string name, std::string equation) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("manufactured problem: dim must be 1 or 2");
  const SmoothFunction u = sine_product(dim);
  const auto d1 = psi.d1;
  ScalarField f = [u, d1](const Point& x) {
    const double value = u.value(x);
    return -u.hessian(x).trace() + d1(value);
  };
  ManufacturedProblem problem;
  problem.name = std::move(name);
  problem.equation = std::move(equation);
  problem.dim = dim;
  problem.model = dirichlet_potential_model(std::move(psi), f);
  problem.exact = u;
  problem.boundary_fn = u.value;
  return problem;
}

}  // namespace

ManufacturedProblem manufactured_semilinear(int dim, PsiChoice psi) {
  return psi == PsiChoice::quartic ? potential_problem(dim, quartic_potential(), "quartic", "-lap u + u^3 = f")
                                   : potential_problem(dim, cosine_potential(), "cosine", "-lap u - sin u = f");
}

ManufacturedProblem manufactured_linear(int dim) { return potential_problem(dim, zero_potential(), "linear", "-lap u = f"); }

ManufacturedProblem manufactured_minimal_surface(int dim) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("manufactured problem: dim must be 1 or 2");
  const SmoothFunction u = sine_product(dim);
  ScalarField f = [u](const Point& x) {
    const SmallVector g = u.gradient(x);
    const SmallMatrix h = u.hessian(x);
    const double w = 1.0 + g.squaredNorm();
    const double root = std::sqrt(w);
    return -h.trace() / root + g.dot(h * g) / (w * root);
  };
  ManufacturedProblem problem;
  problem.name = "minimal_surface";
  problem.equation = "-div(Du / sqrt(1 + |Du|^2)) = f";
  problem.dim = dim;
  problem.model = minimal_surface_model(f);
  problem.exact = u;
  problem.boundary_fn = u.value;
  return problem;
}

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names{"linear", "quartic", "cosine", "minimal_surface"};
  return names;
}

ManufacturedProblem make_problem(const std::string& name, int dim) {
  if (name == "linear") return manufactured_linear(dim);
  if (name == "quartic") return manufactured_semilinear(dim, PsiChoice::quartic);
  if (name == "cosine") return manufactured_semilinear(dim, PsiChoice::cosine);
  if (name == "minimal_surface") return manufactured_minimal_surface(dim);
  throw std::invalid_argument("unknown problem '" + name + "'");
}

double el_residual(const ManufacturedProblem& problem, const Point& x) {
  const State s{problem.exact.gradient(x), problem.exact.value(x), x};
  const SmallMatrix hess = problem.exact.hessian(x);
  // div dL/dp(Du, u, x) = L_pp : D^2u + L_pz . Du
  const double divergence = (problem.model->d2L_dpp(s).cwiseProduct(hess)).sum() +
                            problem.model->d2L_dpz(s).dot(s.p);
  return -divergence + problem.model->dL_dz(s);
}

}  // namespace nitsche
