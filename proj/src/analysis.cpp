#include "nitsche/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace nitsche {

EllipticityEstimate estimate_ellipticity(const EnergyModel& model, const FEFunction& v, const EigenOptions& opts) {
  const FESpace& space = *v.space;
  const SparseOperator h = assemble_hessian(model, v);
  const SparseOperator g = assemble_gram_h1(space);

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  Eigen::VectorXd q(space.num_dofs());
  for (int i = 0; i < q.size(); ++i) q[i] = coeff(rng);
  mask_boundary(space, q);
  if (q.isZero()) throw std::invalid_argument("estimate_ellipticity: space has no interior dofs");
  const int interior = space.num_dofs() - static_cast<int>(space.boundary_dofs().size());
  const int cap = std::min(opts.max_iters, interior);

  std::vector<Eigen::VectorXd> basis, g_basis;
  std::vector<double> alpha, beta;
  Eigen::VectorXd gq = g.apply(q);
  const double n0 = std::sqrt(q.dot(gq));
  q /= n0;
  gq /= n0;

  double lo = 0.0, hi = 0.0;
  int settled = 0;
  for (int k = 0; k < cap; ++k) {
    basis.push_back(q);
    g_basis.push_back(gq);
    const Eigen::VectorXd hq = h.apply(q);
    alpha.push_back(q.dot(hq));
    Eigen::VectorXd r = linear_solve(g, hq, opts.linear_tol).x;
    mask_boundary(space, r);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < basis.size(); ++i) r -= g_basis[i].dot(r) * basis[i];
    }
    const Eigen::VectorXd gr = g.apply(r);
    const double b = std::sqrt(std::max(r.dot(gr), 0.0));

    const int n = static_cast<int>(alpha.size());
    Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), n);
    Eigen::VectorXd sub = n > 1 ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(beta.data(), n - 1))
                                : Eigen::VectorXd();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    const double next_lo = tri.eigenvalues()[0], next_hi = tri.eigenvalues()[n - 1];
    const double tol = 1e-2 * opts.tol;
    const bool small = k > 0 && std::abs(next_lo - lo) <= tol * std::abs(next_lo) &&
                       std::abs(next_hi - hi) <= tol * std::abs(next_hi);
    lo = next_lo;
    hi = next_hi;
    settled = small ? settled + 1 : 0;
    const bool invariant = b <= 1e-12 * std::max(std::abs(hi), 1.0);
    if (settled >= 3 || invariant || n == interior) {
      EllipticityEstimate est;
      est.lambda_min = lo;
      est.lambda_max = hi;
      est.state = "linearized at a function with " + std::to_string(space.num_dofs()) + " dofs";
      return est;
    }
    beta.push_back(b);
    q = r / b;
    gq = gr / b;
  }
  throw SolverError("eigenvalue iteration stagnated", lo);
}

double galerkin_defect(const EnergyModel& model, const FEFunction& u_fine, const FEFunction& u_h, int t_points,
                       const AssemblyOptions& opts) {
  const SpacePtr& fine = u_fine.space;
  const FESpace& coarse = *u_h.space;
  if (!fine->mesh().descends_from(coarse.mesh()) || fine->order() < coarse.order()) {
    throw std::invalid_argument("galerkin_defect: spaces are not nested");
  }
  const SparseOperator::Matrix p = prolongation_matrix(coarse, *fine);
  const FEFunction uh_fine(fine, p * u_h.coeffs);
  const FEFunction diff = uh_fine - u_fine;

  const QuadRule t_rule = gauss_legendre(t_points);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(fine->num_dofs());
  for (std::size_t k = 0; k < t_rule.size(); ++k) {
    const double t = t_rule.points[k][0];
    const FEFunction gamma(fine, (1.0 - t) * u_fine.coeffs + t * uh_fine.coeffs);
    y += t_rule.weights[k] * assemble_hessian(model, gamma, opts).apply(diff.coeffs);
  }
  mask_boundary(*fine, y);
  Eigen::VectorXd tested = p.transpose() * y;
  mask_boundary(coarse, tested);
  return tested.lpNorm<Eigen::Infinity>();
}

FEFunction solve_adjoint(const EnergyModel& model, const FEFunction& u_ref, const FEFunction& rhs_diff,
                         double linear_tol) {
  const FESpace& space = *u_ref.space;
  if (space.order() < 2) throw std::invalid_argument("solve_adjoint: reference space needs order >= 2");
  if (rhs_diff.space != u_ref.space) throw std::invalid_argument("solve_adjoint: rhs must live on the reference space");
  Eigen::VectorXd b = -assemble_gram_l2(space).apply(rhs_diff.coeffs);
  mask_boundary(space, b);
  return FEFunction(u_ref.space, linear_solve(assemble_hessian(model, u_ref), b, linear_tol).x);
}

double h2_regularity_ratio(const FEFunction& w, const FEFunction& rhs_diff) {
  if (w.space->order() < 2) throw std::invalid_argument("h2_regularity_ratio: W needs order >= 2");
  const double rhs = norms(rhs_diff).l2;
  if (!(rhs > 0.0)) throw std::invalid_argument("h2_regularity_ratio: zero right-hand side");
  NormOptions opts;
  opts.include_broken_h2 = true;
  const NormReport n = norms(w, opts);
  return (n.l2 + n.h1_semi + n.broken_h2) / rhs;
}

DualityIdentity aubin_nitsche_identity(const EnergyModel& model, const SmoothFunction& exact, const FEFunction& u_h,
                                       const FEFunction& u_ref, const FEFunction& w) {
  DualityIdentity out;
  const double err = norms(exact, u_h).l2;
  out.l2_error_sq = err * err;
  const FEFunction diff = prolong(u_h, u_ref.space) - u_ref;
  out.pairing = second_variation(model, u_ref, w, diff);
  out.relative_residual = std::abs(out.l2_error_sq + out.pairing) / out.l2_error_sq;
  return out;
}

namespace {

// Sum of a few sine products with random frequencies in 1..3 and random
// amplitudes; vanishes on the boundary of the unit domain.
ScalarField random_smooth_field(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_int_distribution<int> freq(1, 3);
  std::vector<std::pair<double, std::array<int, 2>>> terms;
  for (int k = 0; k < 3; ++k) terms.push_back({amp(rng), {freq(rng), freq(rng)}});
  return [dim, terms](const Point& x) {
    double v = 0.0;
    for (const auto& [a, f] : terms) {
      double t = a;
      for (int i = 0; i < dim; ++i) t *= std::sin(f[i] * std::numbers::pi * x[i]);
      v += t;
    }
    return v;
  };
}

}  // namespace

PQEstimate estimate_pq_constant(const EnergyModel& model, const FEFunction& u, NormPair norm_pair, int samples,
                                std::uint64_t seed) {
  const SpacePtr& space = u.space;
  if (space->order() < 2) throw std::invalid_argument("estimate_pq_constant: state space needs order >= 2");
  if (samples < 1) throw std::invalid_argument("estimate_pq_constant: samples must be >= 1");
  if (!(norm_pair.o == 1 && norm_pair.r == 2.0) && norm_pair.o != 0) {
    throw std::invalid_argument("estimate_pq_constant: norm pair must be (1,2) or (0,r)");
  }
  // Separate streams keep the smooth samples identical across meshes.
  std::mt19937_64 rng(seed);
  std::mt19937_64 rough_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);

  const auto w12 = [](const NormReport& n) { return std::sqrt(n.l2 * n.l2 + n.h1_semi * n.h1_semi); };
  const auto ratio = [&](const FEFunction& uu, const FEFunction& v) {
    NormOptions h2;
    h2.include_broken_h2 = true;
    const NormReport nu = norms(uu, h2);
    const double u_norm = std::sqrt(nu.l2 * nu.l2 + nu.h1_semi * nu.h1_semi + nu.broken_h2 * nu.broken_h2);
    double v_or = 0.0, v_12 = 0.0;
    if (norm_pair.o == 1) {
      v_12 = v_or = w12(norms(v));
    } else {
      NormOptions lr;
      lr.q = norm_pair.r;
      const NormReport nv = norms(v, lr);
      v_12 = w12(nv);
      v_or = nv.lq;
    }
    const double denom = u_norm * v_12 * v_or;
    return denom > 0.0 ? std::abs(apply_third_variation(model, u, uu, v, v)) / denom : 0.0;
  };

  PQEstimate est;
  est.samples = samples;
  est.norm_pair = norm_pair;
  for (int s = 0; s < samples; ++s) {
    const FEFunction uu = interpolate(space, random_smooth_field(space->dim(), rng));
    const FEFunction smooth = interpolate(space, random_smooth_field(space->dim(), rng));
    FEFunction rough(space);
    for (int i = 0; i < rough.coeffs.size(); ++i) rough.coeffs[i] = noise(rough_rng);
    mask_boundary(*space, rough.coeffs);
    est.max_ratio_smooth = std::max(est.max_ratio_smooth, ratio(uu, smooth));
    est.max_ratio_rough = std::max(est.max_ratio_rough, ratio(uu, rough));
  }
  est.max_ratio = std::max(est.max_ratio_smooth, est.max_ratio_rough);
  return est;
}

RateEstimate estimate_rate(const std::vector<std::pair<double, double>>& pairs) {
  RateEstimate est;
  std::set<double> seen;
  for (const auto& [h, err] : pairs) {
    if (!(h > 0.0)) throw std::invalid_argument("estimate_rate: mesh widths must be positive");
    if (!seen.insert(h).second) throw std::invalid_argument("estimate_rate: repeated mesh width");
    if (!(err > 0.0)) {
      est.warnings.push_back("dropped non-positive error at h = " + std::to_string(h));
      continue;
    }
    est.levels.emplace_back(h, err);
  }
  if (est.levels.size() < 3) throw std::invalid_argument("estimate_rate: need at least three usable levels");

  const double n = static_cast<double>(est.levels.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [h, err] : est.levels) {
    sx += std::log(h);
    sy += std::log(err);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [h, err] : est.levels) {
    const double dx = std::log(h) - mx, dy = std::log(err) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  est.slope = sxy / sxx;
  est.intercept = my - est.slope * mx;
  est.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return est;
}

}  // namespace nitsche
