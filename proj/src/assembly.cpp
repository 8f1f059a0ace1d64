#include "nitsche/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "nitsche/parallel.hpp"

namespace nitsche {

namespace {

struct Kernel {
  QuadRule rule;
  std::vector<BasisTabulation> tabs;
};

Kernel make_kernel(const FESpace& space, int degree, int subdivisions) {
  Kernel k;
  k.rule = make_composite_rule(space.dim(), degree > 0 ? degree : space.default_quad_degree(), subdivisions);
  k.tabs = tabulate(space.basis(), k.rule.points);
  return k;
}

Kernel make_kernel(const FESpace& space, const AssemblyOptions& opts) {
  return make_kernel(space, opts.quad_degree, opts.quad_subdivisions);
}

Eigen::VectorXd gather(const FEFunction& f, std::span<const int> dofs) {
  Eigen::VectorXd local(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i) local[i] = f.coeffs[dofs[i]];
  return local;
}

void require_space(const FEFunction& f, const FESpace& space, const char* what) {
  if (f.space.get() != &space) throw std::invalid_argument(std::string(what) + ": functions must share one space");
}

void check_finite(double v, std::size_t e) {
  if (!std::isfinite(v)) {
    throw Error("non-finite Lagrangian derivative in element " + std::to_string(e));
  }
}

// Sums per-element values in element order.
double ordered_sum(const std::vector<double>& values) {
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

}  // namespace

double SparseOperator::max_asymmetry() const {
  const Eigen::SparseMatrix<double> t = matrix_.transpose();
  const Eigen::SparseMatrix<double> diff = Eigen::SparseMatrix<double>(matrix_) - t;
  double m = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it) m = std::max(m, std::abs(it.value()));
  }
  return m;
}

double total_energy(const EnergyModel& model, const FEFunction& v, const AssemblyOptions& opts) {
  const FESpace& space = *v.space;
  const Kernel k = make_kernel(space, opts);
  std::vector<double> per_element(space.mesh().num_elements(), 0.0);
  parallel_for(per_element.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      const ElementMap& map = space.element_map(e);
      const Eigen::VectorXd local = gather(v, space.element_dofs(e));
      const double jac = 1.0 / std::abs(map.det);
      double sum = 0.0;
      for (std::size_t q = 0; q < k.rule.size(); ++q) {
        const Eigen::MatrixXd grads = physical_gradients(k.tabs[q], map);
        const State s{grads.transpose() * local, k.tabs[q].values.dot(local), map.to_physical(k.rule.points[q])};
        sum += k.rule.weights[q] * jac * model.eval(s);
      }
      per_element[e] = sum;
    }
  });
  return ordered_sum(per_element);
}

double total_energy(const EnergyModel& model, const SmoothFunction& u, const FESpace& space,
                    const AssemblyOptions& opts) {
  const QuadRule rule = make_composite_rule(
      space.dim(), opts.quad_degree > 0 ? opts.quad_degree : space.default_quad_degree(), opts.quad_subdivisions);
  double total = 0.0;
  for (std::size_t e = 0; e < space.mesh().num_elements(); ++e) {
    const ElementMap& map = space.element_map(e);
    const double jac = 1.0 / std::abs(map.det);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point x = map.to_physical(rule.points[q]);
      total += rule.weights[q] * jac * model.eval({u.gradient(x), u.value(x), x});
    }
  }
  return total;
}

Eigen::VectorXd assemble_residual(const EnergyModel& model, const FEFunction& v, const AssemblyOptions& opts) {
  const FESpace& space = *v.space;
  const Kernel k = make_kernel(space, opts);
  const std::size_t ne = space.mesh().num_elements();
  const int nloc = space.dofs_per_element();
  std::vector<double> contrib(ne * nloc, 0.0);
  parallel_for(ne, [&](std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      const ElementMap& map = space.element_map(e);
      const Eigen::VectorXd local = gather(v, space.element_dofs(e));
      const double jac = 1.0 / std::abs(map.det);
      Eigen::Map<Eigen::VectorXd> out(contrib.data() + e * nloc, nloc);
      for (std::size_t q = 0; q < k.rule.size(); ++q) {
        const Eigen::MatrixXd grads = physical_gradients(k.tabs[q], map);
        const State s{grads.transpose() * local, k.tabs[q].values.dot(local), map.to_physical(k.rule.points[q])};
        const SmallVector lp = model.dL_dp(s);
        const double lz = model.dL_dz(s);
        check_finite(lp.sum() + lz, e);
        const double w = k.rule.weights[q] * jac;
        out += w * (grads * lp + lz * k.tabs[q].values);
      }
    }
  });
  Eigen::VectorXd r = Eigen::VectorXd::Zero(space.num_dofs());
  for (std::size_t e = 0; e < ne; ++e) {
    const auto dofs = space.element_dofs(e);
    for (int i = 0; i < nloc; ++i) r[dofs[i]] += contrib[e * nloc + i];
  }
  mask_boundary(space, r);
  return r;
}

SparseOperator assemble_hessian(const EnergyModel& model, const FEFunction& v, const AssemblyOptions& opts) {
  const FESpace& space = *v.space;
  const Kernel k = make_kernel(space, opts);
  const std::size_t ne = space.mesh().num_elements();
  const int nloc = space.dofs_per_element();
  const std::size_t block = static_cast<std::size_t>(nloc) * nloc;
  std::vector<double> contrib(ne * block, 0.0);
  parallel_for(ne, [&](std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      const ElementMap& map = space.element_map(e);
      const Eigen::VectorXd local = gather(v, space.element_dofs(e));
      const double jac = 1.0 / std::abs(map.det);
      Eigen::Map<Eigen::MatrixXd> out(contrib.data() + e * block, nloc, nloc);
      for (std::size_t q = 0; q < k.rule.size(); ++q) {
        const Eigen::MatrixXd grads = physical_gradients(k.tabs[q], map);
        const Eigen::VectorXd& phi = k.tabs[q].values;
        const State s{grads.transpose() * local, phi.dot(local), map.to_physical(k.rule.points[q])};
        const SmallMatrix lpp = model.d2L_dpp(s);
        const SmallVector lpz = model.d2L_dpz(s);
        const double lzz = model.d2L_dzz(s);
        check_finite(lpp.sum() + lpz.sum() + lzz, e);
        const double w = k.rule.weights[q] * jac;
        const Eigen::VectorXd mixed = grads * lpz;
        out += w * (grads * lpp * grads.transpose() + mixed * phi.transpose() + phi * mixed.transpose() +
                    lzz * phi * phi.transpose());
      }
    }
  });
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(ne * block + space.boundary_dofs().size());
  for (std::size_t e = 0; e < ne; ++e) {
    const auto dofs = space.element_dofs(e);
    for (int j = 0; j < nloc; ++j) {
      if (space.is_boundary(dofs[j])) continue;
      for (int i = 0; i < nloc; ++i) {
        if (space.is_boundary(dofs[i])) continue;
        triplets.emplace_back(dofs[i], dofs[j], contrib[e * block + j * nloc + i]);
      }
    }
  }
  for (int b : space.boundary_dofs()) triplets.emplace_back(b, b, 1.0);
  SparseOperator::Matrix m(space.num_dofs(), space.num_dofs());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return SparseOperator(std::move(m));
}

double second_variation(const EnergyModel& model, const FEFunction& v, const FEFunction& u, const FEFunction& w,
                        const AssemblyOptions& opts) {
  const FESpace& space = *v.space;
  require_space(u, space, "second_variation");
  require_space(w, space, "second_variation");
  const Kernel k = make_kernel(space, opts);
  std::vector<double> per_element(space.mesh().num_elements(), 0.0);
  parallel_for(per_element.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      const ElementMap& map = space.element_map(e);
      const auto dofs = space.element_dofs(e);
      const Eigen::VectorXd lv = gather(v, dofs), lu = gather(u, dofs), lw = gather(w, dofs);
      const double jac = 1.0 / std::abs(map.det);
      double sum = 0.0;
      for (std::size_t q = 0; q < k.rule.size(); ++q) {
        const Eigen::MatrixXd grads = physical_gradients(k.tabs[q], map);
        const Eigen::VectorXd& phi = k.tabs[q].values;
        const State s{grads.transpose() * lv, phi.dot(lv), map.to_physical(k.rule.points[q])};
        const SmallVector du = grads.transpose() * lu, dw = grads.transpose() * lw;
        const double zu = phi.dot(lu), zw = phi.dot(lw);
        const SmallVector lpz = model.d2L_dpz(s);
        sum += k.rule.weights[q] * jac *
               (du.dot(model.d2L_dpp(s) * dw) + lpz.dot(du) * zw + zu * lpz.dot(dw) + model.d2L_dzz(s) * zu * zw);
      }
      per_element[e] = sum;
    }
  });
  return ordered_sum(per_element);
}

double apply_third_variation(const EnergyModel& model, const FEFunction& v, const FEFunction& u,
                             const FEFunction& dv, const FEFunction& w, const BlockMask& mask,
                             const AssemblyOptions& opts) {
  const FESpace& space = *v.space;
  require_space(u, space, "apply_third_variation");
  require_space(dv, space, "apply_third_variation");
  require_space(w, space, "apply_third_variation");
  const Kernel k = make_kernel(space, opts);
  std::vector<double> per_element(space.mesh().num_elements(), 0.0);
  parallel_for(per_element.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      const ElementMap& map = space.element_map(e);
      const auto dofs = space.element_dofs(e);
      const Eigen::VectorXd lv = gather(v, dofs), lu = gather(u, dofs), ld = gather(dv, dofs), lw = gather(w, dofs);
      const double jac = 1.0 / std::abs(map.det);
      double sum = 0.0;
      for (std::size_t q = 0; q < k.rule.size(); ++q) {
        const Eigen::MatrixXd grads = physical_gradients(k.tabs[q], map);
        const Eigen::VectorXd& phi = k.tabs[q].values;
        const State s{grads.transpose() * lv, phi.dot(lv), map.to_physical(k.rule.points[q])};
        const SmallVector gu = grads.transpose() * lu, gd = grads.transpose() * ld, gw = grads.transpose() * lw;
        const double zu = phi.dot(lu), zd = phi.dot(ld), zw = phi.dot(lw);
        double value = 0.0;
        if (mask.ppp) value += model.d3L_ppp(s, gu, gd, gw);
        if (mask.ppz) {
          value += model.d3L_ppz(s, gu, gd) * zw + model.d3L_ppz(s, gu, gw) * zd + model.d3L_ppz(s, gd, gw) * zu;
        }
        if (mask.pzz) {
          const SmallVector pzz = model.d3L_pzz(s);
          value += pzz.dot(gu) * zd * zw + pzz.dot(gd) * zu * zw + pzz.dot(gw) * zu * zd;
        }
        if (mask.zzz) value += model.d3L_zzz(s) * zu * zd * zw;
        sum += k.rule.weights[q] * jac * value;
      }
      per_element[e] = sum;
    }
  });
  return ordered_sum(per_element);
}

namespace {

SparseOperator assemble_gram(const FESpace& space, const AssemblyOptions& opts, bool with_stiffness) {
  const Kernel k = make_kernel(space, opts);
  const int nloc = space.dofs_per_element();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(space.mesh().num_elements() * nloc * nloc);
  for (std::size_t e = 0; e < space.mesh().num_elements(); ++e) {
    const ElementMap& map = space.element_map(e);
    const double jac = 1.0 / std::abs(map.det);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nloc, nloc);
    for (std::size_t q = 0; q < k.rule.size(); ++q) {
      const Eigen::VectorXd& phi = k.tabs[q].values;
      local += k.rule.weights[q] * jac * phi * phi.transpose();
      if (with_stiffness) {
        const Eigen::MatrixXd grads = physical_gradients(k.tabs[q], map);
        local += k.rule.weights[q] * jac * grads * grads.transpose();
      }
    }
    const auto dofs = space.element_dofs(e);
    for (int j = 0; j < nloc; ++j) {
      for (int i = 0; i < nloc; ++i) {
        if (with_stiffness && (space.is_boundary(dofs[i]) || space.is_boundary(dofs[j]))) continue;
        triplets.emplace_back(dofs[i], dofs[j], local(i, j));
      }
    }
  }
  if (with_stiffness) {
    for (int b : space.boundary_dofs()) triplets.emplace_back(b, b, 1.0);
  }
  SparseOperator::Matrix m(space.num_dofs(), space.num_dofs());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return SparseOperator(std::move(m));
}

}  // namespace

SparseOperator assemble_gram_l2(const FESpace& space, const AssemblyOptions& opts) {
  return assemble_gram(space, opts, false);
}

SparseOperator assemble_gram_h1(const FESpace& space, const AssemblyOptions& opts) {
  return assemble_gram(space, opts, true);
}

void mask_boundary(const FESpace& space, Eigen::VectorXd& v) {
  for (int b : space.boundary_dofs()) v[b] = 0.0;
}

namespace {

struct ErrorSample {
  double value;
  SmallVector gradient;
  SmallMatrix hessian;
};

// Integrates the difference described by `sample(e, ref, tab_index, on_lattice)`.
template <class Sampler>
NormReport accumulate_norms(const FESpace& space, const NormOptions& opts, Sampler&& sample) {
  if (!(opts.q >= 1.0)) throw std::invalid_argument("norms: q must lie in [1, inf]");
  if (opts.include_broken_h2 && space.order() < 2) {
    throw std::invalid_argument("norms: broken H2 norm requires order >= 2");
  }
  const int d = space.dim();
  const QuadRule rule = make_quad_rule(d, opts.quad_degree > 0 ? opts.quad_degree : space.default_quad_degree());
  const auto quad_tabs = tabulate(space.basis(), rule.points);
  const std::vector<Point> lattice = reference_lattice(d, d == 1 ? 20 : 16);
  const auto lattice_tabs = tabulate(space.basis(), lattice);
  const bool finite_q = std::isfinite(opts.q);

  NormReport r;
  r.q = opts.q;
  double l1 = 0.0, l2 = 0.0, h1 = 0.0, h2 = 0.0, lq = 0.0, gq = 0.0, linf = 0.0, ginf = 0.0;
  for (std::size_t e = 0; e < space.mesh().num_elements(); ++e) {
    const ElementMap& map = space.element_map(e);
    const double jac = 1.0 / std::abs(map.det);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const ErrorSample s = sample(e, map, rule.points[q], quad_tabs[q], opts.include_broken_h2);
      const double w = rule.weights[q] * jac;
      const double a = std::abs(s.value);
      const double g = s.gradient.norm();
      l1 += w * a;
      l2 += w * a * a;
      h1 += w * g * g;
      if (finite_q) {
        lq += w * std::pow(a, opts.q);
        gq += w * std::pow(g, opts.q);
      }
      if (opts.include_broken_h2) h2 += w * s.hessian.squaredNorm();
    }
    for (std::size_t q = 0; q < lattice.size(); ++q) {
      const ErrorSample s = sample(e, map, lattice[q], lattice_tabs[q], false);
      linf = std::max(linf, std::abs(s.value));
      ginf = std::max(ginf, s.gradient.norm());
    }
  }
  r.l1 = l1;
  r.l2 = std::sqrt(l2);
  r.h1_semi = std::sqrt(h1);
  r.broken_h2 = std::sqrt(h2);
  r.linf = linf;
  r.w1inf = std::max(linf, ginf);
  r.lq = finite_q ? std::pow(lq, 1.0 / opts.q) : linf;
  r.w1q = finite_q ? std::pow(lq + gq, 1.0 / opts.q) : r.w1inf;
  return r;
}

ErrorSample fe_sample(const FEFunction& f, std::size_t e, const ElementMap& map, const BasisTabulation& tab,
                      bool with_hessian) {
  const Eigen::VectorXd local = gather(f, f.space->element_dofs(e));
  ErrorSample s{tab.values.dot(local), physical_gradients(tab, map).transpose() * local, SmallMatrix()};
  if (with_hessian) {
    SmallMatrix ref = SmallMatrix::Zero(map.jacobian.rows(), map.jacobian.cols());
    for (int i = 0; i < local.size(); ++i) ref += local[i] * tab.hessians[i];
    s.hessian = map.jacobian.transpose() * ref * map.jacobian;
  }
  return s;
}

}  // namespace

NormReport norms(const SmoothFunction& exact, const FEFunction& g, const NormOptions& opts) {
  if (opts.include_broken_h2 && !exact.hessian) throw std::invalid_argument("norms: exact Hessian required");
  return accumulate_norms(*g.space, opts,
                          [&](std::size_t e, const ElementMap& map, const Point& ref, const BasisTabulation& tab,
                              bool with_hessian) {
                            const Point x = map.to_physical(ref);
                            ErrorSample s = fe_sample(g, e, map, tab, with_hessian);
                            s.value = exact.value(x) - s.value;
                            s.gradient = exact.gradient(x) - s.gradient;
                            if (with_hessian) s.hessian = exact.hessian(x) - s.hessian;
                            return s;
                          });
}

NormReport norms(const FEFunction& f, const FEFunction& g, const NormOptions& opts) {
  require_space(g, *f.space, "norms");
  return norms(f - g, opts);
}

NormReport norms(const FEFunction& g, const NormOptions& opts) {
  return accumulate_norms(*g.space, opts,
                          [&](std::size_t e, const ElementMap& map, const Point&, const BasisTabulation& tab,
                              bool with_hessian) { return fe_sample(g, e, map, tab, with_hessian); });
}

}  // namespace nitsche
