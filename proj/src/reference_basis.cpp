#include "nitsche/reference_basis.hpp"

#include <algorithm>
#include <stdexcept>

namespace nitsche {

namespace {

struct Factor {
  double value = 1.0;
  double first = 0.0;
  double second = 0.0;
};

// prod_{j < a} (m lambda - j) / (j + 1) and its first two lambda-derivatives.
Factor lagrange_factor(int a, int m, double lambda) {
  Factor r;
  for (int j = 0; j < a; ++j) {
    const double f = (m * lambda - j) / (j + 1);
    const double df = static_cast<double>(m) / (j + 1);
    r.second = r.second * f + 2.0 * r.first * df;
    r.first = r.first * f + r.value * df;
    r.value *= f;
  }
  return r;
}

}  // namespace

ReferenceBasis::ReferenceBasis(int dim, int order) : dim_(dim), order_(order) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("ReferenceBasis: dim must be 1 or 2");
  if (order < 1 || order > max_order) throw std::invalid_argument("ReferenceBasis: order must be 1, 2 or 3");
  if (dim == 1) {
    for (int a = order; a >= 0; --a) indices_.push_back({a, order - a, 0});
  } else {
    for (int a = order; a >= 0; --a) {
      for (int b = order - a; b >= 0; --b) indices_.push_back({a, b, order - a - b});
    }
  }
  const auto support = [this](const std::array<int, 3>& alpha) {
    return std::count_if(alpha.begin(), alpha.begin() + dim_ + 1, [](int a) { return a > 0; });
  };
  std::stable_sort(indices_.begin(), indices_.end(),
                   [&](const auto& x, const auto& y) { return support(x) < support(y); });
}

Point ReferenceBasis::node(int i) const {
  Point p(dim_);
  for (int k = 0; k < dim_; ++k) p[k] = static_cast<double>(indices_[i][k + 1]) / order_;
  return p;
}

BasisTabulation ReferenceBasis::tabulate(const Point& ref) const {
  const int nb = dim_ + 1;
  std::array<double, 3> lambda{};
  lambda[0] = 1.0 - ref.sum();
  for (int k = 0; k < dim_; ++k) lambda[k + 1] = ref[k];

  // d lambda_k / d xi_i
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(nb, dim_);
  t.row(0).setConstant(-1.0);
  for (int k = 0; k < dim_; ++k) t(k + 1, k) = 1.0;

  BasisTabulation tab;
  const int n = size();
  tab.values.resize(n);
  tab.gradients.resize(n, dim_);
  tab.hessians.resize(n);
  for (int i = 0; i < n; ++i) {
    std::array<Factor, 3> f;
    for (int k = 0; k < nb; ++k) f[k] = lagrange_factor(indices_[i][k], order_, lambda[k]);

    Eigen::VectorXd grad_lambda(nb);
    Eigen::MatrixXd hess_lambda(nb, nb);
    double value = 1.0;
    for (int k = 0; k < nb; ++k) value *= f[k].value;
    for (int k = 0; k < nb; ++k) {
      for (int l = 0; l < nb; ++l) {
        double prod = 1.0;
        for (int r = 0; r < nb; ++r) {
          if (r == k && r == l) prod *= f[r].second;
          else if (r == k || r == l) prod *= f[r].first;
          else prod *= f[r].value;
        }
        hess_lambda(k, l) = prod;
      }
      double prod = 1.0;
      for (int r = 0; r < nb; ++r) prod *= (r == k ? f[r].first : f[r].value);
      grad_lambda[k] = prod;
    }
    tab.values[i] = value;
    tab.gradients.row(i) = (t.transpose() * grad_lambda).transpose();
    tab.hessians[i] = t.transpose() * hess_lambda * t;
  }
  return tab;
}

}  // namespace nitsche
