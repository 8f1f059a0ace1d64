#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace nitsche {

/// Vectors and matrices of runtime size d <= 2, stored inline.
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;
using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;

using Point = SmallVector;

using ScalarField = std::function<double(const Point&)>;
using GradientField = std::function<SmallVector(const Point&)>;
using HessianField = std::function<SmallMatrix(const Point&)>;

/// A smooth function together with its first and second derivatives.
struct SmoothFunction {
  ScalarField value;
  GradientField gradient;
  HessianField hessian;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MeshError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double final_residual)
      : Error(what), final_residual_(final_residual) {}

  double final_residual() const noexcept { return final_residual_; }

 private:
  double final_residual_;
};

}  // namespace nitsche
