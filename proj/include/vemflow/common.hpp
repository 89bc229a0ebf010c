#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>

namespace vemflow {

using Point = Eigen::Vector2d;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Tensor2 = Eigen::Matrix2d;

/// Scalar and vector fields over the plane.
using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<Eigen::Vector2d(const Point&)>;
using TensorField = std::function<Tensor2(const Point&)>;

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent mesh input.
class MeshError : public Error {
 public:
  using Error::Error;
};

/// Singular systems, non-finite iterates and similar numerical breakdowns.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Bad parameters passed to a public entry point.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace vemflow
