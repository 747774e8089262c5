#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace shapeopt {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using VertexField = std::vector<Vec2>;
using CellVectorField = std::vector<Vec2>;
using ScalarField = std::vector<double>;

// Constraint vectors carry the two first moments followed by the volume.
inline constexpr int kDim = 2;
inline constexpr int kNumConstraints = kDim + 1;
using ConstraintVector = Eigen::Vector3d;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

class PatchError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace shapeopt
