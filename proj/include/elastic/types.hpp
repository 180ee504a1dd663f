#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace elastic {

using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// V x 3 vertex coordinates (or per-vertex displacement fields).
using Positions = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Malformed or inconsistent input: unreadable files, mismatched
/// topologies, invalid parameter combinations. Maps to CLI exit code 1.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure on well-formed input: collapsed faces, metrics
/// outside the SPD cone. Maps to CLI exit code 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace elastic
