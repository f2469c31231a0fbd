#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>

namespace vfield {

using Real = double;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Mat3X = Eigen::Matrix3Xd;
using RowVec = Eigen::RowVectorXd;

constexpr Real kPi = 3.14159265358979323846;

/// Floor used wherever a norm appears in a denominator.
constexpr Real kNormFloor = 1e-12;

inline constexpr Real infinity() { return std::numeric_limits<Real>::infinity(); }

}  // namespace vfield
