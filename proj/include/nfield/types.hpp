#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace nfield {

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

constexpr Scalar kPi = 3.14159265358979323846;
constexpr Scalar kTwoPi = 2.0 * kPi;

}  // namespace nfield
