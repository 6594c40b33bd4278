#pragma once

#include <complex>

#include <Eigen/Dense>

namespace mspec {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Which value of a balanced BV function to report at a point.
enum class Side { left, right, balanced };

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace mspec
