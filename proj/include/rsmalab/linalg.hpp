#pragma once

#include <complex>

#include <Eigen/Dense>

namespace rsmalab {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace rsmalab
