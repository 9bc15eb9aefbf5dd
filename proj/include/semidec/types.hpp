#pragma once

#include <Eigen/Dense>

namespace semidec {

// Dense types templated on the scalar.  Concrete pipeline code uses the
// double-precision aliases; the algebraic kernels stay generic.
template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrixd = Matrix<double>;
using Vectord = Vector<double>;

}  // namespace semidec
