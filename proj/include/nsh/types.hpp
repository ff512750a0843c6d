#pragma once

#include <Eigen/Core>

namespace nsh {

// Small vectors and matrices for d in {2, 3}; fixed max size keeps them off the heap.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

// Point sets are stored column-wise: d rows, one column per point.
using Points = Eigen::MatrixXd;

}  // namespace nsh
