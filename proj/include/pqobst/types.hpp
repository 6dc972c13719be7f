#pragma once

#include <Eigen/Core>

namespace pqobst {

/// Point of R^n, n <= 2. Dynamic size with a fixed capacity so it never allocates.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2, 2>;

/// One scalar per mesh node.
using NodalField = Eigen::VectorXd;
/// One dim-vector per mesh cell, stored as rows.
using CellField = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace pqobst
