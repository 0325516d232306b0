#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace nlreg {

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMat = Eigen::SparseMatrix<Scalar>;
using Index = Eigen::Index;

}  // namespace nlreg
