#pragma once

#include <Eigen/Core>

namespace rhogap {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// One input point per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

}  // namespace rhogap
