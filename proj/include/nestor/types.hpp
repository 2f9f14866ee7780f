#pragma once

#include <Eigen/Dense>

namespace nestor {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Array = Eigen::ArrayXd;

/// Read-only view of a point in R^m; binds to Vector or a column of a Matrix.
using PointRef = Eigen::Ref<const Eigen::VectorXd>;
using VectorOut = Eigen::Ref<Eigen::VectorXd>;

}  // namespace nestor
