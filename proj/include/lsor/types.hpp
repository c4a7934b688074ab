#pragma once

#include <Eigen/Dense>

namespace lsor {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace lsor
