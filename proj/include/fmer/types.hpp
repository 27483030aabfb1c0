#pragma once

#include <Eigen/Dense>

namespace fmer {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace fmer
