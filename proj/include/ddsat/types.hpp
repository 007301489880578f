#pragma once

#include <Eigen/Dense>

namespace ddsat {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

} // namespace ddsat
