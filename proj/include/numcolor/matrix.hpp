#pragma once

#include <Eigen/Core>

namespace numcolor {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace numcolor
