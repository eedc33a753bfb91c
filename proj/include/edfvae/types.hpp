#pragma once

#include <Eigen/Dense>

namespace edfvae {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Array = Eigen::ArrayXd;
using Index = Eigen::Index;

}  // namespace edfvae
