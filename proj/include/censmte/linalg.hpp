#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace censmte {

// Greedy left-to-right column selection: column j is kept when its residual
// after projection on the already-kept columns exceeds relTol times its own
// norm. Dropping therefore always removes the later of two collinear
// columns (a constant C column after the intercept, say).
std::vector<int> selectIndependentColumns(const Eigen::MatrixXd& design, double relTol = 1e-9);

// Gathers the listed columns of a matrix.
Eigen::MatrixXd takeColumns(const Eigen::MatrixXd& m, std::span<const int> cols);

}  // namespace censmte
