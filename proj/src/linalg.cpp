#include "censmte/linalg.hpp"

namespace censmte {

std::vector<int> selectIndependentColumns(const Eigen::MatrixXd& design, double relTol) {
  const Eigen::Index n = design.rows();
  std::vector<int> kept;
  Eigen::MatrixXd basis(n, 0);
  for (Eigen::Index j = 0; j < design.cols(); ++j) {
    Eigen::VectorXd col = design.col(j);
    const double norm = col.norm();
    if (norm == 0.0) continue;
    Eigen::VectorXd r = col;
    // Two passes of classical Gram-Schmidt keep the residual accurate.
    for (int pass = 0; pass < 2 && basis.cols() > 0; ++pass) {
      r -= basis * (basis.transpose() * r);
    }
    const double rn = r.norm();
    if (rn > relTol * norm) {
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = r / rn;
      kept.push_back(static_cast<int>(j));
    }
  }
  return kept;
}

Eigen::MatrixXd takeColumns(const Eigen::MatrixXd& m, std::span<const int> cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(cols[k]);
  return out;
}

}  // namespace censmte
