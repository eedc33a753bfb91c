#include "edfvae/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace edfvae {

EigenDecomposition sym_eig(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("sym_eig: matrix must be square");
  }
  if (!a.allFinite()) {
    throw std::invalid_argument("sym_eig: matrix has non-finite entries");
  }
  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(scale, 1.0)) {
    throw std::invalid_argument("sym_eig: matrix is not symmetric");
  }

  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("sym_eig: eigensolver failed to converge");
  }

  const Index n = a.rows();
  EigenDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    Vector v = solver.eigenvectors().col(n - 1 - j);
    for (Index i = 0; i < n; ++i) {
      if (std::abs(v[i]) > 1e-12) {
        if (v[i] < 0.0) {
          v = -v;
        }
        break;
      }
    }
    out.eigenvectors.col(j) = v;
  }
  return out;
}

Matrix sample_covariance(const Matrix& x, const Vector& center) {
  if (x.rows() < 1) {
    throw std::invalid_argument("sample_covariance: need at least one row");
  }
  if (x.cols() != center.size()) {
    throw std::invalid_argument("sample_covariance: center dimension mismatch");
  }
  const Matrix centered = x.rowwise() - center.transpose();
  return (centered.transpose() * centered) / static_cast<double>(x.rows());
}

double gaussian_raw_moment(double mean, double var, int order) {
  if (var < 0.0) {
    throw std::invalid_argument("gaussian_raw_moment: variance must be >= 0");
  }
  const double m = mean;
  const double v = var;
  switch (order) {
    case 1: return m;
    case 2: return m * m + v;
    case 3: return m * m * m + 3.0 * m * v;
    case 4: return m * m * m * m + 6.0 * m * m * v + 3.0 * v * v;
    default:
      throw std::invalid_argument("gaussian_raw_moment: order must be in 1..4");
  }
}

}  // namespace edfvae
