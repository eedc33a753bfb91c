#pragma once

#include "edfvae/types.hpp"

namespace edfvae {

/// Eigenpairs of a symmetric matrix, eigenvalues sorted descending.
/// Eigenvector signs follow a fixed convention (first nonzero component
/// positive), so decompositions are reproducible.
struct EigenDecomposition {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // columns, orthonormal
};

/// Symmetric eigendecomposition.  Throws if `a` is not square, not finite,
/// or not symmetric to 1e-10 relative.
EigenDecomposition sym_eig(const Matrix& a);

/// (1/N) sum_i (x_i - center)(x_i - center)^T over the rows of `x`.
/// Divisor N, matching the sample covariance used by the MLE formulas.
Matrix sample_covariance(const Matrix& x, const Vector& center);

/// E[Y^p] for Y ~ Normal(mean, var), p in {1, 2, 3, 4}.
double gaussian_raw_moment(double mean, double var, int order);

}  // namespace edfvae
