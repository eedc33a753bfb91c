#pragma once

#include <optional>
#include <vector>

#include "edfvae/edf.hpp"
#include "edfvae/types.hpp"

namespace edfvae {

/// Natural-parameter map theta(z) = w z + b of an affine decoder,
/// expressed in the substituted (rho-scaled) parameter space.
struct AffineDecoder {
  Matrix w;  // d x kappa
  Vector b;  // d
};

/// Closed-form maximizer of the approximate objective for an affine decoder.
///
/// With lambda the descending eigenvalues of the transformed sample
/// covariance and alpha = beta * phi / F''(0) the cut-off, the factor
/// carried by column j of w_hat * rotation_r^T is sqrt(max(lambda_j -
/// alpha, 0)); columns at or below the cut-off are exactly zero.
struct MleSolution {
  Vector b_hat;                   // d, mean of transformed data
  Matrix w_hat;                   // d x kappa
  Matrix rotation_r;              // kappa x kappa
  Vector eigenvalues;             // all d, descending
  std::optional<double> sigma2_hat;  // Gaussian only
  double cutoff = 0.0;            // beta * phi / F''(0)
  std::vector<bool> active_mask;  // kappa, lambda_j > cutoff
  double beta = 1.0;
  EdfFamily family;               // dispersion_phi = sigma2_hat for Gaussian
  bool degenerate = false;        // sigma2 hit the 1e-12 floor

  Index dim() const { return b_hat.size(); }
  Index kappa() const { return w_hat.cols(); }
  int active_count() const;

  /// k_j = max(lambda_j, cutoff) for j < kappa.
  Vector k_values() const;

  AffineDecoder decoder() const { return AffineDecoder{w_hat, b_hat}; }
};

/// Optimal variational parameters at the MLE: the shared covariance and the
/// affine map x -> mu_z(x) on raw (untransformed) inputs.
struct VariationalOptima {
  Matrix sigma_z;        // kappa x kappa, positive definite
  Matrix mu_map_weight;  // kappa x d
  Vector mu_map_bias;    // kappa

  Vector mu(const Vector& x) const { return mu_map_weight * x + mu_map_bias; }
};

/// Bracket for the second-order Taylor remainder at one latent point.
struct RemainderBounds {
  double lower = 0.0;
  double upper = 0.0;
  double m_low = 0.0;   // M bracket, Binomial/Bernoulli affine case
  double m_high = 0.0;
};

/// Least-squares point of the decoder kernel (w z0 = -b) and whether the
/// solve is exact, i.e. whether b lies in the column span of w.
struct KernelPoint {
  Vector z0;
  bool exact = false;
};

/// Elementwise y = (x - F'(0)) / F''(0) over the rows of x.
Matrix transform_data(const Matrix& x, const EdfFamily& family);
Vector transform_point(const Vector& x, const EdfFamily& family);

/// Closed-form MLE of (W, b) for the approximate objective.  For the
/// Gaussian family the dispersion is estimated first (the trailing-
/// eigenvalue average), then used in the cut-off and the column scaling;
/// other families keep phi = 1.  Requires F''(0) <= 1 and, for the
/// Gaussian estimator, beta < d / kappa.
MleSolution mle_fit(const Matrix& x, const EdfFamily& family, double beta,
                    Index kappa, const Matrix& rotation);
MleSolution mle_fit(const Matrix& x, const EdfFamily& family, double beta,
                    Index kappa);

/// Optimal variational parameters at an MLE solution.  `x_bar` is the raw
/// sample mean of the training data.
VariationalOptima variational_optima(const MleSolution& sol,
                                     const Vector& x_bar);

/// Optimal variational parameters for an arbitrary affine decoder:
/// Sigma = (I + F''(0)/(beta*phi) W^T W)^-1 and mu_i = F''(0)/(beta*phi)
/// Sigma W^T (y_i - b).  Row i of `mu` belongs to data row i.
struct DecoderVariationalOptima {
  Matrix sigma_z;  // kappa x kappa
  Matrix mu;       // N x kappa
};
DecoderVariationalOptima decoder_variational_optima(const AffineDecoder& dec,
                                                    const Matrix& x,
                                                    const EdfFamily& family,
                                                    double beta);

/// The approximate objective evaluated at its optimal variational
/// parameters:
///
///   -1/2 ( tr(C^-1 S) + beta log|C| + beta d log(F''(0)/phi) + D(phi) )
///
/// with C = phi/F''(0) I + WW^T/beta and S the second-moment matrix of the
/// transformed data about b.
double objective_hat(const AffineDecoder& dec, const Matrix& x,
                     const EdfFamily& family, double beta);

/// The approximate objective at explicit variational parameters: per-datum
/// second-order Taylor surrogate of the expected log density (expansion
/// point in the decoder kernel) minus beta times the KL term.  `sigma_z`
/// holds either one shared covariance or one per data row.
double approx_objective_general(const AffineDecoder& dec,
                                const std::vector<Vector>& mu_z,
                                const std::vector<Matrix>& sigma_z,
                                const Matrix& x, const EdfFamily& family,
                                double beta);

/// KL( N(mu, sigma) || N(0, I) ) = (tr sigma - log|sigma| + |mu|^2 - k)/2.
double kl_diag_gaussian(const Vector& mu, const Matrix& sigma);

/// Predicted activity per latent dimension:
/// (lambda_j - cutoff)/lambda_j above the cut-off, else 0.
Vector activity_predict(const MleSolution& sol);

/// Taylor remainder bracket at latent point z.
RemainderBounds remainder_bounds(const AffineDecoder& dec, const Vector& z,
                                 const EdfFamily& family);

/// Expected upper remainder (M = 1) under z ~ N(mu_i, sigma), averaged over
/// the rows of `mu`.  Closed form for Binomial/Bernoulli via fourth Gaussian
/// moments; Monte Carlo with a fixed seed for Poisson; 0 for Gaussian.
double expected_remainder(const AffineDecoder& dec, const Matrix& mu,
                          const Matrix& sigma, const EdfFamily& family);

KernelPoint kernel_point(const AffineDecoder& dec);

}  // namespace edfvae
