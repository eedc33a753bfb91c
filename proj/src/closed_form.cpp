#include "edfvae/closed_form.hpp"

#include <cmath>
#include <stdexcept>

#include "edfvae/numerics.hpp"
#include "edfvae/rng.hpp"

namespace edfvae {

namespace {

void check_rotation(const Matrix& r, Index kappa) {
  if (r.rows() != kappa || r.cols() != kappa) {
    throw std::invalid_argument("mle_fit: rotation must be kappa x kappa");
  }
  const Matrix gram = r.transpose() * r;
  if ((gram - Matrix::Identity(kappa, kappa)).cwiseAbs().maxCoeff() > 1e-8) {
    throw std::invalid_argument("mle_fit: rotation must be orthogonal");
  }
}

double logdet_llt(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::LLT<Matrix> llt_or_throw(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument(what);
  }
  return llt;
}

/// D(phi): constant block of the approximate objective.
double dispersion_term(const Matrix& x, const EdfFamily& family) {
  const EdfConstants c = constants(family);
  const double phi = family.dispersion_phi;
  const Index n = x.rows();
  const Index d = x.cols();
  double mean_part = 0.0;
  for (Index i = 0; i < n; ++i) {
    double k_sum = 0.0;
    for (Index j = 0; j < d; ++j) {
      k_sum += log_base_measure(family, x(i, j));
    }
    const double sq = (x.row(i).transpose() - Vector::Constant(d, c.f1))
                          .squaredNorm();
    mean_part += sq / (c.f2 * phi) + 2.0 * k_sum;
  }
  mean_part /= static_cast<double>(n);
  return 2.0 * static_cast<double>(d) / phi * c.f0 - mean_part;
}

}  // namespace

int MleSolution::active_count() const {
  int count = 0;
  for (bool active : active_mask) {
    count += active ? 1 : 0;
  }
  return count;
}

Vector MleSolution::k_values() const {
  Vector k(kappa());
  for (Index j = 0; j < kappa(); ++j) {
    k[j] = std::max(eigenvalues[j], cutoff);
  }
  return k;
}

Matrix transform_data(const Matrix& x, const EdfFamily& family) {
  const EdfConstants c = constants(family);
  return (x.array() - c.f1) / c.f2;
}

Vector transform_point(const Vector& x, const EdfFamily& family) {
  const EdfConstants c = constants(family);
  return (x.array() - c.f1) / c.f2;
}

MleSolution mle_fit(const Matrix& x, const EdfFamily& family, double beta,
                    Index kappa, const Matrix& rotation) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (n < 1 || d < 1) {
    throw std::invalid_argument("mle_fit: empty data");
  }
  if (kappa < 1 || kappa > d) {
    throw std::invalid_argument("mle_fit: kappa must be in [1, d]");
  }
  if (beta < 0.0) {
    throw std::invalid_argument("mle_fit: beta must be >= 0");
  }
  check_rotation(rotation, kappa);

  const EdfConstants c = constants(family);
  if (c.f2 > 1.0 + 1e-12) {
    throw std::invalid_argument(
        "mle_fit: requires F''(0) <= 1 (got a family with F''(0) = " +
        std::to_string(c.f2) + ")");
  }

  MleSolution sol;
  sol.beta = beta;
  sol.family = family;
  sol.rotation_r = rotation;

  const Matrix y = transform_data(x, family);
  sol.b_hat = y.colwise().mean().transpose();

  const Matrix s_hat = sample_covariance(y, sol.b_hat);
  const EigenDecomposition eig = sym_eig(s_hat);
  sol.eigenvalues = eig.eigenvalues;

  double phi = family.dispersion_phi;
  if (family.kind == FamilyKind::kGaussian) {
    if (beta >= static_cast<double>(d) / static_cast<double>(kappa)) {
      throw std::invalid_argument(
          "mle_fit: sigma estimator undefined for beta >= d/kappa");
    }
    double tail = 0.0;
    for (Index i = kappa; i < d; ++i) {
      tail += sol.eigenvalues[i];
    }
    double sigma2 = tail / (static_cast<double>(d) -
                            beta * static_cast<double>(kappa));
    if (sigma2 < 1e-12) {
      sigma2 = 1e-12;
      sol.degenerate = true;
    }
    sol.sigma2_hat = sigma2;
    phi = sigma2;
    sol.family.dispersion_phi = sigma2;
  } else {
    phi = 1.0;
    sol.family.dispersion_phi = 1.0;
  }

  sol.cutoff = beta * phi / c.f2;

  Vector scale(kappa);
  sol.active_mask.resize(static_cast<std::size_t>(kappa));
  for (Index j = 0; j < kappa; ++j) {
    const double excess = sol.eigenvalues[j] - sol.cutoff;
    scale[j] = excess > 0.0 ? std::sqrt(excess) : 0.0;
    sol.active_mask[static_cast<std::size_t>(j)] =
        sol.eigenvalues[j] > sol.cutoff;
  }
  sol.w_hat = eig.eigenvectors.leftCols(kappa) * scale.asDiagonal() * rotation;
  return sol;
}

MleSolution mle_fit(const Matrix& x, const EdfFamily& family, double beta,
                    Index kappa) {
  return mle_fit(x, family, beta, kappa, Matrix::Identity(kappa, kappa));
}

VariationalOptima variational_optima(const MleSolution& sol,
                                     const Vector& x_bar) {
  if (sol.cutoff <= 0.0) {
    throw std::invalid_argument(
        "variational_optima: undefined for beta = 0 (zero cut-off)");
  }
  const Index kappa = sol.kappa();
  const Vector k = sol.k_values();
  const Vector k_inv = k.cwiseInverse();

  VariationalOptima opt;
  opt.sigma_z = sol.cutoff * sol.rotation_r.transpose() * k_inv.asDiagonal() *
                sol.rotation_r;

  // w_hat R^T = U diag(l) with l_j the per-column factors, so row j of
  // K^-1 L U^T equals column j of w_hat R^T divided by k_j; pruned columns
  // are zero and stay zero.
  const Matrix ul = sol.w_hat * sol.rotation_r.transpose();
  Matrix rows(kappa, sol.dim());
  for (Index j = 0; j < kappa; ++j) {
    rows.row(j) = ul.col(j).transpose() * k_inv[j];
  }
  const double f2 = constants(sol.family).f2;
  opt.mu_map_weight = sol.rotation_r.transpose() * rows / f2;
  opt.mu_map_bias = -opt.mu_map_weight * x_bar;
  return opt;
}

DecoderVariationalOptima decoder_variational_optima(const AffineDecoder& dec,
                                                    const Matrix& x,
                                                    const EdfFamily& family,
                                                    double beta) {
  if (beta <= 0.0) {
    throw std::invalid_argument(
        "decoder_variational_optima: beta must be > 0");
  }
  const Index kappa = dec.w.cols();
  const double f2 = constants(family).f2;
  const double ratio = f2 / (beta * family.dispersion_phi);

  const Matrix gram = dec.w.transpose() * dec.w;
  const Matrix precision = Matrix::Identity(kappa, kappa) + ratio * gram;
  const Eigen::LLT<Matrix> llt =
      llt_or_throw(precision, "decoder_variational_optima: singular system");

  DecoderVariationalOptima out;
  out.sigma_z = llt.solve(Matrix::Identity(kappa, kappa));

  const Matrix y = transform_data(x, family);
  const Matrix centered = y.rowwise() - dec.b.transpose();
  out.mu = ratio * (centered * dec.w) * out.sigma_z.transpose();
  return out;
}

double objective_hat(const AffineDecoder& dec, const Matrix& x,
                     const EdfFamily& family, double beta) {
  if (beta <= 0.0) {
    throw std::invalid_argument("objective_hat: beta must be > 0");
  }
  if (dec.w.rows() != x.cols() || dec.b.size() != x.cols()) {
    throw std::invalid_argument("objective_hat: decoder/data dim mismatch");
  }
  const Index n = x.rows();
  const Index d = x.cols();
  const Index kappa = dec.w.cols();
  const EdfConstants c = constants(family);
  const double phi = family.dispersion_phi;
  const double a = phi / c.f2;  // isotropic part of C

  const Matrix y = transform_data(x, family);
  const Matrix centered = y.rowwise() - dec.b.transpose();

  // C = a I + W W^T / beta; work in the kappa x kappa companion
  // M = a beta I + W^T W, so C^-1 = (I - W M^-1 W^T)/a and
  // log|C| = d log a + log|M| - kappa log(a beta).
  const Matrix gram = dec.w.transpose() * dec.w;
  const Matrix m = a * beta * Matrix::Identity(kappa, kappa) + gram;
  const Eigen::LLT<Matrix> llt = llt_or_throw(m, "objective_hat: singular C");

  const Matrix z = centered * dec.w;  // N x kappa
  const Matrix solved = llt.solve(z.transpose()).transpose();
  const double quad =
      (centered.squaredNorm() - (z.array() * solved.array()).sum()) /
      (a * static_cast<double>(n));

  const double logdet_c = static_cast<double>(d) * std::log(a) +
                          logdet_llt(llt) -
                          static_cast<double>(kappa) * std::log(a * beta);

  const double d_phi = dispersion_term(x, family);
  const double log_ratio = std::log(c.f2 / phi);
  return -0.5 * (quad + beta * logdet_c +
                 beta * static_cast<double>(d) * log_ratio + d_phi);
}

double approx_objective_general(const AffineDecoder& dec,
                                const std::vector<Vector>& mu_z,
                                const std::vector<Matrix>& sigma_z,
                                const Matrix& x, const EdfFamily& family,
                                double beta) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (static_cast<Index>(mu_z.size()) != n) {
    throw std::invalid_argument("approx_objective_general: need one mu per row");
  }
  if (sigma_z.size() != 1 && static_cast<Index>(sigma_z.size()) != n) {
    throw std::invalid_argument(
        "approx_objective_general: sigma_z must be shared or one per row");
  }
  const EdfConstants c = constants(family);
  const double phi = family.dispersion_phi;
  const double curvature = c.f2 / phi;
  const Matrix gram = dec.w.transpose() * dec.w;
  const Matrix y = transform_data(x, family);

  double total = 0.0;
  double shared_trace = 0.0;
  if (sigma_z.size() == 1) {
    shared_trace = (gram * sigma_z[0]).trace();
  }
  for (Index i = 0; i < n; ++i) {
    const Matrix& sigma = sigma_z.size() == 1 ? sigma_z[0] : sigma_z[i];
    const double trace_term =
        sigma_z.size() == 1 ? shared_trace : (gram * sigma).trace();
    const Vector theta = dec.w * mu_z[i] + dec.b;

    double base = 0.0;
    for (Index j = 0; j < d; ++j) {
      base += log_base_measure(family, x(i, j));
    }
    base -= static_cast<double>(d) * c.f0 / phi;

    const double linear = curvature * y.row(i).dot(theta);
    const double quad = 0.5 * curvature * (trace_term + theta.squaredNorm());
    const double kl = kl_diag_gaussian(mu_z[i], sigma);
    total += base + linear - quad - beta * kl;
  }
  return total / static_cast<double>(n);
}

double kl_diag_gaussian(const Vector& mu, const Matrix& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != mu.size()) {
    throw std::invalid_argument("kl_diag_gaussian: dimension mismatch");
  }
  const Eigen::LLT<Matrix> llt =
      llt_or_throw(sigma, "kl_diag_gaussian: sigma not positive definite");
  const double k = static_cast<double>(mu.size());
  return 0.5 * (sigma.trace() - logdet_llt(llt) + mu.squaredNorm() - k);
}

Vector activity_predict(const MleSolution& sol) {
  Vector activity = Vector::Zero(sol.kappa());
  for (Index j = 0; j < sol.kappa(); ++j) {
    const double lambda = sol.eigenvalues[j];
    if (lambda > sol.cutoff) {
      activity[j] = (lambda - sol.cutoff) / lambda;
    }
  }
  return activity;
}

RemainderBounds remainder_bounds(const AffineDecoder& dec, const Vector& z,
                                 const EdfFamily& family) {
  const Vector theta = dec.w * z + dec.b;
  RemainderBounds bounds;
  switch (family.kind) {
    case FamilyKind::kGaussian:
      return bounds;
    case FamilyKind::kBernoulli:
    case FamilyKind::kBinomial: {
      const double n = static_cast<double>(family.trials());
      bounds.lower = 0.0;
      bounds.upper = n / 192.0 * theta.array().pow(4).sum();
      bounds.m_low = 0.0;
      bounds.m_high = 1.0;
      return bounds;
    }
    case FamilyKind::kPoisson: {
      double lower = 0.0;
      double upper = 0.0;
      for (Index j = 0; j < theta.size(); ++j) {
        const double t = theta[j];
        const double cube = t * t * t;
        lower += -cube * std::exp(t) / 6.0;
        upper += -cube / 6.0;
      }
      bounds.lower = lower;
      bounds.upper = upper;
      return bounds;
    }
  }
  throw std::invalid_argument("remainder_bounds: unsupported family");
}

double expected_remainder(const AffineDecoder& dec, const Matrix& mu,
                          const Matrix& sigma, const EdfFamily& family) {
  const Index n_rows = mu.rows();
  const Index d = dec.w.rows();
  if (n_rows < 1) {
    throw std::invalid_argument("expected_remainder: need at least one mu");
  }
  switch (family.kind) {
    case FamilyKind::kGaussian:
      return 0.0;
    case FamilyKind::kBernoulli:
    case FamilyKind::kBinomial: {
      const double trials = static_cast<double>(family.trials());
      Vector var(d);
      for (Index j = 0; j < d; ++j) {
        var[j] = dec.w.row(j) * sigma * dec.w.row(j).transpose();
      }
      double total = 0.0;
      const Matrix means =
          (mu * dec.w.transpose()).rowwise() + dec.b.transpose();
      for (Index i = 0; i < n_rows; ++i) {
        for (Index j = 0; j < d; ++j) {
          total += gaussian_raw_moment(means(i, j), var[j], 4);
        }
      }
      return trials / 192.0 * total / static_cast<double>(n_rows);
    }
    case FamilyKind::kPoisson: {
      // Upper bracket under z ~ N(mu_i, sigma), fixed-seed Monte Carlo.
      const Index kappa = dec.w.cols();
      const Eigen::LLT<Matrix> llt =
          llt_or_throw(sigma, "expected_remainder: sigma not positive definite");
      const Matrix chol = llt.matrixL();
      Rng rng(0x9d2c5680u);
      const Index per_datum =
          std::max<Index>(1, 100000 / std::max<Index>(n_rows, 1));
      double total = 0.0;
      for (Index i = 0; i < n_rows; ++i) {
        for (Index s = 0; s < per_datum; ++s) {
          const Vector z =
              mu.row(i).transpose() + chol * rng.normal_vector(kappa);
          const Vector theta = dec.w * z + dec.b;
          total += -theta.array().pow(3).sum() / 6.0;
        }
      }
      return total / static_cast<double>(n_rows * per_datum);
    }
  }
  throw std::invalid_argument("expected_remainder: unsupported family");
}

KernelPoint kernel_point(const AffineDecoder& dec) {
  KernelPoint point;
  point.z0 = dec.w.colPivHouseholderQr().solve(-dec.b);
  const double residual = (dec.w * point.z0 + dec.b).norm();
  point.exact = residual <= 1e-8 * (1.0 + dec.b.norm());
  return point;
}

}  // namespace edfvae
