#include "edfvae/edf.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace edfvae {

namespace {

void check_finite(double theta) {
  if (!std::isfinite(theta)) {
    throw std::domain_error("edf: non-finite natural parameter");
  }
}

// log(1 + exp(t)) without overflow for large |t|.
double softplus(double t) {
  if (t > 0.0) {
    return t + std::log1p(std::exp(-t));
  }
  return std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double log_factorial(double x) { return std::lgamma(x + 1.0); }

double log_binomial_coeff(double n, double x) {
  return log_factorial(n) - log_factorial(x) - log_factorial(n - x);
}

}  // namespace

EdfFamily EdfFamily::gaussian(double sigma2) {
  if (!(sigma2 > 0.0)) {
    throw std::invalid_argument("edf: sigma2 must be positive");
  }
  return EdfFamily{FamilyKind::kGaussian, 1, sigma2, 1.0};
}

EdfFamily EdfFamily::bernoulli(double rho) {
  if (rho == 0.0) {
    throw std::invalid_argument("edf: rho must be nonzero");
  }
  return EdfFamily{FamilyKind::kBernoulli, 1, 1.0, rho};
}

EdfFamily EdfFamily::binomial(int trials) {
  if (trials < 1) {
    throw std::invalid_argument("edf: binomial trials must be >= 1");
  }
  return EdfFamily{FamilyKind::kBinomial, trials, 1.0, 1.0};
}

EdfFamily EdfFamily::poisson() {
  return EdfFamily{FamilyKind::kPoisson, 1, 1.0, 1.0};
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kGaussian: return "gaussian";
    case FamilyKind::kBernoulli: return "bernoulli";
    case FamilyKind::kBinomial: return "binomial";
    case FamilyKind::kPoisson: return "poisson";
  }
  throw std::logic_error("edf: unknown family kind");
}

FamilyKind family_kind_from_string(const std::string& name) {
  if (name == "gaussian") return FamilyKind::kGaussian;
  if (name == "bernoulli") return FamilyKind::kBernoulli;
  if (name == "binomial") return FamilyKind::kBinomial;
  if (name == "poisson") return FamilyKind::kPoisson;
  throw std::invalid_argument("edf: unknown family '" + name + "'");
}

double log_normalizer(const EdfFamily& family, double theta) {
  check_finite(theta);
  switch (family.kind) {
    case FamilyKind::kGaussian: return 0.5 * theta * theta;
    case FamilyKind::kBernoulli: return softplus(theta);
    case FamilyKind::kBinomial: return family.trials_n * softplus(theta);
    case FamilyKind::kPoisson: return std::exp(theta);
  }
  throw std::logic_error("edf: unknown family kind");
}

double log_normalizer_d1(const EdfFamily& family, double theta) {
  check_finite(theta);
  switch (family.kind) {
    case FamilyKind::kGaussian: return theta;
    case FamilyKind::kBernoulli: return sigmoid(theta);
    case FamilyKind::kBinomial: return family.trials_n * sigmoid(theta);
    case FamilyKind::kPoisson: return std::exp(theta);
  }
  throw std::logic_error("edf: unknown family kind");
}

double log_normalizer_d2(const EdfFamily& family, double theta) {
  check_finite(theta);
  switch (family.kind) {
    case FamilyKind::kGaussian: return 1.0;
    case FamilyKind::kBernoulli: {
      const double p = sigmoid(theta);
      return p * (1.0 - p);
    }
    case FamilyKind::kBinomial: {
      const double p = sigmoid(theta);
      return family.trials_n * p * (1.0 - p);
    }
    case FamilyKind::kPoisson: return std::exp(theta);
  }
  throw std::logic_error("edf: unknown family kind");
}

double mean_response(const EdfFamily& family, double theta) {
  return log_normalizer_d1(family, family.canonical_scale_rho * theta);
}

double variance_response(const EdfFamily& family, double theta) {
  return log_normalizer_d2(family, theta);
}

double log_base_measure(const EdfFamily& family, double x) {
  switch (family.kind) {
    case FamilyKind::kGaussian:
      return -x * x / (2.0 * family.dispersion_phi) -
             0.5 * std::log(2.0 * std::numbers::pi * family.dispersion_phi);
    case FamilyKind::kBernoulli:
      return 0.0;
    case FamilyKind::kBinomial:
      return log_binomial_coeff(family.trials_n, x);
    case FamilyKind::kPoisson:
      return -log_factorial(x);
  }
  throw std::logic_error("edf: unknown family kind");
}

bool in_support(const EdfFamily& family, double x) {
  if (!std::isfinite(x)) {
    return false;
  }
  switch (family.kind) {
    case FamilyKind::kGaussian: return true;
    case FamilyKind::kBernoulli: return x >= 0.0 && x <= 1.0;
    case FamilyKind::kBinomial: return x >= 0.0 && x <= family.trials_n;
    case FamilyKind::kPoisson: return x >= 0.0;
  }
  return false;
}

double log_density(const EdfFamily& family, double x, double theta) {
  if (!in_support(family, x)) {
    throw std::domain_error("edf: observation outside family support");
  }
  const double f = log_normalizer(family, theta);
  return (x * theta - f) / family.dispersion_phi + log_base_measure(family, x);
}

EdfConstants constants(const EdfFamily& family) {
  return EdfConstants{log_normalizer(family, 0.0),
                      log_normalizer_d1(family, 0.0),
                      log_normalizer_d2(family, 0.0)};
}

}  // namespace edfvae
