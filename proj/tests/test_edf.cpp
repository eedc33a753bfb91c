#include <doctest.h>

#include <cmath>
#include <numbers>

#include "edfvae/edf.hpp"

using namespace edfvae;

namespace {

const EdfFamily kGauss = EdfFamily::gaussian();
const EdfFamily kBern = EdfFamily::bernoulli();
const EdfFamily kBin3 = EdfFamily::binomial(3);
const EdfFamily kPois = EdfFamily::poisson();

}  // namespace

TEST_CASE("log-normalizer constants match the family table") {
  const EdfConstants bern = constants(kBern);
  CHECK(bern.f0 == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(bern.f1 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(bern.f2 == doctest::Approx(0.25).epsilon(1e-14));

  const EdfConstants gauss = constants(kGauss);
  CHECK(gauss.f0 == 0.0);
  CHECK(gauss.f1 == 0.0);
  CHECK(gauss.f2 == 1.0);

  const EdfConstants pois = constants(kPois);
  CHECK(pois.f0 == 1.0);
  CHECK(pois.f1 == 1.0);
  CHECK(pois.f2 == 1.0);

  // Bernoulli is Binomial with a single trial.
  const EdfConstants bin1 = constants(EdfFamily::binomial(1));
  CHECK(bin1.f0 == bern.f0);
  CHECK(bin1.f1 == bern.f1);
  CHECK(bin1.f2 == bern.f2);
}

TEST_CASE("log_normalizer examples") {
  CHECK(log_normalizer(kBern, 0.0) ==
        doctest::Approx(0.6931471805599453).epsilon(1e-12));
  CHECK(log_normalizer(kGauss, 0.0) == 0.0);
  CHECK(log_normalizer(kPois, 0.0) == 1.0);
  CHECK_THROWS_AS(log_normalizer(kBern, std::nan("")), std::domain_error);
  // Large theta must not overflow.
  CHECK(log_normalizer(kBern, 40.0) == doctest::Approx(40.0).epsilon(1e-12));
  CHECK(log_normalizer(kBern, -40.0) ==
        doctest::Approx(std::exp(-40.0)).epsilon(1e-6));
}

TEST_CASE("mean_response examples") {
  CHECK(mean_response(kBern, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mean_response(kGauss, 2.0) == doctest::Approx(2.0).epsilon(1e-14));
  const EdfFamily tanh_bern = EdfFamily::bernoulli(2.0);
  CHECK(mean_response(tanh_bern, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("linearly canonical rho=2 equals the tanh activation") {
  const EdfFamily tanh_bern = EdfFamily::bernoulli(2.0);
  for (double theta = -6.0; theta <= 6.0; theta += 0.11) {
    const double via_family = mean_response(tanh_bern, theta);
    const double via_tanh = 0.5 * std::tanh(theta) + 0.5;
    CHECK(via_family == doctest::Approx(via_tanh).epsilon(1e-12));
  }
}

TEST_CASE("variance_response examples") {
  CHECK(variance_response(kBern, 0.0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(variance_response(kPois, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(variance_response(kGauss, 7.3) == 1.0);
}

TEST_CASE("log_density examples") {
  CHECK(log_density(kGauss, 0.0, 0.0) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi))
            .epsilon(1e-12));
  CHECK(log_density(kBern, 1.0, 0.0) ==
        doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  CHECK(log_density(kPois, 0.0, 0.0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS_AS(log_density(kBern, 2.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(log_density(kPois, -1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(log_density(kBin3, 4.0, 0.0), std::domain_error);
}

TEST_CASE("finite differences confirm F' and F'' on a grid") {
  const double h = 1e-4;
  for (const EdfFamily& family : {kGauss, kBern, kBin3, kPois}) {
    for (double theta = -5.0; theta <= 5.0; theta += 0.25) {
      const double fd1 = (log_normalizer(family, theta + h) -
                          log_normalizer(family, theta - h)) /
                         (2.0 * h);
      CHECK(std::abs(log_normalizer_d1(family, theta) - fd1) <= 1e-6);
      const double fd2 = (log_normalizer_d1(family, theta + h) -
                          log_normalizer_d1(family, theta - h)) /
                         (2.0 * h);
      CHECK(std::abs(log_normalizer_d2(family, theta) - fd2) <= 1e-6);
      CHECK(log_normalizer_d2(family, theta) > 0.0);
    }
  }
}

TEST_CASE("discrete densities are normalized") {
  for (double theta : {-2.0, 0.0, 2.0}) {
    double bern_mass = 0.0;
    for (double x : {0.0, 1.0}) {
      bern_mass += std::exp(log_density(kBern, x, theta));
    }
    CHECK(bern_mass == doctest::Approx(1.0).epsilon(1e-10));

    double bin_mass = 0.0;
    for (double x = 0.0; x <= 3.0; x += 1.0) {
      bin_mass += std::exp(log_density(kBin3, x, theta));
    }
    CHECK(bin_mass == doctest::Approx(1.0).epsilon(1e-10));

    double pois_mass = 0.0;
    for (double x = 0.0; x <= 200.0; x += 1.0) {
      pois_mass += std::exp(log_density(kPois, x, theta));
    }
    CHECK(pois_mass == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("family parsing round-trips") {
  for (FamilyKind kind : {FamilyKind::kGaussian, FamilyKind::kBernoulli,
                          FamilyKind::kBinomial, FamilyKind::kPoisson}) {
    CHECK(family_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(family_kind_from_string("gamma"), std::invalid_argument);
}

TEST_CASE("family constructors reject bad parameters") {
  CHECK_THROWS_AS(EdfFamily::gaussian(0.0), std::invalid_argument);
  CHECK_THROWS_AS(EdfFamily::binomial(0), std::invalid_argument);
  CHECK_THROWS_AS(EdfFamily::bernoulli(0.0), std::invalid_argument);
}
