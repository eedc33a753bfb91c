#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "edfvae/data.hpp"
#include "edfvae/edf.hpp"
#include "edfvae/nn.hpp"

using namespace edfvae;

namespace {

Matrix batch_for_family(const EdfFamily& family, Rng& rng, Index n, Index d) {
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) {
      switch (family.kind) {
        case FamilyKind::kGaussian:
          x(i, j) = rng.normal();
          break;
        case FamilyKind::kBernoulli:
          x(i, j) = rng.bernoulli(0.5) ? 1.0 : 0.0;
          break;
        case FamilyKind::kBinomial:
          x(i, j) = static_cast<double>(rng.uniform_int(
              static_cast<std::uint64_t>(family.trials_n + 1)));
          break;
        case FamilyKind::kPoisson:
          x(i, j) = static_cast<double>(rng.uniform_int(4));
          break;
      }
    }
  }
  return x;
}

VaeModel small_model(const EdfFamily& family, Activation hidden, double beta,
                     Rng& rng) {
  VaeModel model = build_architecture(ArchitectureKind::kCanonical, 6, 2,
                                      family, 0.003, beta);
  // Rebuild with the requested hidden activation and a narrower stack.
  model.encoder_trunk.clear();
  model.encoder_trunk.push_back(
      DenseLayer{Matrix::Zero(5, 6), Vector::Zero(5), hidden});
  model.mu_head = DenseLayer{Matrix::Zero(2, 5), Vector::Zero(2),
                             Activation::kLinear};
  model.logvar_head = DenseLayer{Matrix::Zero(2, 5), Vector::Zero(2),
                                 Activation::kLinear};
  const Activation out_act = model.decoder.back().act;
  model.decoder.clear();
  model.decoder.push_back(
      DenseLayer{Matrix::Zero(4, 2), Vector::Zero(4), hidden});
  model.decoder.push_back(
      DenseLayer{Matrix::Zero(6, 4), Vector::Zero(6), out_act});
  init_bench(model, rng);
  // Keep pre-activations small (the Poisson likelihood is exp-scaled, so
  // large values wreck finite-difference precision) and nudge biases off
  // zero so ReLU kinks sit away from the probe points.
  for (DenseLayer* layer : layer_pointers(model)) {
    layer->w *= 0.3;
    layer->b.array() += 0.07;
  }
  model.logvar_head.b.array() = -0.5;
  return model;
}

double elbo_value_only(const VaeModel& model, const Matrix& batch,
                       std::uint64_t noise_seed) {
  Rng rng(noise_seed);
  ModelGrads grads = zero_grads(const_cast<VaeModel&>(model));
  return elbo_minibatch(model, batch, rng, grads, 1);
}

struct FdResult {
  double max_rel_err = 0.0;
};

FdResult finite_difference_check(VaeModel& model, const Matrix& batch,
                                 std::uint64_t noise_seed) {
  ModelGrads grads = zero_grads(model);
  {
    Rng rng(noise_seed);
    elbo_minibatch(model, batch, rng, grads, 1);
  }
  const double h = 1e-5;
  FdResult result;
  const std::vector<DenseLayer*> layers = layer_pointers(model);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto probe = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + h;
      const double up = elbo_value_only(model, batch, noise_seed);
      param = saved - h;
      const double down = elbo_value_only(model, batch, noise_seed);
      param = saved;
      const double fd = (up - down) / (2.0 * h);
      const double rel = std::abs(analytic - fd) /
                         std::max({1.0, std::abs(analytic), std::abs(fd)});
      result.max_rel_err = std::max(result.max_rel_err, rel);
    };
    for (Index i = 0; i < layers[l]->w.rows(); ++i) {
      for (Index j = 0; j < layers[l]->w.cols(); ++j) {
        probe(layers[l]->w(i, j), grads[l].w(i, j));
      }
    }
    for (Index i = 0; i < layers[l]->b.size(); ++i) {
      probe(layers[l]->b[i], grads[l].b[i]);
    }
  }
  return result;
}

}  // namespace

TEST_CASE("backprop matches central finite differences everywhere") {
  const std::vector<EdfFamily> families = {
      EdfFamily::gaussian(0.7), EdfFamily::bernoulli(),
      EdfFamily::bernoulli(2.0), EdfFamily::binomial(3),
      EdfFamily::poisson()};
  const std::vector<Activation> hiddens = {
      Activation::kRelu, Activation::kLinear, Activation::kSigmoid,
      Activation::kTanhCanonical};
  std::uint64_t seed = 1000;
  for (const EdfFamily& family : families) {
    for (Activation hidden : hiddens) {
      for (double beta : {0.0, 1.5}) {
        Rng rng(++seed);
        VaeModel model = small_model(family, hidden, beta, rng);
        const Matrix batch = batch_for_family(family, rng, 3, 6);
        const FdResult fd = finite_difference_check(model, batch, seed * 31);
        INFO("family ", to_string(family.kind), " hidden ",
             to_string(hidden), " beta ", beta);
        CHECK(fd.max_rel_err <= 1e-4);
      }
    }
  }
}

TEST_CASE("elbo hand example: perfect Gaussian reconstruction") {
  const Index d = 3;
  const double phi = 1.3;
  VaeModel model;
  model.family = EdfFamily::gaussian(phi);
  model.beta = 1.0;
  model.kappa = 2;
  model.input_dim = d;
  Matrix x(1, d);
  x << 0.2, -0.4, 1.1;
  model.mu_head =
      DenseLayer{Matrix::Zero(2, d), Vector::Zero(2), Activation::kLinear};
  model.logvar_head =
      DenseLayer{Matrix::Zero(2, d), Vector::Zero(2), Activation::kLinear};
  model.decoder.push_back(DenseLayer{Matrix::Zero(d, 2), x.row(0).transpose(),
                                     Activation::kLinear});
  Rng rng(5);
  ModelGrads grads = zero_grads(model);
  const double value = elbo_minibatch(model, x, rng, grads, 1);
  const double expected =
      -0.5 * d * std::log(2.0 * std::numbers::pi * phi);
  CHECK(value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("beta only enters through the KL term") {
  // Encoder pinned to the prior: mu = 0, logvar = 0 makes the KL exactly
  // zero, so the ELBO is beta-independent.
  Rng rng(6);
  VaeModel model = build_architecture(ArchitectureKind::kCanonical, 5, 2,
                                      EdfFamily::bernoulli(), 0.003, 1.0);
  init_bench(model, rng);
  model.mu_head.w.setZero();
  model.mu_head.b.setZero();
  model.logvar_head.w.setZero();
  model.logvar_head.b.setZero();
  const Matrix batch = batch_for_family(EdfFamily::bernoulli(), rng, 4, 5);
  ModelGrads grads = zero_grads(model);
  Rng noise_a(77);
  const double at_one = elbo_minibatch(model, batch, noise_a, grads, 1);
  model.beta = 5.0;
  Rng noise_b(77);
  const double at_five = elbo_minibatch(model, batch, noise_b, grads, 1);
  CHECK(at_one == doctest::Approx(at_five).epsilon(1e-14));
}

TEST_CASE("decoder final activation equals the family mean response") {
  Rng rng(7);
  const std::vector<EdfFamily> families = {
      EdfFamily::gaussian(), EdfFamily::bernoulli(), EdfFamily::bernoulli(2.0),
      EdfFamily::poisson()};
  for (const EdfFamily& family : families) {
    VaeModel model = build_architecture(ArchitectureKind::kCanonical, 4, 2,
                                        family, 0.002, 1.0);
    init_bench(model, rng);
    const Matrix z = 0.5 * rng.normal_matrix(6, 2);
    const Matrix pre = model.decode_preactivation(z);
    const Matrix mean = model.decode_mean(z);
    for (Index i = 0; i < pre.rows(); ++i) {
      for (Index j = 0; j < pre.cols(); ++j) {
        CHECK(std::abs(mean(i, j) - mean_response(family, pre(i, j))) <=
              1e-12);
      }
    }
  }
}

TEST_CASE("build_architecture produces the documented shapes") {
  const VaeModel canonical =
      build_architecture(ArchitectureKind::kCanonical, 200, 2,
                         EdfFamily::bernoulli(), 1.0, 1.0);
  CHECK(canonical.decoder.size() == 1);
  CHECK(canonical.decoder[0].act == Activation::kSigmoid);
  CHECK(canonical.decoder[0].in_dim() == 2);
  CHECK(canonical.decoder[0].out_dim() == 200);
  CHECK(canonical.encoder_trunk[0].out_dim() == 2000);
  CHECK(canonical.encoder_trunk[1].out_dim() == 200);

  const VaeModel deep = build_architecture(
      ArchitectureKind::kDeep, 784, 20, EdfFamily::gaussian(), 1.0, 1.0);
  CHECK(deep.encoder_trunk[0].out_dim() == 2000);
  CHECK(deep.encoder_trunk[1].out_dim() == 1000);
  CHECK(deep.mu_head.out_dim() == 20);
  CHECK(deep.decoder[0].out_dim() == 1000);
  CHECK(deep.decoder[1].out_dim() == 2000);
  CHECK(deep.decoder[2].out_dim() == 784);
  CHECK(deep.decoder[2].act == Activation::kLinear);

  const VaeModel tiny = build_architecture(
      ArchitectureKind::kCanonical, 4, 2, EdfFamily::bernoulli(), 0.01, 1.0);
  CHECK(tiny.encoder_trunk[0].out_dim() == 20);

  const VaeModel tanh_model = build_architecture(
      ArchitectureKind::kCanonical, 4, 2, EdfFamily::bernoulli(2.0), 0.01,
      1.0);
  CHECK(tanh_model.decoder[0].act == Activation::kTanhCanonical);
}

TEST_CASE("init_bench statistics and determinism") {
  VaeModel model;
  model.family = EdfFamily::gaussian();
  model.kappa = 1;
  model.input_dim = 2;
  model.mu_head = DenseLayer{Matrix::Zero(1, 2), Vector::Zero(1),
                             Activation::kLinear};
  model.logvar_head = DenseLayer{Matrix::Zero(1, 2), Vector::Zero(1),
                                 Activation::kLinear};
  model.decoder.push_back(DenseLayer{Matrix::Zero(50000, 2),
                                     Vector::Zero(50000),
                                     Activation::kLinear});
  Rng rng(123);
  init_bench(model, rng);
  // fan_in = 2 gives He variance 2/2 = 1; 1e5 draws pin it within 5%.
  const double mean = model.decoder[0].w.mean();
  const double var =
      (model.decoder[0].w.array() - mean).square().mean();
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
  CHECK(model.decoder[0].b.cwiseAbs().maxCoeff() == 0.0);

  VaeModel again = model;
  for (DenseLayer* layer : layer_pointers(again)) {
    layer->w.setZero();
  }
  Rng rng2(123);
  init_bench(again, rng2);
  CHECK((again.decoder[0].w - model.decoder[0].w).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("init_mle_b reproduces the closed-form encoder") {
  const Dataset data = synthetic_bernoulli(1500, 50, 31);
  const EdfFamily family = EdfFamily::bernoulli();
  const MleSolution sol = mle_fit(data.train, family, 1.0, 2);
  const Vector x_bar = data.train.colwise().mean().transpose();
  const VariationalOptima opt = variational_optima(sol, x_bar);

  VaeModel model = build_architecture(ArchitectureKind::kCanonical, 50, 2,
                                      family, 0.05, 1.0);
  Rng rng(17);
  init_mle_b(model, sol, x_bar, rng);

  // Decoder output layer carries (w_hat, b_hat).
  CHECK((model.decoder.back().w - sol.w_hat).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((model.decoder.back().b - sol.b_hat).cwiseAbs().maxCoeff() <= 1e-12);

  // Through the identity trunk the mu head is exactly the optimal map.
  const Matrix mu = model.encode_mu(data.train.topRows(40));
  for (Index i = 0; i < 40; ++i) {
    const Vector expected = opt.mu(data.train.row(i).transpose());
    CHECK((mu.row(i).transpose() - expected).cwiseAbs().maxCoeff() <= 1e-10);
  }
  const Matrix logvar = model.encode_logvar(data.train.topRows(5));
  for (Index i = 0; i < 5; ++i) {
    for (Index k = 0; k < 2; ++k) {
      CHECK(logvar(i, k) ==
            doctest::Approx(std::log(opt.sigma_z(k, k))).epsilon(1e-12));
    }
  }

  // Same solution, same seed: identical parameters.
  VaeModel twin = build_architecture(ArchitectureKind::kCanonical, 50, 2,
                                     family, 0.05, 1.0);
  Rng rng_twin(17);
  init_mle_b(twin, sol, x_bar, rng_twin);
  for (std::size_t l = 0; l < layer_pointers(model).size(); ++l) {
    CHECK((layer_pointers(model)[l]->w - layer_pointers(twin)[l]->w)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("init_mle_b with a fully pruned solution collapses the encoder") {
  Matrix x = Matrix::Zero(30, 45);
  x.leftCols(20).setOnes();
  const EdfFamily family = EdfFamily::bernoulli();
  const MleSolution sol = mle_fit(x, family, 1.0, 2);
  REQUIRE(sol.active_count() == 0);
  VaeModel model = build_architecture(ArchitectureKind::kCanonical, 45, 2,
                                      family, 0.03, 1.0);
  Rng rng(19);
  const Vector x_bar = x.colwise().mean().transpose();
  init_mle_b(model, sol, x_bar, rng);
  CHECK(model.mu_head.w.cwiseAbs().maxCoeff() == 0.0);
  CHECK(model.mu_head.b.cwiseAbs().maxCoeff() == 0.0);
  CHECK(model.logvar_head.b.cwiseAbs().maxCoeff() == 0.0);
  const Matrix mu = model.encode_mu(x.topRows(3));
  CHECK(mu.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam_step basics") {
  VaeModel model;
  model.family = EdfFamily::gaussian();
  model.kappa = 1;
  model.input_dim = 1;
  model.mu_head = DenseLayer{Matrix::Ones(1, 1), Vector::Zero(1),
                             Activation::kLinear};
  model.logvar_head = DenseLayer{Matrix::Ones(1, 1), Vector::Zero(1),
                                 Activation::kLinear};
  model.decoder.push_back(
      DenseLayer{Matrix::Ones(1, 1), Vector::Zero(1), Activation::kLinear});

  SUBCASE("zero learning rate leaves parameters untouched") {
    AdamState state = make_adam(model, 0.0);
    ModelGrads grads = zero_grads(model);
    for (LayerGrads& g : grads) {
      g.w.setConstant(3.0);
      g.b.setConstant(-2.0);
    }
    adam_step(state, model, grads);
    CHECK(model.mu_head.w(0, 0) == 1.0);
    CHECK(model.decoder[0].b[0] == 0.0);
  }

  SUBCASE("first step moves by about lr in the gradient sign") {
    AdamState state = make_adam(model, 0.01);
    ModelGrads grads = zero_grads(model);
    grads[0].w.setConstant(0.37);   // mu head
    grads[2].w.setConstant(-5.0);   // decoder
    adam_step(state, model, grads);
    CHECK(model.mu_head.w(0, 0) ==
          doctest::Approx(1.0 - 0.01).epsilon(1e-4));
    CHECK(model.decoder[0].w(0, 0) ==
          doctest::Approx(1.0 + 0.01).epsilon(1e-4));
  }
}

TEST_CASE("training is deterministic and evaluates on schedule") {
  const Dataset data = synthetic_bernoulli(400, 40, 77);
  const EdfFamily family = EdfFamily::bernoulli();
  TrainConfig config;
  config.batch = 50;
  config.total_batches = 6;
  config.eval_every = 3;
  config.eval_mc = 2;
  config.lr = 1e-3;
  config.seed = 5;

  VaeModel a = build_architecture(ArchitectureKind::kCanonical, 40, 2,
                                  family, 0.02, 1.0);
  Rng rng_a(9);
  init_bench(a, rng_a);
  VaeModel b = a;
  const TrainHistory ha = train(a, data, config);
  const TrainHistory hb = train(b, data, config);
  REQUIRE(ha.records.size() == 3);  // batches 0, 3, 6
  CHECK(ha.records[0].batch == 0);
  CHECK(ha.records[1].batch == 3);
  CHECK(ha.records[2].batch == 6);
  for (std::size_t i = 0; i < ha.records.size(); ++i) {
    CHECK(ha.records[i].train_elbo == hb.records[i].train_elbo);
    CHECK(ha.records[i].test_elbo == hb.records[i].test_elbo);
  }
  for (std::size_t l = 0; l < layer_pointers(a).size(); ++l) {
    CHECK((layer_pointers(a)[l]->w - layer_pointers(b)[l]->w)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("zero-batch training only evaluates the initialization") {
  const Dataset data = synthetic_bernoulli(300, 40, 78);
  VaeModel model = build_architecture(ArchitectureKind::kCanonical, 40, 2,
                                      EdfFamily::bernoulli(), 0.02, 1.0);
  Rng rng(10);
  init_bench(model, rng);
  const VaeModel before = model;
  TrainConfig config;
  config.batch = 50;
  config.total_batches = 0;
  config.eval_mc = 2;
  config.seed = 3;
  const TrainHistory history = train(model, data, config);
  CHECK(history.records.size() == 1);
  CHECK(history.records[0].batch == 0);
  CHECK((model.mu_head.w - before.mu_head.w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("short MLE-B training never drops below the closed-form bound") {
  const Dataset data = synthetic_bernoulli(2000, 60, 91);
  const EdfFamily family = EdfFamily::bernoulli();
  const MleSolution sol = mle_fit(data.train, family, 1.0, 2);
  const double lhat = objective_hat(sol.decoder(), data.train, family, 1.0);

  VaeModel model = build_architecture(ArchitectureKind::kCanonical, 60, 2,
                                      family, 0.05, 1.0);
  Rng rng(23);
  const Vector x_bar = data.train.colwise().mean().transpose();
  init_mle_b(model, sol, x_bar, rng);

  TrainConfig config;
  config.batch = 100;
  config.total_batches = 200;
  config.eval_every = 50;
  config.eval_mc = 4;
  config.lr = 1e-4;
  config.seed = 13;
  const TrainHistory history = train(model, data, config);
  for (const EvalRecord& rec : history.records) {
    CHECK(rec.train_elbo >= lhat - 3.0 * rec.train_se);
  }
}

TEST_CASE("elbo_minibatch rejects degenerate calls") {
  VaeModel model = build_architecture(ArchitectureKind::kCanonical, 4, 2,
                                      EdfFamily::bernoulli(), 0.002, 1.0);
  Rng rng(1);
  init_bench(model, rng);
  ModelGrads grads = zero_grads(model);
  Matrix empty(0, 4);
  CHECK_THROWS_AS(elbo_minibatch(model, empty, rng, grads, 1),
                  std::invalid_argument);
  Matrix ok = Matrix::Zero(2, 4);
  CHECK_THROWS_AS(elbo_minibatch(model, ok, rng, grads, 0),
                  std::invalid_argument);
}
