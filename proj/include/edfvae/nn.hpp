#pragma once

#include <string>
#include <vector>

#include "edfvae/closed_form.hpp"
#include "edfvae/data.hpp"
#include "edfvae/edf.hpp"
#include "edfvae/rng.hpp"
#include "edfvae/types.hpp"

namespace edfvae {

enum class Activation { kRelu, kLinear, kSigmoid, kTanhCanonical, kExpClamped };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

/// Pre-activation bound for the exp-clamped Poisson head.
inline constexpr double kExpClampLimit = 30.0;

struct DenseLayer {
  Matrix w;  // out x in
  Vector b;  // out
  Activation act = Activation::kLinear;

  Index in_dim() const { return w.cols(); }
  Index out_dim() const { return w.rows(); }

  /// Row-per-sample affine map, no activation.
  Matrix preactivate(const Matrix& input) const {
    return (input * w.transpose()).rowwise() + b.transpose();
  }
};

Matrix apply_activation(Activation act, const Matrix& pre);
Matrix activation_grad(Activation act, const Matrix& pre);

enum class ArchitectureKind { kDeep, kCanonical };

std::string to_string(ArchitectureKind kind);
ArchitectureKind architecture_from_string(const std::string& name);

/// Feed-forward VAE with diagonal Gaussian posterior.  The decoder's last
/// layer carries the family's (linearly) canonical activation; its
/// pre-activation t parametrizes the likelihood through theta = rho * t
/// (clamped first for the Poisson head).
struct VaeModel {
  std::vector<DenseLayer> encoder_trunk;
  DenseLayer mu_head;
  DenseLayer logvar_head;
  std::vector<DenseLayer> decoder;
  EdfFamily family;
  double beta = 1.0;
  Index kappa = 1;
  Index input_dim = 1;
  ArchitectureKind arch = ArchitectureKind::kCanonical;

  Index parameter_count() const;

  /// Encoder means for a batch of inputs (rows).
  Matrix encode_mu(const Matrix& x) const;
  Matrix encode_logvar(const Matrix& x) const;

  /// Decoder pre-activation t for a batch of latent rows.
  Matrix decode_preactivation(const Matrix& z) const;
  /// Decoder mean output, i.e. the final activation applied to t.
  Matrix decode_mean(const Matrix& z) const;
};

/// deep:      x(d) -> E1(ceil(2000 s)) -> E2(ceil(1000 s)) -> heads(kappa);
///            decoder kappa -> ceil(1000 s) -> ceil(2000 s) -> d.
/// canonical: x(d) -> E1(ceil(2000 s)) -> E2(d) -> heads(kappa);
///            decoder is a single affine layer kappa -> d.
/// Hidden layers are ReLU; heads are linear; the decoder output layer
/// carries the family's canonical activation.
VaeModel build_architecture(ArchitectureKind kind, Index d, Index kappa,
                            const EdfFamily& family, double hidden_scale,
                            double beta);

/// He initialization: weights ~ N(0, 2/fan_in), biases zero.
void init_bench(VaeModel& model, Rng& rng);

/// MLE-based initialization.  The decoder output layer receives
/// (w_hat, b_hat)/rho, the mu head the closed-form posterior-mean map, and
/// the logvar head log diag(sigma_z) as bias.  Where heads have more input
/// edges than the closed form provides, the extra weights are zero.  With
/// `identity_trunk` (canonical architecture, trunk width >= d, nonnegative
/// inputs) the encoder trunk passes the input through unchanged, so the
/// encoder reproduces the closed-form variational optimum exactly;
/// otherwise remaining layers keep their He initialization.
void init_mle_b(VaeModel& model, const MleSolution& sol, const Vector& x_bar,
                Rng& rng, bool identity_trunk = true);

struct LayerGrads {
  Matrix w;
  Vector b;
};
using ModelGrads = std::vector<LayerGrads>;

ModelGrads zero_grads(const VaeModel& model);

/// Pointers to all layers in the fixed parameter order
/// (trunk..., mu head, logvar head, decoder...).
std::vector<DenseLayer*> layer_pointers(VaeModel& model);
std::vector<const DenseLayer*> layer_pointers(const VaeModel& model);

struct ElboEstimate {
  double elbo = 0.0;
  double mc_se = 0.0;  // standard error of the Monte Carlo part (mc >= 2)
};

/// Reparameterized minibatch ELBO and its gradient w.r.t. every parameter.
/// Throws on a non-finite value, naming the offending batch row.
double elbo_minibatch(const VaeModel& model, const Matrix& batch, Rng& rng,
                      ModelGrads& grads, int mc_samples = 1);

/// ELBO estimate without gradients, mc_samples per datum.
ElboEstimate evaluate_elbo(const VaeModel& model, const Matrix& x, Rng& rng,
                           int mc_samples);

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  ModelGrads m;
  ModelGrads v;
};

AdamState make_adam(const VaeModel& model, double lr);

/// One Adam descent step on the given loss gradients.
void adam_step(AdamState& state, VaeModel& model, const ModelGrads& grads);

struct TrainConfig {
  Index batch = 100;
  long total_batches = 0;
  double lr = 1e-4;
  long eval_every = 100;
  int eval_mc = 16;
  int train_mc = 1;
  std::uint64_t seed = 0;
};

struct EvalRecord {
  long batch = 0;
  double train_elbo = 0.0;
  double train_se = 0.0;
  double test_elbo = 0.0;
  double test_se = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EvalRecord> records;
};

/// Shuffled minibatch training with Adam.  Evaluates train/test ELBO before
/// the first step, every `eval_every` batches, and after the last one.
/// Epoch-wise permutations come from the run seed; a trailing partial batch
/// is dropped.
TrainHistory train(VaeModel& model, const Dataset& data,
                   const TrainConfig& config);

}  // namespace edfvae
