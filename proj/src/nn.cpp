#include "edfvae/nn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace edfvae {

namespace {

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

struct LikelihoodTerms {
  double phi;
  double rho;
  bool clamp;
  int trials;
  FamilyKind kind;

  explicit LikelihoodTerms(const EdfFamily& family)
      : phi(family.dispersion_phi),
        rho(family.canonical_scale_rho),
        clamp(family.kind == FamilyKind::kPoisson),
        trials(family.trials()),
        kind(family.kind) {}

  double theta(double t) const {
    const double bounded =
        clamp ? std::clamp(t, -kExpClampLimit, kExpClampLimit) : t;
    return rho * bounded;
  }

  double log_density(double x, double t) const {
    const double th = theta(t);
    double f = 0.0;
    double k = 0.0;
    switch (kind) {
      case FamilyKind::kGaussian:
        f = 0.5 * th * th;
        k = -x * x / (2.0 * phi) -
            0.5 * std::log(2.0 * std::numbers::pi * phi);
        break;
      case FamilyKind::kBernoulli:
        f = softplus(th);
        break;
      case FamilyKind::kBinomial:
        f = trials * softplus(th);
        k = std::lgamma(trials + 1.0) - std::lgamma(x + 1.0) -
            std::lgamma(trials - x + 1.0);
        break;
      case FamilyKind::kPoisson:
        f = std::exp(th);
        k = -std::lgamma(x + 1.0);
        break;
    }
    return (x * th - f) / phi + k;
  }

  /// d log p / dt at pre-activation t.
  double grad(double x, double t) const {
    if (clamp && std::abs(t) >= kExpClampLimit) {
      return 0.0;
    }
    const double th = theta(t);
    double mean = 0.0;
    switch (kind) {
      case FamilyKind::kGaussian: mean = th; break;
      case FamilyKind::kBernoulli: mean = sigmoid(th); break;
      case FamilyKind::kBinomial: mean = trials * sigmoid(th); break;
      case FamilyKind::kPoisson: mean = std::exp(th); break;
    }
    return rho * (x - mean) / phi;
  }
};

Index hidden_width(double base, double scale) {
  return std::max<Index>(
      1, static_cast<Index>(std::ceil(base * scale)));
}

Activation canonical_activation(const EdfFamily& family) {
  switch (family.kind) {
    case FamilyKind::kGaussian: return Activation::kLinear;
    case FamilyKind::kBernoulli:
    case FamilyKind::kBinomial:
      return family.canonical_scale_rho == 2.0 ? Activation::kTanhCanonical
                                               : Activation::kSigmoid;
    case FamilyKind::kPoisson: return Activation::kExpClamped;
  }
  throw std::logic_error("nn: unknown family kind");
}

DenseLayer make_layer(Index in, Index out, Activation act) {
  DenseLayer layer;
  layer.w = Matrix::Zero(out, in);
  layer.b = Vector::Zero(out);
  layer.act = act;
  return layer;
}

void he_init(DenseLayer& layer, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(layer.in_dim()));
  for (Index i = 0; i < layer.w.rows(); ++i) {
    for (Index j = 0; j < layer.w.cols(); ++j) {
      layer.w(i, j) = stddev * rng.normal();
    }
  }
  layer.b.setZero();
}

/// Backward through one dense layer given the gradient w.r.t. its
/// pre-activation.  Returns the gradient w.r.t. the layer input.
Matrix backprop_dense(const DenseLayer& layer, const Matrix& input,
                      const Matrix& d_pre, LayerGrads& grads) {
  grads.w.noalias() += d_pre.transpose() * input;
  grads.b.noalias() += d_pre.colwise().sum().transpose();
  return d_pre * layer.w;
}

}  // namespace

std::string to_string(Activation act) {
  switch (act) {
    case Activation::kRelu: return "relu";
    case Activation::kLinear: return "linear";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanhCanonical: return "tanh_canonical";
    case Activation::kExpClamped: return "exp_clamped";
  }
  throw std::logic_error("nn: unknown activation");
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "linear") return Activation::kLinear;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh_canonical") return Activation::kTanhCanonical;
  if (name == "exp_clamped") return Activation::kExpClamped;
  throw std::invalid_argument("nn: unknown activation '" + name + "'");
}

std::string to_string(ArchitectureKind kind) {
  return kind == ArchitectureKind::kDeep ? "deep" : "canonical";
}

ArchitectureKind architecture_from_string(const std::string& name) {
  if (name == "deep") return ArchitectureKind::kDeep;
  if (name == "canonical") return ArchitectureKind::kCanonical;
  throw std::invalid_argument("nn: unknown architecture '" + name + "'");
}

Matrix apply_activation(Activation act, const Matrix& pre) {
  switch (act) {
    case Activation::kRelu:
      return pre.cwiseMax(0.0);
    case Activation::kLinear:
      return pre;
    case Activation::kSigmoid:
      return pre.unaryExpr([](double t) { return sigmoid(t); });
    case Activation::kTanhCanonical:
      return pre.unaryExpr(
          [](double t) { return 0.5 * std::tanh(t) + 0.5; });
    case Activation::kExpClamped:
      return pre.unaryExpr([](double t) {
        return std::exp(std::clamp(t, -kExpClampLimit, kExpClampLimit));
      });
  }
  throw std::logic_error("nn: unknown activation");
}

Matrix activation_grad(Activation act, const Matrix& pre) {
  switch (act) {
    case Activation::kRelu:
      return pre.unaryExpr([](double t) { return t > 0.0 ? 1.0 : 0.0; });
    case Activation::kLinear:
      return Matrix::Ones(pre.rows(), pre.cols());
    case Activation::kSigmoid:
      return pre.unaryExpr([](double t) {
        const double s = sigmoid(t);
        return s * (1.0 - s);
      });
    case Activation::kTanhCanonical:
      return pre.unaryExpr([](double t) {
        const double th = std::tanh(t);
        return 0.5 * (1.0 - th * th);
      });
    case Activation::kExpClamped:
      return pre.unaryExpr([](double t) {
        return std::abs(t) >= kExpClampLimit
                   ? 0.0
                   : std::exp(std::clamp(t, -kExpClampLimit, kExpClampLimit));
      });
  }
  throw std::logic_error("nn: unknown activation");
}

Index VaeModel::parameter_count() const {
  Index count = 0;
  for (const DenseLayer* layer : layer_pointers(*this)) {
    count += layer->w.size() + layer->b.size();
  }
  return count;
}

Matrix VaeModel::encode_mu(const Matrix& x) const {
  Matrix h = x;
  for (const DenseLayer& layer : encoder_trunk) {
    h = apply_activation(layer.act, layer.preactivate(h));
  }
  return mu_head.preactivate(h);
}

Matrix VaeModel::encode_logvar(const Matrix& x) const {
  Matrix h = x;
  for (const DenseLayer& layer : encoder_trunk) {
    h = apply_activation(layer.act, layer.preactivate(h));
  }
  return logvar_head.preactivate(h);
}

Matrix VaeModel::decode_preactivation(const Matrix& z) const {
  Matrix h = z;
  for (std::size_t l = 0; l + 1 < decoder.size(); ++l) {
    h = apply_activation(decoder[l].act, decoder[l].preactivate(h));
  }
  return decoder.back().preactivate(h);
}

Matrix VaeModel::decode_mean(const Matrix& z) const {
  return apply_activation(decoder.back().act, decode_preactivation(z));
}

VaeModel build_architecture(ArchitectureKind kind, Index d, Index kappa,
                            const EdfFamily& family, double hidden_scale,
                            double beta) {
  if (d < 1 || kappa < 1) {
    throw std::invalid_argument("build_architecture: dims must be >= 1");
  }
  VaeModel model;
  model.family = family;
  model.beta = beta;
  model.kappa = kappa;
  model.input_dim = d;
  model.arch = kind;

  const Activation out_act = canonical_activation(family);
  if (kind == ArchitectureKind::kDeep) {
    const Index h1 = hidden_width(2000.0, hidden_scale);
    const Index h2 = hidden_width(1000.0, hidden_scale);
    model.encoder_trunk.push_back(make_layer(d, h1, Activation::kRelu));
    model.encoder_trunk.push_back(make_layer(h1, h2, Activation::kRelu));
    model.mu_head = make_layer(h2, kappa, Activation::kLinear);
    model.logvar_head = make_layer(h2, kappa, Activation::kLinear);
    model.decoder.push_back(make_layer(kappa, h2, Activation::kRelu));
    model.decoder.push_back(make_layer(h2, h1, Activation::kRelu));
    model.decoder.push_back(make_layer(h1, d, out_act));
  } else {
    const Index h1 = hidden_width(2000.0, hidden_scale);
    model.encoder_trunk.push_back(make_layer(d, h1, Activation::kRelu));
    model.encoder_trunk.push_back(make_layer(h1, d, Activation::kRelu));
    model.mu_head = make_layer(d, kappa, Activation::kLinear);
    model.logvar_head = make_layer(d, kappa, Activation::kLinear);
    model.decoder.push_back(make_layer(kappa, d, out_act));
  }
  return model;
}

void init_bench(VaeModel& model, Rng& rng) {
  for (DenseLayer* layer : layer_pointers(model)) {
    he_init(*layer, rng);
  }
}

void init_mle_b(VaeModel& model, const MleSolution& sol, const Vector& x_bar,
                Rng& rng, bool identity_trunk) {
  if (sol.dim() != model.decoder.back().out_dim() ||
      sol.kappa() != model.kappa) {
    throw std::invalid_argument("init_mle_b: solution/model shape mismatch");
  }
  init_bench(model, rng);
  const double rho = model.family.canonical_scale_rho;

  DenseLayer& out = model.decoder.back();
  out.w.setZero();
  const Index used_in = std::min(out.in_dim(), sol.kappa());
  out.w.leftCols(used_in) = sol.w_hat.leftCols(used_in) / rho;
  out.b = sol.b_hat / rho;

  const VariationalOptima opt = variational_optima(sol, x_bar);
  DenseLayer& mu = model.mu_head;
  mu.w.setZero();
  const Index used_cols = std::min(mu.in_dim(), opt.mu_map_weight.cols());
  mu.w.leftCols(used_cols) = opt.mu_map_weight.leftCols(used_cols);
  mu.b = opt.mu_map_bias;

  model.logvar_head.b = opt.sigma_z.diagonal().array().log();

  if (identity_trunk && model.arch == ArchitectureKind::kCanonical &&
      model.encoder_trunk.size() == 2 &&
      model.encoder_trunk[0].out_dim() >= model.input_dim) {
    // Nonnegative inputs pass through the two ReLU layers unchanged, so the
    // heads see x itself and the encoder matches the closed form exactly.
    const Index d = model.input_dim;
    DenseLayer& e1 = model.encoder_trunk[0];
    DenseLayer& e2 = model.encoder_trunk[1];
    e1.w.setZero();
    e1.w.topLeftCorner(d, d) = Matrix::Identity(d, d);
    e1.b.setZero();
    e2.w.setZero();
    e2.w.leftCols(d) = Matrix::Identity(d, d);
    e2.b.setZero();
    model.logvar_head.w.setZero();
  }
}

std::vector<DenseLayer*> layer_pointers(VaeModel& model) {
  std::vector<DenseLayer*> layers;
  for (DenseLayer& layer : model.encoder_trunk) {
    layers.push_back(&layer);
  }
  layers.push_back(&model.mu_head);
  layers.push_back(&model.logvar_head);
  for (DenseLayer& layer : model.decoder) {
    layers.push_back(&layer);
  }
  return layers;
}

std::vector<const DenseLayer*> layer_pointers(const VaeModel& model) {
  std::vector<const DenseLayer*> layers;
  for (const DenseLayer& layer : model.encoder_trunk) {
    layers.push_back(&layer);
  }
  layers.push_back(&model.mu_head);
  layers.push_back(&model.logvar_head);
  for (const DenseLayer& layer : model.decoder) {
    layers.push_back(&layer);
  }
  return layers;
}

ModelGrads zero_grads(const VaeModel& model) {
  ModelGrads grads;
  for (const DenseLayer* layer : layer_pointers(model)) {
    grads.push_back(LayerGrads{Matrix::Zero(layer->w.rows(), layer->w.cols()),
                               Vector::Zero(layer->b.size())});
  }
  return grads;
}

double elbo_minibatch(const VaeModel& model, const Matrix& batch, Rng& rng,
                      ModelGrads& grads, int mc_samples) {
  if (batch.rows() < 1) {
    throw std::invalid_argument("elbo_minibatch: empty batch");
  }
  if (mc_samples < 1) {
    throw std::invalid_argument("elbo_minibatch: mc_samples must be >= 1");
  }
  const Index b_size = batch.rows();
  const Index kappa = model.kappa;
  const std::size_t n_trunk = model.encoder_trunk.size();
  const std::size_t n_dec = model.decoder.size();
  const LikelihoodTerms lik(model.family);
  const double inv_b = 1.0 / static_cast<double>(b_size);
  const double inv_bs = inv_b / static_cast<double>(mc_samples);

  // Encoder forward, caching inputs and pre-activations.
  std::vector<Matrix> trunk_in(n_trunk);
  std::vector<Matrix> trunk_pre(n_trunk);
  Matrix h = batch;
  for (std::size_t l = 0; l < n_trunk; ++l) {
    trunk_in[l] = h;
    trunk_pre[l] = model.encoder_trunk[l].preactivate(h);
    h = apply_activation(model.encoder_trunk[l].act, trunk_pre[l]);
  }
  const Matrix mu = model.mu_head.preactivate(h);
  const Matrix logvar = model.logvar_head.preactivate(h);
  const Matrix sigma = (0.5 * logvar).array().exp();

  double loglik_total = 0.0;
  Matrix d_mu = Matrix::Zero(b_size, kappa);
  Matrix d_logvar = Matrix::Zero(b_size, kappa);

  for (int s = 0; s < mc_samples; ++s) {
    Matrix eps(b_size, kappa);
    for (Index i = 0; i < b_size; ++i) {
      for (Index k = 0; k < kappa; ++k) {
        eps(i, k) = rng.normal();
      }
    }
    const Matrix z = mu + sigma.cwiseProduct(eps);

    // Decoder forward.
    std::vector<Matrix> dec_in(n_dec);
    std::vector<Matrix> dec_pre(n_dec);
    Matrix g = z;
    for (std::size_t l = 0; l < n_dec; ++l) {
      dec_in[l] = g;
      dec_pre[l] = model.decoder[l].preactivate(g);
      if (l + 1 < n_dec) {
        g = apply_activation(model.decoder[l].act, dec_pre[l]);
      }
    }
    const Matrix& t = dec_pre[n_dec - 1];

    Matrix d_t(b_size, t.cols());
    for (Index i = 0; i < b_size; ++i) {
      double row_ll = 0.0;
      for (Index j = 0; j < t.cols(); ++j) {
        row_ll += lik.log_density(batch(i, j), t(i, j));
        d_t(i, j) = lik.grad(batch(i, j), t(i, j)) * inv_bs;
      }
      if (!std::isfinite(row_ll)) {
        throw std::runtime_error(
            "elbo_minibatch: non-finite log-likelihood at batch row " +
            std::to_string(i));
      }
      loglik_total += row_ll;
    }

    // Decoder backward; the loss gradient enters at the final
    // pre-activation, so the last layer needs no activation derivative.
    const std::size_t grad_base = n_trunk + 2;
    Matrix d_flow = backprop_dense(model.decoder[n_dec - 1],
                                   dec_in[n_dec - 1], d_t,
                                   grads[grad_base + n_dec - 1]);
    for (std::size_t l = n_dec - 1; l-- > 0;) {
      const Matrix d_pre =
          d_flow.cwiseProduct(activation_grad(model.decoder[l].act,
                                              dec_pre[l]));
      d_flow = backprop_dense(model.decoder[l], dec_in[l], d_pre,
                              grads[grad_base + l]);
    }

    d_mu += d_flow;
    d_logvar += d_flow.cwiseProduct(0.5 * sigma.cwiseProduct(eps));
  }

  // Closed-form KL for the diagonal Gaussian posterior.
  const double kl_total =
      0.5 * (logvar.array().exp() + mu.array().square() - 1.0 -
             logvar.array())
                .sum();
  d_mu -= model.beta * inv_b * mu;
  d_logvar.array() -=
      model.beta * inv_b * 0.5 * (logvar.array().exp() - 1.0);

  // Heads and trunk backward.
  Matrix d_h = backprop_dense(model.mu_head, h, d_mu, grads[n_trunk]);
  d_h += backprop_dense(model.logvar_head, h, d_logvar, grads[n_trunk + 1]);
  for (std::size_t l = n_trunk; l-- > 0;) {
    const Matrix d_pre = d_h.cwiseProduct(
        activation_grad(model.encoder_trunk[l].act, trunk_pre[l]));
    d_h = backprop_dense(model.encoder_trunk[l], trunk_in[l], d_pre,
                         grads[l]);
  }

  const double value =
      loglik_total * inv_bs - model.beta * kl_total * inv_b;
  if (!std::isfinite(value)) {
    throw std::runtime_error("elbo_minibatch: non-finite ELBO value");
  }
  return value;
}

ElboEstimate evaluate_elbo(const VaeModel& model, const Matrix& x, Rng& rng,
                           int mc_samples) {
  if (x.rows() < 1) {
    throw std::invalid_argument("evaluate_elbo: empty data");
  }
  if (mc_samples < 1) {
    throw std::invalid_argument("evaluate_elbo: mc_samples must be >= 1");
  }
  const Index n = x.rows();
  const Index kappa = model.kappa;
  const LikelihoodTerms lik(model.family);

  Matrix h = x;
  for (const DenseLayer& layer : model.encoder_trunk) {
    h = apply_activation(layer.act, layer.preactivate(h));
  }
  const Matrix mu = model.mu_head.preactivate(h);
  const Matrix logvar = model.logvar_head.preactivate(h);
  const Matrix sigma = (0.5 * logvar).array().exp();

  Vector ll_sum = Vector::Zero(n);
  Vector ll_sumsq = Vector::Zero(n);
  for (int s = 0; s < mc_samples; ++s) {
    Matrix eps(n, kappa);
    for (Index i = 0; i < n; ++i) {
      for (Index k = 0; k < kappa; ++k) {
        eps(i, k) = rng.normal();
      }
    }
    const Matrix t =
        model.decode_preactivation(mu + sigma.cwiseProduct(eps));
    for (Index i = 0; i < n; ++i) {
      double row_ll = 0.0;
      for (Index j = 0; j < t.cols(); ++j) {
        row_ll += lik.log_density(x(i, j), t(i, j));
      }
      ll_sum[i] += row_ll;
      ll_sumsq[i] += row_ll * row_ll;
    }
  }

  const double kl_total =
      0.5 * (logvar.array().exp() + mu.array().square() - 1.0 -
             logvar.array())
                .sum();

  ElboEstimate out;
  const double mc = static_cast<double>(mc_samples);
  out.elbo = (ll_sum.sum() / mc - model.beta * kl_total) /
             static_cast<double>(n);
  if (mc_samples >= 2) {
    double var_sum = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double s2 =
          (ll_sumsq[i] - ll_sum[i] * ll_sum[i] / mc) / (mc - 1.0);
      var_sum += std::max(s2, 0.0) / mc;
    }
    out.mc_se = std::sqrt(var_sum) / static_cast<double>(n);
  }
  return out;
}

AdamState make_adam(const VaeModel& model, double lr) {
  AdamState state;
  state.lr = lr;
  state.m = zero_grads(model);
  state.v = zero_grads(model);
  return state;
}

void adam_step(AdamState& state, VaeModel& model, const ModelGrads& grads) {
  const std::vector<DenseLayer*> layers = layer_pointers(model);
  if (grads.size() != layers.size()) {
    throw std::invalid_argument("adam_step: gradient shape mismatch");
  }
  state.step += 1;
  const double correction1 =
      1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double correction2 =
      1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
      m = state.beta1 * m + (1.0 - state.beta1) * g;
      v.array() = state.beta2 * v.array() +
                  (1.0 - state.beta2) * g.array().square();
      param.array() -= state.lr * (m.array() / correction1) /
                       ((v.array() / correction2).sqrt() + state.eps);
    };
    update(layers[l]->w, state.m[l].w, state.v[l].w, grads[l].w);
    update(layers[l]->b, state.m[l].b, state.v[l].b, grads[l].b);
  }
}

TrainHistory train(VaeModel& model, const Dataset& data,
                   const TrainConfig& config) {
  if (data.train.rows() < config.batch) {
    throw std::invalid_argument("train: fewer training rows than batch size");
  }
  if (config.eval_every < 1) {
    throw std::invalid_argument("train: eval_every must be >= 1");
  }
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&start]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  };

  Rng master(config.seed);
  Rng sample_stream = master.split(1);
  Rng shuffle_stream = master.split(2);

  TrainHistory history;
  long eval_count = 0;
  auto record = [&](long batch_index) {
    Rng eval_stream = master.split(1000000 + eval_count);
    ++eval_count;
    EvalRecord rec;
    rec.batch = batch_index;
    const ElboEstimate train_est =
        evaluate_elbo(model, data.train, eval_stream, config.eval_mc);
    rec.train_elbo = train_est.elbo;
    rec.train_se = train_est.mc_se;
    if (data.test.rows() > 0) {
      const ElboEstimate test_est =
          evaluate_elbo(model, data.test, eval_stream, config.eval_mc);
      rec.test_elbo = test_est.elbo;
      rec.test_se = test_est.mc_se;
    }
    rec.seconds = elapsed();
    history.records.push_back(rec);
  };

  record(0);

  AdamState adam = make_adam(model, config.lr);
  ModelGrads grads = zero_grads(model);

  const Index n_train = data.train.rows();
  std::vector<Index> perm(static_cast<std::size_t>(n_train));
  std::iota(perm.begin(), perm.end(), Index{0});
  Index cursor = n_train;  // force an initial shuffle

  Matrix batch(config.batch, data.train.cols());
  for (long step = 1; step <= config.total_batches; ++step) {
    if (cursor + config.batch > n_train) {
      shuffle_stream.shuffle(perm);
      cursor = 0;
    }
    for (Index i = 0; i < config.batch; ++i) {
      batch.row(i) = data.train.row(perm[static_cast<std::size_t>(cursor + i)]);
    }
    cursor += config.batch;

    for (LayerGrads& g : grads) {
      g.w.setZero();
      g.b.setZero();
    }
    elbo_minibatch(model, batch, sample_stream, grads, config.train_mc);
    // Adam minimizes, so descend on -ELBO.
    for (LayerGrads& g : grads) {
      g.w = -g.w;
      g.b = -g.b;
    }
    adam_step(adam, model, grads);

    if (step % config.eval_every == 0 || step == config.total_batches) {
      record(step);
    }
  }
  return history;
}

}  // namespace edfvae
