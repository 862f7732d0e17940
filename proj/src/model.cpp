#include "tripod/model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "tripod/error.hpp"

namespace tripod {

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (lambda_klm < 0.0 || lambda_nhp < 0.0) fail("regularization weights must be nonnegative");
  if (batch_size < 2) fail("batch_size must be >= 2");
  if (n_q < 2) fail("n_q must be >= 2");
  if (n_p < 2) fail("n_p must be >= 2");
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) fail("Adam betas must lie in [0, 1)");
  if (weight_decay < 0.0) fail("weight_decay must be nonnegative");
  if (eval_every == 0) fail("eval_every must be positive");
  if (hidden_width == 0) fail("hidden_width must be positive");
  if (!(klm_bandwidth > 0.0)) fail("klm_bandwidth must be positive");
  if (eval_samples == 0) fail("eval_samples must be positive");
  if (model == ModelKind::source_oracle && n_z != 0) fail("source_oracle fixes n_z = n_s");
}

// ---------------------------------------------------------------------------
// Autoencoder

namespace {

NamedTensor uniform_init(std::string name, Shape shape, double bound, RngState& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = bound * (2.0 * rng.uniform(Stream::init) - 1.0);
  return {std::move(name), std::move(t)};
}

}  // namespace

Autoencoder::Autoencoder(const TrainConfig& config, std::size_t input_dim, std::size_t n_s, RngState& rng)
    : input_dim_(input_dim),
      n_z_(config.latent_dim(n_s)),
      width_(config.hidden_width),
      hidden_layers_(config.hidden_layers),
      quantizer_(config.quantizer),
      fsq_{config.latent_dim(n_s), config.n_q} {
  auto add_mlp = [&](const std::string& prefix, std::size_t in, std::size_t out) {
    std::size_t fan_in = in;
    for (std::size_t l = 0; l <= hidden_layers_; ++l) {
      const std::size_t fan_out = l == hidden_layers_ ? out : width_;
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      const std::string base = prefix + ".l" + std::to_string(l);
      params_.push_back(uniform_init(base + ".weight", {fan_in, fan_out}, bound, rng));
      params_.push_back(uniform_init(base + ".bias", {fan_out}, bound, rng));
      fan_in = fan_out;
    }
  };
  add_mlp("enc", input_dim_, n_z_);
  encoder_layers_ = hidden_layers_ + 1;
  add_mlp("dec", n_z_, input_dim_);
  if (quantizer_ == QuantizerKind::lq) {
    codebook_index_ = params_.size();
    params_.push_back({"codebook", LearnedCodebook::uniform_grid(n_z_, config.n_q).values});
  }
}

std::vector<TapInfo> Autoencoder::taps() const {
  std::vector<TapInfo> out;
  for (std::size_t l = 0; l < hidden_layers_; ++l) out.push_back({"dec.h" + std::to_string(l), width_});
  out.push_back({"dec.logits", input_dim_});
  return out;
}

std::size_t Autoencoder::tap_dim() const { return hidden_layers_ * width_ + input_dim_; }

Autoencoder::Bound Autoencoder::bind(Tape& tape, bool track) const {
  Bound b;
  b.params.reserve(params_.size());
  for (const auto& p : params_) b.params.push_back(track ? tape.variable(p.value) : tape.constant(p.value));
  return b;
}

Var Autoencoder::mlp(const Bound& bound, std::size_t first, std::size_t layers, Var h,
                     std::vector<Var>* hidden) const {
  for (std::size_t l = 0; l < layers; ++l) {
    h = matmul(h, bound.params[first + 2 * l]) + bound.params[first + 2 * l + 1];
    if (l + 1 < layers) {
      h = tanh(h);
      if (hidden) hidden->push_back(h);
    }
  }
  return h;
}

Var Autoencoder::encode(const Bound& bound, const Var& x) const {
  if (x.shape().size() != 2 || x.shape()[1] != input_dim_) {
    throw ShapeError("encode: expected (n, " + std::to_string(input_dim_) + "), got " + to_string(x.shape()));
  }
  return mlp(bound, 0, encoder_layers_, x, nullptr);
}

LatentBatch Autoencoder::quantize(const Bound& bound, const Var& pre) const {
  switch (quantizer_) {
    case QuantizerKind::fsq:
      return fsq_quantize(pre, fsq_);
    case QuantizerKind::lq:
      return lq_quantize(pre, bound.params[codebook_index_]);
    case QuantizerKind::none:
      return continuous_latents(pre);
  }
  throw Error("unknown quantizer");
}

Autoencoder::Decoded Autoencoder::decode(const Bound& bound, const Var& z) const {
  if (z.shape().size() != 2 || z.shape()[1] != n_z_) {
    throw ShapeError("decode: expected (n, " + std::to_string(n_z_) + "), got " + to_string(z.shape()));
  }
  std::vector<Var> hidden;
  Decoded d;
  d.logits = mlp(bound, 2 * encoder_layers_, hidden_layers_ + 1, z, &hidden);
  hidden.push_back(d.logits);
  d.taps = concat(hidden, 1);
  return d;
}

TapFunction Autoencoder::tap_function(const Bound& bound) const {
  return [this, bound](const Var& z) { return decode(bound, z).taps; };
}

// ---------------------------------------------------------------------------
// Objective

Var binary_cross_entropy(const Var& logits, const Var& targets) {
  if (logits.shape() != targets.shape()) throw ShapeError("binary_cross_entropy: shape mismatch");
  const double inv_b = 1.0 / static_cast<double>(logits.shape()[0]);
  return scale(sum(softplus(logits) - targets * logits), inv_b);
}

Objective tripod_objective(const Tensor& batch, const Autoencoder& model, const Autoencoder::Bound& bound,
                           const TrainConfig& config, RngState& rng) {
  if (bound.params.empty()) throw Error("tripod_objective: model has no parameters");
  Tape& tape = bound.params.front().tape();
  const std::size_t n_b = batch.extent(0);
  Var x = tape.constant(batch);
  LatentBatch latents = model.quantize(bound, model.encode(bound, x));
  const Var& z = latents.quantized;

  Objective out;
  Var hessian_term;
  if (config.hessian != HessianLeg::off) {
    const bool normalized = config.hessian == HessianLeg::nhp;
    HessianProbe probe(normalized ? PenaltyKind::normalized : PenaltyKind::vanilla,
                       draw_perturbations(rng, config.n_p, n_b, model.n_z(), config.epsilon, normalized),
                       !normalized && config.normalize_hp_activations, config.nhp_aggregation);
    Var sigma = normalized ? latents.sigma : tape.constant(Tensor(Shape{model.n_z()}, 1.0));
    Autoencoder::Decoded decoded = model.decode(bound, probe.stacked_inputs(z, sigma));
    out.logits = slice(decoded.logits, 0, 0, n_b);
    hessian_term = probe.penalty(decoded.taps);
  } else {
    out.logits = model.decode(bound, z).logits;
  }

  Var loss = binary_cross_entropy(out.logits, x);
  out.terms.reconstruction = loss.value().item();

  switch (config.density) {
    case DensityLeg::klm: {
      Var klm = klm_loss(latents, config.marginal_bandwidth);
      out.terms.klm = klm.value().item();
      loss = loss + scale(klm, config.lambda_klm);
      break;
    }
    case DensityLeg::klm_naive: {
      Var klm = klm_loss_naive(latents, config.klm_bandwidth);
      out.terms.klm = klm.value().item();
      loss = loss + scale(klm, config.lambda_klm);
      break;
    }
    case DensityLeg::off:
      break;
  }
  if (hessian_term.valid()) {
    out.terms.hessian = hessian_term.value().item();
    loss = loss + scale(hessian_term, config.lambda_nhp);
  }
  if (latents.codes) {
    LqLosses lq = lq_losses(latents.continuous, *latents.codes);
    out.terms.quantize = lq.quantize.value().item();
    out.terms.commit = lq.commit.value().item();
    loss = loss + scale(lq.quantize, config.quantize_weight) + scale(lq.commit, config.commit_weight);
  }
  out.terms.total = loss.value().item();
  out.loss = loss;
  return out;
}

// ---------------------------------------------------------------------------
// Optimizer and metrics

void adamw_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamWState& state,
                const AdamWConfig& config) {
  if (params.size() != grads.size()) throw ShapeError("adamw_step: parameter/gradient count mismatch");
  if (state.m.empty()) {
    for (const Tensor& p : params) {
      state.m.emplace_back(p.shape(), 0.0);
      state.v.emplace_back(p.shape(), 0.0);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params[k];
    const Tensor& g = grads[k];
    if (g.shape() != p.shape()) throw ShapeError("adamw_step: gradient shape mismatch");
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= config.learning_rate * (m_hat / (std::sqrt(v_hat) + config.epsilon) + config.weight_decay * p[i]);
    }
  }
}

double psnr(std::span<const double> reference, std::span<const double> reconstruction) {
  if (reference.size() != reconstruction.size() || reference.empty()) {
    throw ShapeError("psnr: inputs must be nonempty and equally sized");
  }
  double se = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - reconstruction[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(reference.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

// ---------------------------------------------------------------------------
// Trainer

namespace {

AdamWConfig adam_config(const TrainConfig& c) {
  return {c.learning_rate, c.beta1, c.beta2, c.adam_epsilon, c.weight_decay};
}

}  // namespace

Trainer::Trainer(TrainConfig config)
    : config_(std::move(config)), process_(SyntheticProcess::by_name(config_.dataset)), rng_(config_.seed) {
  config_.validate();
  if (config_.model != ModelKind::autoencoder) throw ConfigError("only the autoencoder model can be trained");
  model_ = Autoencoder(config_, process_.pixels(), process_.n_s(), rng_);
}

StepLog Trainer::step() {
  const std::size_t n_b = config_.batch_size;
  Tensor batch(Shape{n_b, process_.pixels()});
  for (std::size_t i = 0; i < n_b; ++i) {
    Sample s = sample_pair(process_, rng_);
    std::copy(s.image.begin(), s.image.end(), batch.data().begin() + static_cast<std::ptrdiff_t>(i * s.image.size()));
  }
  Tape tape;
  Autoencoder::Bound bound = model_.bind(tape, true);
  Objective obj = tripod_objective(batch, model_, bound, config_, rng_);
  GradientMap grads = tape.backward(obj.loss);

  StepLog log;
  log.terms = obj.terms;
  std::vector<double> recon(obj.logits.value().size());
  for (std::size_t i = 0; i < recon.size(); ++i) recon[i] = 1.0 / (1.0 + std::exp(-obj.logits.value()[i]));
  log.psnr = psnr(batch.data(), recon);

  std::vector<Tensor> grad_list;
  grad_list.reserve(bound.params.size());
  for (const Var& p : bound.params) grad_list.push_back(std::move(grads.at(p.id())));
  std::vector<Tensor> values;
  values.reserve(bound.params.size());
  for (auto& p : model_.parameters()) values.push_back(std::move(p.value));
  adamw_step(values, grad_list, adam_, adam_config(config_));
  for (std::size_t k = 0; k < values.size(); ++k) model_.parameters()[k].value = std::move(values[k]);
  log.step = adam_.step;
  return log;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c{config_, adam_.step, rng_, {}};
  for (const auto& p : model_.parameters()) c.arrays.push_back(p);
  const auto& params = model_.parameters();
  for (std::size_t k = 0; k < adam_.m.size(); ++k) c.arrays.push_back({"adam.m/" + params[k].name, adam_.m[k]});
  for (std::size_t k = 0; k < adam_.v.size(); ++k) c.arrays.push_back({"adam.v/" + params[k].name, adam_.v[k]});
  return c;
}

namespace {

const Tensor* find_array(const Checkpoint& c, const std::string& name) {
  for (const auto& a : c.arrays)
    if (a.name == name) return &a.value;
  return nullptr;
}

}  // namespace

Autoencoder model_from_checkpoint(const Checkpoint& checkpoint) {
  const SyntheticProcess process = SyntheticProcess::by_name(checkpoint.config.dataset);
  RngState scratch(0);
  Autoencoder model(checkpoint.config, process.pixels(), process.n_s(), scratch);
  for (auto& p : model.parameters()) {
    const Tensor* stored = find_array(checkpoint, p.name);
    if (!stored) throw ConfigError("checkpoint is missing parameter " + p.name);
    if (stored->shape() != p.value.shape()) throw ConfigError("checkpoint parameter " + p.name + " has wrong shape");
    p.value = *stored;
  }
  return model;
}

Trainer Trainer::restore(const Checkpoint& checkpoint) {
  Trainer t(checkpoint.config);
  t.model_ = model_from_checkpoint(checkpoint);
  t.rng_ = checkpoint.rng;
  t.adam_.step = checkpoint.step;
  t.adam_.m.clear();
  t.adam_.v.clear();
  if (checkpoint.step > 0) {
    for (const auto& p : t.model_.parameters()) {
      const Tensor* m = find_array(checkpoint, "adam.m/" + p.name);
      const Tensor* v = find_array(checkpoint, "adam.v/" + p.name);
      if (!m || !v) throw ConfigError("checkpoint is missing optimizer state for " + p.name);
      t.adam_.m.push_back(*m);
      t.adam_.v.push_back(*v);
    }
  }
  return t;
}

}  // namespace tripod
