#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tripod/autodiff.hpp"
#include "tripod/density.hpp"
#include "tripod/hessian.hpp"
#include "tripod/quantizers.hpp"
#include "tripod/rng.hpp"
#include "tripod/synth.hpp"

namespace tripod {

enum class QuantizerKind { fsq, lq, none };
enum class DensityLeg { klm, klm_naive, off };
enum class HessianLeg { nhp, vanilla, off };
enum class ModelKind { autoencoder, source_oracle };

/// Everything that determines a training run.
struct TrainConfig {
  std::string dataset = "blobs";
  ModelKind model = ModelKind::autoencoder;
  QuantizerKind quantizer = QuantizerKind::fsq;
  DensityLeg density = DensityLeg::klm;
  HessianLeg hessian = HessianLeg::nhp;
  double lambda_klm = 3e-2;
  double lambda_nhp = 3e-2;
  std::size_t n_q = 12;
  std::size_t n_z = 0;  // 0 selects 2 * n_s
  std::size_t batch_size = 64;
  std::size_t n_p = 2;
  double epsilon = 0.1;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.0;
  std::size_t max_updates = 20000;
  std::size_t eval_every = 1000;
  std::uint64_t seed = 0;
  std::size_t hidden_width = 256;
  std::size_t hidden_layers = 3;
  double klm_bandwidth = 0.1;
  MarginalBandwidth marginal_bandwidth = MarginalBandwidth::silverman;
  double quantize_weight = 1.0;
  double commit_weight = 0.25;
  bool normalize_hp_activations = true;
  NhpAggregation nhp_aggregation = NhpAggregation::sample;
  double psnr_threshold = 35.0;
  std::size_t eval_samples = 10000;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  std::size_t latent_dim(std::size_t n_s) const { return n_z == 0 ? 2 * n_s : n_z; }
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Regularized decoder activation group.
struct TapInfo {
  std::string name;
  std::size_t dim = 0;
};

/// MLP encoder (x -> pre-tanh latents) and decoder (z -> pixel logits).
class Autoencoder {
 public:
  struct Bound {
    std::vector<Var> params;
  };
  struct Decoded {
    Var logits;  // (rows, pixels)
    Var taps;    // (rows, tap_dim): hidden activations then logits
  };

  Autoencoder() = default;
  Autoencoder(const TrainConfig& config, std::size_t input_dim, std::size_t n_s, RngState& rng);

  std::vector<NamedTensor>& parameters() { return params_; }
  const std::vector<NamedTensor>& parameters() const { return params_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t n_z() const { return n_z_; }
  QuantizerKind quantizer() const { return quantizer_; }
  const FsqSpec& fsq() const { return fsq_; }
  std::vector<TapInfo> taps() const;
  std::size_t tap_dim() const;

  /// Puts every parameter on `tape`, tracked or as constants.
  Bound bind(Tape& tape, bool track) const;

  Var encode(const Bound& bound, const Var& x) const;
  LatentBatch quantize(const Bound& bound, const Var& pre) const;
  Decoded decode(const Bound& bound, const Var& z) const;
  TapFunction tap_function(const Bound& bound) const;

 private:
  Var mlp(const Bound& bound, std::size_t first, std::size_t layers, Var h, std::vector<Var>* hidden) const;

  std::vector<NamedTensor> params_;
  std::size_t input_dim_ = 0;
  std::size_t n_z_ = 0;
  std::size_t width_ = 0;
  std::size_t hidden_layers_ = 0;
  QuantizerKind quantizer_ = QuantizerKind::fsq;
  FsqSpec fsq_;
  std::size_t encoder_layers_ = 0;
  std::size_t codebook_index_ = 0;
};

struct ObjectiveTerms {
  double total = 0.0;
  double reconstruction = 0.0;
  double klm = 0.0;
  double hessian = 0.0;
  double quantize = 0.0;
  double commit = 0.0;
};

struct Objective {
  Var loss;
  ObjectiveTerms terms;
  Var logits;  // reconstruction logits of the batch, (n_b, pixels)
};

/// Mean per-image binary cross-entropy (summed over pixels) of sigmoid(logits) against x.
Var binary_cross_entropy(const Var& logits, const Var& targets);

/// Reconstruction + lambda_KLM * density leg + lambda_NHP * Hessian leg (+ codebook losses for LQ).
Objective tripod_objective(const Tensor& batch, const Autoencoder& model, const Autoencoder::Bound& bound,
                           const TrainConfig& config, RngState& rng);

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

struct AdamWState {
  std::uint64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

/// Bias-corrected Adam with decoupled weight decay, applied in place.
void adamw_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamWState& state,
                const AdamWConfig& config);

/// 10 log10(1 / MSE) for pixels in [0, 1], capped at kPsnrCap.
inline constexpr double kPsnrCap = 99.0;
double psnr(std::span<const double> reference, std::span<const double> reconstruction);

struct StepLog {
  std::uint64_t step = 0;
  ObjectiveTerms terms;
  double psnr = 0.0;
};

/// Serializable training state.
struct Checkpoint {
  TrainConfig config;
  std::uint64_t step = 0;
  RngState rng;
  std::vector<NamedTensor> arrays;  // model parameters then "adam.m/..", "adam.v/.."
};

/// Owns the model, optimizer, and RNG of one run.
class Trainer {
 public:
  explicit Trainer(TrainConfig config);
  static Trainer restore(const Checkpoint& checkpoint);

  StepLog step();
  std::uint64_t step_count() const { return adam_.step; }
  const TrainConfig& config() const { return config_; }
  const SyntheticProcess& process() const { return process_; }
  const Autoencoder& model() const { return model_; }
  Checkpoint checkpoint() const;

 private:
  TrainConfig config_;
  SyntheticProcess process_;
  RngState rng_;
  Autoencoder model_;
  AdamWState adam_;
};

/// Rebuilds the model stored in a checkpoint.
Autoencoder model_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace tripod
