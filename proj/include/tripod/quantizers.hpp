#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "tripod/autodiff.hpp"

namespace tripod {

/// Continuous latents, their quantization, and per-dimension batch statistics.
struct LatentBatch {
  Var continuous;  // c, shape (n_b, n_z)
  Var quantized;   // z, forward-equal to the codes, straight-through to c
  Var sigma;       // per-dimension std of c, shape (n_z)
  /// Codebook values gathered at the chosen codes (learned-codebook quantizer only).
  std::optional<Var> codes;
  /// Chosen code index per entry, row-major (n_b, n_z).
  std::vector<std::size_t> indices;
};

/// Lower bound applied to per-dimension standard deviations.
inline constexpr double kSigmaFloor = 1e-4;

/// Uncorrected (divisor n_b) per-column standard deviation, floored at kSigmaFloor.
Var latent_sigma(const Var& continuous);

/// Fixed per-dimension grid {-1, -1 + 2/(n_q-1), ..., 1}.
struct FsqSpec {
  std::size_t n_z = 0;
  std::size_t n_q = 12;

  std::vector<double> grid() const;
  double level(std::size_t k) const;
  /// Grid index of a value in [-1, 1] (round half away from zero on the rescaled value).
  std::size_t code_index(double continuous) const;
  void validate() const;
};

/// tanh, rescale to [0, n_q - 1], round, unscale. Gradients pass straight through the rounding.
LatentBatch fsq_quantize(const Var& pre_activation, const FsqSpec& spec);

/// Quantizes already-bounded continuous values onto the FSQ grid (no gradient).
Tensor fsq_round(const Tensor& continuous, const FsqSpec& spec);

/// Learnable scalar codebook, one list of values per latent dimension.
struct LearnedCodebook {
  Tensor values;  // (n_z, n_v)

  static LearnedCodebook uniform_grid(std::size_t n_z, std::size_t n_v);
  std::size_t n_z() const { return values.extent(0); }
  std::size_t n_v() const { return values.extent(1); }
};

/// Nearest codebook value per dimension (lowest index on ties), straight-through to `continuous`.
/// `book` is the tracked (n_z, n_v) codebook.
LatentBatch lq_quantize(const Var& continuous, const Var& book);

struct LqLosses {
  Var quantize;  // mean_i ||sg(c_i) - z_i||^2, reaches only the codebook
  Var commit;    // mean_i ||c_i - sg(z_i)||^2, reaches only the encoder
};

LqLosses lq_losses(const Var& continuous, const Var& codes);

/// Latents without quantization: z = c = tanh(pre_activation).
LatentBatch continuous_latents(const Var& pre_activation);

}  // namespace tripod
