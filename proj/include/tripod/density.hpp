#pragma once

#include <cstddef>

#include "tripod/autodiff.hpp"
#include "tripod/quantizers.hpp"

namespace tripod {

/// How marginal kernel bandwidths are derived from the per-dimension std.
enum class MarginalBandwidth {
  silverman,  // h_j^2 = silverman_factor(n_b, 1) * sigma_j^2; the joint/marginal pair agree at n_z = 1
  sigma,      // h_j = sigma_j
};

/// Diagonal Gaussian kernel parameters for one batch.
struct SmoothingSpec {
  Var sigma;               // sigma_j, (n_z)
  Var joint_variance;      // S_jj, (n_z)
  Var marginal_bandwidth;  // h_j, (n_z)
};

/// (4 / ((n_z + 2) n_b))^(2 / (n_z + 4)).
double silverman_factor(std::size_t n_b, std::size_t n_z);

/// Silverman's rule on floored sigma: S_jj = silverman_factor(n_b, n_z) * sigma_j^2.
SmoothingSpec silverman(const Var& sigma, std::size_t n_b,
                        MarginalBandwidth marginal = MarginalBandwidth::silverman);

/// Fixed bandwidth h for both the joint (S_jj = h^2) and the marginals.
SmoothingSpec fixed_bandwidth(Tape& tape, double h, std::size_t n_z);

/// log q(z_i) of the joint Gaussian KDE over the batch, self term included. Shape (n_b).
Var kde_log_joint(const Var& z, const SmoothingSpec& spec);

/// log q_j(z_ij) for every dimension at once. Shape (n_b, n_z).
Var kde_log_marginals(const Var& z, const SmoothingSpec& spec);

/// log q_j(z_ij) for one dimension. Shape (n_b).
Var kde_log_marginal(const Var& z, std::size_t j, const SmoothingSpec& spec);

/// Batch multiinformation estimate mean_i [log q(z_i) - sum_j log q_j(z_ij)].
Var multiinformation(const Var& z, const SmoothingSpec& spec);

/// Multiinformation of quantized latents with Silverman bandwidths from the continuous std.
Var klm_loss(const LatentBatch& latents, MarginalBandwidth marginal = MarginalBandwidth::silverman);

/// Multiinformation of quantized latents with a fixed bandwidth h.
Var klm_loss_naive(const LatentBatch& latents, double h);

}  // namespace tripod
