#include "tripod/density.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tripod/error.hpp"

namespace tripod {

namespace {

void check_batch(const Var& z) {
  if (z.shape().size() != 2) throw ShapeError("KDE expects latents of shape (n_b, n_z)");
}

void check_spec(const Var& z, const SmoothingSpec& spec) {
  check_batch(z);
  const std::size_t n_z = z.shape()[1];
  if (spec.joint_variance.shape() != Shape{n_z} || spec.marginal_bandwidth.shape() != Shape{n_z}) {
    throw ShapeError("smoothing spec does not match latent width " + std::to_string(n_z));
  }
}

/// Squared pairwise differences (n_b, n_b, n_z).
Var pairwise_sq(const Var& z) {
  const std::size_t n_b = z.shape()[0];
  const std::size_t n_z = z.shape()[1];
  return square(reshape(z, {n_b, 1, n_z}) - reshape(z, {1, n_b, n_z}));
}

Var log_joint_from_sq(const Var& sq, const SmoothingSpec& spec) {
  const std::size_t n_b = sq.shape()[0];
  const std::size_t n_z = sq.shape()[2];
  Var mahalanobis = sum(sq / reshape(spec.joint_variance, {1, 1, n_z}), 2);
  Var lse = logsumexp(scale(mahalanobis, -0.5), 1);
  const double constant = -std::log(static_cast<double>(n_b)) -
                          0.5 * static_cast<double>(n_z) * std::log(2.0 * std::numbers::pi);
  return shift(lse, constant) - scale(sum(log(spec.joint_variance)), 0.5);
}

Var log_marginals_from_sq(const Var& sq, const SmoothingSpec& spec) {
  const std::size_t n_b = sq.shape()[0];
  const std::size_t n_z = sq.shape()[2];
  Var h2 = reshape(square(spec.marginal_bandwidth), {1, 1, n_z});
  Var lse = logsumexp(scale(sq / h2, -0.5), 1);  // (n_b, n_z)
  const double constant = -std::log(static_cast<double>(n_b)) - 0.5 * std::log(2.0 * std::numbers::pi);
  return shift(lse, constant) - reshape(log(spec.marginal_bandwidth), {1, n_z});
}

}  // namespace

double silverman_factor(std::size_t n_b, std::size_t n_z) {
  const double nz = static_cast<double>(n_z);
  return std::pow(4.0 / ((nz + 2.0) * static_cast<double>(n_b)), 2.0 / (nz + 4.0));
}

SmoothingSpec silverman(const Var& sigma, std::size_t n_b, MarginalBandwidth marginal) {
  if (n_b < 2) throw DomainError("silverman: need n_b >= 2, got " + std::to_string(n_b));
  if (sigma.shape().size() != 1) throw ShapeError("silverman: sigma must be a vector");
  const std::size_t n_z = sigma.shape()[0];
  SmoothingSpec spec;
  spec.sigma = clamp_min(sigma, kSigmaFloor);
  Var sigma2 = square(spec.sigma);
  spec.joint_variance = scale(sigma2, silverman_factor(n_b, n_z));
  switch (marginal) {
    case MarginalBandwidth::silverman:
      spec.marginal_bandwidth = scale(spec.sigma, std::sqrt(silverman_factor(n_b, 1)));
      break;
    case MarginalBandwidth::sigma:
      spec.marginal_bandwidth = spec.sigma;
      break;
  }
  return spec;
}

SmoothingSpec fixed_bandwidth(Tape& tape, double h, std::size_t n_z) {
  if (!(h > 0.0)) throw DomainError("fixed bandwidth must be positive");
  SmoothingSpec spec;
  spec.sigma = tape.constant(Tensor(Shape{n_z}, h));
  spec.joint_variance = tape.constant(Tensor(Shape{n_z}, h * h));
  spec.marginal_bandwidth = spec.sigma;
  return spec;
}

Var kde_log_joint(const Var& z, const SmoothingSpec& spec) {
  check_spec(z, spec);
  return log_joint_from_sq(pairwise_sq(z), spec);
}

Var kde_log_marginals(const Var& z, const SmoothingSpec& spec) {
  check_spec(z, spec);
  return log_marginals_from_sq(pairwise_sq(z), spec);
}

Var kde_log_marginal(const Var& z, std::size_t j, const SmoothingSpec& spec) {
  check_spec(z, spec);
  if (j >= z.shape()[1]) throw ShapeError("kde_log_marginal: dimension out of range");
  Var column = slice(z, 1, j, j + 1);
  SmoothingSpec one;
  one.sigma = slice(spec.sigma, 0, j, j + 1);
  one.joint_variance = slice(spec.joint_variance, 0, j, j + 1);
  one.marginal_bandwidth = slice(spec.marginal_bandwidth, 0, j, j + 1);
  return reshape(log_marginals_from_sq(pairwise_sq(column), one), {z.shape()[0]});
}

Var multiinformation(const Var& z, const SmoothingSpec& spec) {
  check_spec(z, spec);
  Var sq = pairwise_sq(z);
  return mean(log_joint_from_sq(sq, spec) - sum(log_marginals_from_sq(sq, spec), 1));
}

Var klm_loss(const LatentBatch& latents, MarginalBandwidth marginal) {
  const std::size_t n_b = latents.quantized.shape()[0];
  if (n_b < 2) throw DomainError("klm_loss: batch size must be >= 2");
  return multiinformation(latents.quantized, silverman(latents.sigma, n_b, marginal));
}

Var klm_loss_naive(const LatentBatch& latents, double h) {
  const std::size_t n_b = latents.quantized.shape()[0];
  if (n_b < 2) throw DomainError("klm_loss_naive: batch size must be >= 2");
  return multiinformation(latents.quantized,
                          fixed_bandwidth(latents.quantized.tape(), h, latents.quantized.shape()[1]));
}

}  // namespace tripod
