#include "tripod/quantizers.hpp"

#include <cmath>
#include <string>

#include "tripod/error.hpp"

namespace tripod {

Var latent_sigma(const Var& continuous) {
  if (continuous.shape().size() != 2) throw ShapeError("latent_sigma expects (n_b, n_z)");
  // sqrt(max(var, floor^2)) keeps the gradient finite for constant columns.
  return sqrt(clamp_min(variance(continuous, 0, 0), kSigmaFloor * kSigmaFloor));
}

void FsqSpec::validate() const {
  if (n_q < 2) throw DomainError("FSQ needs n_q >= 2, got " + std::to_string(n_q));
}

std::vector<double> FsqSpec::grid() const {
  validate();
  std::vector<double> g(n_q);
  for (std::size_t k = 0; k < n_q; ++k) g[k] = level(k);
  return g;
}

double FsqSpec::level(std::size_t k) const {
  // Integer numerator keeps the grid exactly antisymmetric with endpoints at +-1.
  const double span = static_cast<double>(n_q - 1);
  return (2.0 * static_cast<double>(k) - span) / span;
}

std::size_t FsqSpec::code_index(double continuous) const {
  const double half = static_cast<double>(n_q - 1) / 2.0;
  const double r = std::round(half * (continuous + 1.0));
  if (r <= 0.0) return 0;
  if (r >= static_cast<double>(n_q - 1)) return n_q - 1;
  return static_cast<std::size_t>(r);
}

Tensor fsq_round(const Tensor& continuous, const FsqSpec& spec) {
  spec.validate();
  Tensor q(continuous.shape());
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!std::isfinite(continuous[i])) throw NumericalError("fsq: non-finite latent");
    q[i] = spec.level(spec.code_index(continuous[i]));
  }
  return q;
}

LatentBatch fsq_quantize(const Var& pre_activation, const FsqSpec& spec) {
  spec.validate();
  if (pre_activation.shape().size() != 2) throw ShapeError("fsq_quantize expects (n_b, n_z)");
  if (spec.n_z != 0 && pre_activation.shape()[1] != spec.n_z) {
    throw ShapeError("fsq_quantize: latent width " + std::to_string(pre_activation.shape()[1]) +
                     " does not match n_z " + std::to_string(spec.n_z));
  }
  LatentBatch out;
  out.continuous = tanh(pre_activation);
  const Tensor& c = out.continuous.value();
  Tensor q(c.shape());
  out.indices.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    out.indices[i] = spec.code_index(c[i]);
    q[i] = spec.level(out.indices[i]);
  }
  out.quantized = straight_through(out.continuous, q);
  out.sigma = latent_sigma(out.continuous);
  return out;
}

LearnedCodebook LearnedCodebook::uniform_grid(std::size_t n_z, std::size_t n_v) {
  if (n_v < 1) throw DomainError("codebook needs at least one value");
  Tensor values(Shape{n_z, n_v});
  for (std::size_t j = 0; j < n_z; ++j)
    for (std::size_t l = 0; l < n_v; ++l)
      values.at(j, l) = n_v == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(l) / static_cast<double>(n_v - 1);
  return LearnedCodebook{std::move(values)};
}

LatentBatch lq_quantize(const Var& continuous, const Var& book) {
  const Shape& cs = continuous.shape();
  const Shape& bs = book.shape();
  if (bs.size() != 2 || bs[1] == 0) throw DomainError("lq_quantize: empty codebook");
  if (cs.size() != 2 || cs[1] != bs[0]) {
    throw ShapeError("lq_quantize: latents " + to_string(cs) + " vs codebook " + to_string(bs));
  }
  const std::size_t n_b = cs[0];
  const std::size_t n_z = cs[1];
  const std::size_t n_v = bs[1];
  const Tensor& c = continuous.value();
  const Tensor& e = book.value();
  LatentBatch out;
  out.continuous = continuous;
  out.indices.resize(n_b * n_z);
  Tensor q(cs);
  for (std::size_t i = 0; i < n_b; ++i)
    for (std::size_t j = 0; j < n_z; ++j) {
      std::size_t best = 0;
      double best_d = std::abs(c.at(i, j) - e.at(j, 0));
      for (std::size_t l = 1; l < n_v; ++l) {
        const double d = std::abs(c.at(i, j) - e.at(j, l));
        if (d < best_d) {
          best_d = d;
          best = l;
        }
      }
      out.indices[i * n_z + j] = best;
      q.at(i, j) = e.at(j, best);
    }
  out.quantized = straight_through(continuous, q);
  out.codes = gather_columns(book, out.indices, n_b);
  out.sigma = latent_sigma(continuous);
  return out;
}

LqLosses lq_losses(const Var& continuous, const Var& codes) {
  if (continuous.shape() != codes.shape()) throw ShapeError("lq_losses: shape mismatch");
  const double inv_b = 1.0 / static_cast<double>(continuous.shape()[0]);
  LqLosses out;
  out.quantize = scale(sum(square(stop_gradient(continuous) - codes)), inv_b);
  out.commit = scale(sum(square(continuous - stop_gradient(codes))), inv_b);
  return out;
}

LatentBatch continuous_latents(const Var& pre_activation) {
  LatentBatch out;
  out.continuous = tanh(pre_activation);
  out.quantized = out.continuous;
  out.sigma = latent_sigma(out.continuous);
  return out;
}

}  // namespace tripod
