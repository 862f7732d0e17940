#include "tripod/hessian.hpp"

#include <string>

#include "tripod/error.hpp"

namespace tripod {

PerturbationDraw draw_perturbations(RngState& rng, std::size_t n_p, std::size_t n_b, std::size_t n_z,
                                    double epsilon, bool gaussian) {
  if (n_p < 2) throw DomainError("Hessian penalty needs n_p >= 2, got " + std::to_string(n_p));
  if (!(epsilon > 0.0)) throw DomainError("finite-difference step must be positive");
  PerturbationDraw d;
  d.n_p = n_p;
  d.epsilon = epsilon;
  d.signs = Tensor(Shape{n_p, n_b, n_z});
  for (double& s : d.signs.data()) s = rng.rademacher(Stream::perturb);
  if (gaussian) {
    d.normals = Tensor(Shape{n_p, n_b, n_z});
    for (double& w : d.normals.data()) w = rng.normal(Stream::perturb);
  } else {
    d.normals = Tensor(Shape{0});
  }
  return d;
}

Var curvature_probe(const TapFunction& f, const Var& z, const Var& direction, double epsilon) {
  if (z.shape() != direction.shape()) throw ShapeError("curvature_probe: direction shape mismatch");
  const std::size_t n = z.shape()[0];
  Var step = scale(direction, epsilon);
  Var rows[] = {z + step, z, z - step};
  Var taps = f(concat(rows, 0));
  Var plus = slice(taps, 0, 0, n);
  Var centre = slice(taps, 0, n, 2 * n);
  Var minus = slice(taps, 0, 2 * n, 3 * n);
  return scale(plus - scale(centre, 2.0) + minus, 1.0 / (epsilon * epsilon));
}

HessianProbe::HessianProbe(PenaltyKind kind, PerturbationDraw draw, bool normalize_activations,
                           NhpAggregation aggregation)
    : kind_(kind), draw_(std::move(draw)), normalize_activations_(normalize_activations), aggregation_(aggregation) {
  if (draw_.n_p < 2) throw DomainError("Hessian penalty needs n_p >= 2");
  if (draw_.signs.rank() != 3) throw ShapeError("perturbation signs must be (n_p, n_b, n_z)");
  n_b_ = draw_.signs.extent(1);
  n_z_ = draw_.signs.extent(2);
  if (kind_ == PenaltyKind::normalized && draw_.normals.shape() != draw_.signs.shape()) {
    throw ShapeError("normalized penalty needs Gaussian directions matching the sign draws");
  }
}

std::size_t HessianProbe::block_count() const {
  const std::size_t families = kind_ == PenaltyKind::normalized ? 2 : 1;
  return 1 + 2 * families * draw_.n_p;
}

Var HessianProbe::stacked_inputs(const Var& z, const Var& sigma) const {
  if (z.shape() != Shape{n_b_, n_z_}) {
    throw ShapeError("HessianProbe: latents " + to_string(z.shape()) + " do not match draws");
  }
  Tape& tape = z.tape();
  const std::size_t per_draw = n_b_ * n_z_;
  std::vector<Var> rows;
  rows.reserve(block_count());
  rows.push_back(z);
  auto push_family = [&](const Tensor& unit) {
    for (std::size_t l = 0; l < draw_.n_p; ++l) {
      std::vector<double> block(unit.data().begin() + static_cast<std::ptrdiff_t>(l * per_draw),
                                unit.data().begin() + static_cast<std::ptrdiff_t>((l + 1) * per_draw));
      Var dir = tape.constant(Tensor(Shape{n_b_, n_z_}, std::move(block)));
      if (kind_ == PenaltyKind::normalized) dir = dir * reshape(sigma, {1, n_z_});
      Var step = scale(dir, draw_.epsilon);
      rows.push_back(z + step);
      rows.push_back(z - step);
    }
  };
  push_family(draw_.signs);
  if (kind_ == PenaltyKind::normalized) push_family(draw_.normals);
  return concat(rows, 0);
}

Var HessianProbe::curvature_variance(const Var& taps, std::size_t family) const {
  const std::size_t t = taps.shape()[1];
  Var centre = slice(taps, 0, 0, n_b_);
  const double inv_eps2 = 1.0 / (draw_.epsilon * draw_.epsilon);
  std::vector<Var> probes;
  probes.reserve(draw_.n_p);
  for (std::size_t l = 0; l < draw_.n_p; ++l) {
    const std::size_t plus_block = 1 + 2 * (family * draw_.n_p + l);
    Var plus = slice(taps, 0, plus_block * n_b_, (plus_block + 1) * n_b_);
    Var minus = slice(taps, 0, (plus_block + 1) * n_b_, (plus_block + 2) * n_b_);
    Var curvature = scale(plus - scale(centre, 2.0) + minus, inv_eps2);
    probes.push_back(reshape(curvature, {1, n_b_, t}));
  }
  Var var = variance(concat(probes, 0), 0, 1);  // (n_b, T)
  if (normalize_activations_) {
    // Per-tap batch RMS of the centre activations.
    Var mean_sq = clamp_min(mean(square(centre), 0), kDenominatorFloor);
    var = var / reshape(mean_sq, {1, t});
  }
  return var;
}

Var HessianProbe::penalty(const Var& taps) const {
  if (taps.shape().size() != 2 || taps.shape()[0] != block_count() * n_b_) {
    throw ShapeError("HessianProbe: tap rows " + to_string(taps.shape()) + " do not match probe layout");
  }
  if (kind_ == PenaltyKind::vanilla) return mean(sum(curvature_variance(taps, 0), 1));
  const std::size_t axis = aggregation_ == NhpAggregation::sample ? 1 : 0;
  Var numerator = sum(curvature_variance(taps, 0), axis);  // (n_b) or (T)
  Var denominator = sum(curvature_variance(taps, 1), axis);
  return mean(numerator / clamp_min(denominator, kDenominatorFloor));
}

Var vanilla_hp_loss(const TapFunction& f, const Var& z, RngState& rng, std::size_t n_p, double epsilon,
                    bool normalize_activations) {
  if (z.shape().size() != 2) throw ShapeError("vanilla_hp_loss expects (n_b, n_z)");
  HessianProbe probe(PenaltyKind::vanilla,
                     draw_perturbations(rng, n_p, z.shape()[0], z.shape()[1], epsilon, false),
                     normalize_activations);
  Var ones = z.tape().constant(Tensor(Shape{z.shape()[1]}, 1.0));
  return probe.penalty(f(probe.stacked_inputs(z, ones)));
}

Var nhp_loss(const TapFunction& f, const Var& z, const Var& sigma, RngState& rng, std::size_t n_p,
             double epsilon, NhpAggregation aggregation) {
  if (z.shape().size() != 2) throw ShapeError("nhp_loss expects (n_b, n_z)");
  HessianProbe probe(PenaltyKind::normalized,
                     draw_perturbations(rng, n_p, z.shape()[0], z.shape()[1], epsilon, true), false, aggregation);
  return probe.penalty(f(probe.stacked_inputs(z, sigma)));
}

std::vector<Eigen::MatrixXd> hessian_oracle(const TapFunction& f, std::span<const double> z, double epsilon) {
  const std::size_t n_z = z.size();
  Tape tape;
  // Four corners per unordered coordinate pair (a <= b).
  std::vector<double> rows;
  for (std::size_t a = 0; a < n_z; ++a)
    for (std::size_t b = a; b < n_z; ++b)
      for (int corner = 0; corner < 4; ++corner) {
        const double sa = (corner & 2) ? -epsilon : epsilon;
        const double sb = (corner & 1) ? -epsilon : epsilon;
        for (std::size_t j = 0; j < n_z; ++j) {
          double v = z[j];
          if (j == a) v += sa;
          if (j == b) v += sb;
          rows.push_back(v);
        }
      }
  const std::size_t n_rows = rows.size() / n_z;
  Var taps = f(tape.constant(Tensor(Shape{n_rows, n_z}, std::move(rows))));
  const Tensor& tv = taps.value();
  const std::size_t n_taps = tv.extent(1);
  std::vector<Eigen::MatrixXd> out(n_taps, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_z),
                                                                 static_cast<Eigen::Index>(n_z)));
  const double denom = 4.0 * epsilon * epsilon;
  std::size_t row = 0;
  for (std::size_t a = 0; a < n_z; ++a)
    for (std::size_t b = a; b < n_z; ++b, row += 4)
      for (std::size_t k = 0; k < n_taps; ++k) {
        const double h = (tv.at(row, k) - tv.at(row + 1, k) - tv.at(row + 2, k) + tv.at(row + 3, k)) / denom;
        const auto ia = static_cast<Eigen::Index>(a);
        const auto ib = static_cast<Eigen::Index>(b);
        out[k](ia, ib) = h;
        out[k](ib, ia) = h;
      }
  return out;
}

Eigen::MatrixXd hessian_oracle(const TapFunction& f, std::span<const double> z, std::size_t tap, double epsilon) {
  auto all = hessian_oracle(f, z, epsilon);
  if (tap >= all.size()) throw ShapeError("hessian_oracle: tap index out of range");
  return all[tap];
}

double offdiagonal_mass(const Eigen::MatrixXd& hessian) {
  double total = 0.0;
  for (Eigen::Index a = 0; a < hessian.rows(); ++a)
    for (Eigen::Index b = 0; b < hessian.cols(); ++b)
      if (a != b) total += hessian(a, b) * hessian(a, b);
  return total;
}

double normalized_hessian_ratio(const Eigen::MatrixXd& hessian, std::span<const double> sigma) {
  if (static_cast<std::size_t>(hessian.rows()) != sigma.size()) {
    throw ShapeError("normalized_hessian_ratio: sigma length mismatch");
  }
  double off = 0.0;
  double all = 0.0;
  for (Eigen::Index a = 0; a < hessian.rows(); ++a)
    for (Eigen::Index b = 0; b < hessian.cols(); ++b) {
      const double t = hessian(a, b) * sigma[static_cast<std::size_t>(a)] * sigma[static_cast<std::size_t>(b)];
      all += t * t;
      if (a != b) off += t * t;
    }
  return off / std::max(all, kDenominatorFloor);
}

}  // namespace tripod
