#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tripod/autodiff.hpp"
#include "tripod/rng.hpp"

namespace tripod {

/// Regularized decoder activations as a function of latents: (rows, n_z) -> (rows, T).
using TapFunction = std::function<Var(const Var& z)>;

/// Unit-scale random directions for one batch; scaled by sigma when stacked.
struct PerturbationDraw {
  Tensor signs;    // (n_p, n_b, n_z), entries +-1
  Tensor normals;  // (n_p, n_b, n_z), entries N(0, 1); empty for the vanilla penalty
  double epsilon = 0.1;
  std::size_t n_p = 2;
};

PerturbationDraw draw_perturbations(RngState& rng, std::size_t n_p, std::size_t n_b, std::size_t n_z,
                                    double epsilon, bool gaussian);

/// Central second difference [f(z + eps d) - 2 f(z) + f(z - eps d)] / eps^2 for every tap.
Var curvature_probe(const TapFunction& f, const Var& z, const Var& direction, double epsilon);

enum class PenaltyKind {
  normalized,  // Var[v'Hv] / Var[w'Hw] with v ~ Rademacher(sigma), w ~ N(0, sigma^2)
  vanilla,     // Var[v'Hv] with v ~ Rademacher(1)
};

/// Where the normalized penalty divides: per sample (activations summed first) or per activation
/// (samples summed first, ratios then averaged over activations).
enum class NhpAggregation { sample, activation };

inline constexpr double kDenominatorFloor = 1e-12;

/// One batch worth of Hessian-penalty probes evaluated through a single stacked decoder pass.
///
/// Row blocks of n_b rows: the centre z first, then for each direction family and each
/// perturbation l the pair z + eps d_l, z - eps d_l.
class HessianProbe {
 public:
  HessianProbe(PenaltyKind kind, PerturbationDraw draw, bool normalize_activations = false,
               NhpAggregation aggregation = NhpAggregation::sample);

  std::size_t block_count() const;
  std::size_t batch_size() const { return n_b_; }

  /// Rows to feed the decoder. For the normalized penalty directions are scaled by sigma.
  Var stacked_inputs(const Var& z, const Var& sigma) const;

  /// Penalty from tap values at every stacked row, shape (block_count * n_b, T).
  Var penalty(const Var& taps) const;

 private:
  Var curvature_variance(const Var& taps, std::size_t family) const;

  PenaltyKind kind_;
  PerturbationDraw draw_;
  bool normalize_activations_;
  NhpAggregation aggregation_;
  std::size_t n_b_;
  std::size_t n_z_;
};

/// Vanilla Hutchinson penalty: mean_i sum_k Var_l[v'H_k v].
Var vanilla_hp_loss(const TapFunction& f, const Var& z, RngState& rng, std::size_t n_p = 2,
                    double epsilon = 0.1, bool normalize_activations = false);

/// Normalized penalty: mean_i [sum_k Var_l(v probes)] / [sum_k Var_l(w probes)].
Var nhp_loss(const TapFunction& f, const Var& z, const Var& sigma, RngState& rng, std::size_t n_p = 2,
             double epsilon = 0.1, NhpAggregation aggregation = NhpAggregation::sample);

/// Hessians of every tap at a single point by central differences over coordinate pairs.
std::vector<Eigen::MatrixXd> hessian_oracle(const TapFunction& f, std::span<const double> z,
                                            double epsilon = 1e-4);
Eigen::MatrixXd hessian_oracle(const TapFunction& f, std::span<const double> z, std::size_t tap,
                               double epsilon = 1e-4);

/// sum_{j1 != j2} H^2.
double offdiagonal_mass(const Eigen::MatrixXd& hessian);
/// sum_{j1 != j2} (H s s)^2 / sum_{j1, j2} (H s s)^2.
double normalized_hessian_ratio(const Eigen::MatrixXd& hessian, std::span<const double> sigma);

}  // namespace tripod
