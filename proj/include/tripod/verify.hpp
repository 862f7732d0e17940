#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tripod/autodiff.hpp"
#include "tripod/hessian.hpp"
#include "tripod/model.hpp"

namespace tripod {

// ---------------------------------------------------------------------------
// Reference implementations

/// Double-loop Gaussian KDE: log q(z_i) with diagonal covariance `joint_variance`.
std::vector<double> naive_log_joint(const Eigen::MatrixXd& z, std::span<const double> joint_variance);
/// Double-loop 1-D KDE of column j with bandwidth h.
std::vector<double> naive_log_marginal(const Eigen::MatrixXd& z, std::size_t j, double h);
double naive_multiinformation(const Eigen::MatrixXd& z, std::span<const double> joint_variance,
                              std::span<const double> marginal_bandwidth);

/// sum_{a,b} p(a,b) log(p(a,b) / (p(a) p(b))) over a dense contingency table.
double direct_sum_mi(const Eigen::MatrixXd& joint_counts);

/// Two-layer tanh network z -> (n_out) with fixed random weights, as a tap function.
TapFunction random_tanh_mlp(std::size_t n_z, std::size_t width, std::size_t n_out, std::uint64_t seed);

/// Exact quadratic-form variances over `draws` samples of v ~ Rademacher(sigma), w ~ N(0, sigma^2).
struct QuadraticFormStats {
  double var_rademacher = 0.0;
  double var_gaussian = 0.0;
  double ratio() const { return var_rademacher / var_gaussian; }
};
QuadraticFormStats quadratic_form_variances(const Eigen::MatrixXd& h, std::span<const double> sigma,
                                            std::size_t draws, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Gradient checking

/// Scalar function of several tensors, evaluated on a fresh tape each call.
using ScalarFunction = std::function<Var(Tape&, std::span<const Var>)>;

/// |analytic - numeric| / max(|analytic|, |numeric|, kGradcheckFloor), maximized over checked entries.
inline constexpr double kGradcheckFloor = 1e-4;

struct GradcheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;
};

/// Five-point central differences with step `step`. `mask`, when given, selects which inputs to check.
GradcheckReport gradcheck(const ScalarFunction& f, const std::vector<Tensor>& inputs, double step = 1e-3,
                          std::span<const bool> mask = {});

/// Every autodiff op on random inputs.
std::vector<std::pair<std::string, GradcheckReport>> op_gradchecks(std::uint64_t seed);

/// The full objective of a small model on a small batch; perturbation draws are replayed per call.
/// With `decoder_only`, encoder parameters (and a straight-through quantizer in front of them) are skipped.
GradcheckReport objective_gradcheck(const TrainConfig& config, bool decoder_only, std::uint64_t seed,
                                    double step = 1e-3);

// ---------------------------------------------------------------------------
// Suites

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckResult> checks;
  bool passed() const;
};

std::vector<std::string> suite_names();  // prop31, prop32, hutchinson, kde, klm, gradcheck
SuiteResult run_suite(const std::string& name, std::uint64_t seed = 0);

}  // namespace tripod
