#include "tripod/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <numbers>
#include <sstream>

#include "tripod/density.hpp"
#include "tripod/error.hpp"
#include "tripod/metrics.hpp"
#include "tripod/quantizers.hpp"
#include "tripod/synth.hpp"

namespace tripod {

// ---------------------------------------------------------------------------
// Reference implementations

std::vector<double> naive_log_joint(const Eigen::MatrixXd& z, std::span<const double> joint_variance) {
  const auto n = z.rows();
  const auto d = z.cols();
  std::vector<double> out(static_cast<std::size_t>(n));
  double log_det = 0.0;
  for (double s : joint_variance) log_det += std::log(s);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> exps(static_cast<std::size_t>(n));
    for (Eigen::Index m = 0; m < n; ++m) {
      double q = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double diff = z(i, j) - z(m, j);
        q += diff * diff / joint_variance[static_cast<std::size_t>(j)];
      }
      exps[static_cast<std::size_t>(m)] = -0.5 * q;
    }
    const double top = *std::max_element(exps.begin(), exps.end());
    double s = 0.0;
    for (double e : exps) s += std::exp(e - top);
    out[static_cast<std::size_t>(i)] = top + std::log(s / static_cast<double>(n)) -
                                       0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) - 0.5 * log_det;
  }
  return out;
}

std::vector<double> naive_log_marginal(const Eigen::MatrixXd& z, std::size_t j, double h) {
  Eigen::MatrixXd col = z.col(static_cast<Eigen::Index>(j));
  const double var = h * h;
  return naive_log_joint(col, std::span<const double>(&var, 1));
}

double naive_multiinformation(const Eigen::MatrixXd& z, std::span<const double> joint_variance,
                              std::span<const double> marginal_bandwidth) {
  const auto joint = naive_log_joint(z, joint_variance);
  double total = 0.0;
  for (double v : joint) total += v;
  for (std::size_t j = 0; j < static_cast<std::size_t>(z.cols()); ++j)
    for (double v : naive_log_marginal(z, j, marginal_bandwidth[j])) total -= v;
  return total / static_cast<double>(z.rows());
}

double direct_sum_mi(const Eigen::MatrixXd& joint_counts) {
  const double n = joint_counts.sum();
  const Eigen::VectorXd pa = joint_counts.rowwise().sum() / n;
  const Eigen::RowVectorXd pb = joint_counts.colwise().sum() / n;
  double mi = 0.0;
  for (Eigen::Index a = 0; a < joint_counts.rows(); ++a)
    for (Eigen::Index b = 0; b < joint_counts.cols(); ++b) {
      const double p = joint_counts(a, b) / n;
      if (p > 0.0) mi += p * std::log(p / (pa(a) * pb(b)));
    }
  return mi;
}

TapFunction random_tanh_mlp(std::size_t n_z, std::size_t width, std::size_t n_out, std::uint64_t seed) {
  RngState rng(seed);
  auto fill = [&](Shape shape, double s) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = s * rng.normal(Stream::init);
    return t;
  };
  const Tensor w1 = fill({n_z, width}, 1.0);
  const Tensor b1 = fill({width}, 0.5);
  const Tensor w2 = fill({width, n_out}, 1.0 / std::sqrt(static_cast<double>(width)));
  const Tensor b2 = fill({n_out}, 0.1);
  return [=](const Var& z) {
    Tape& t = z.tape();
    return matmul(tanh(matmul(z, t.constant(w1)) + t.constant(b1)), t.constant(w2)) + t.constant(b2);
  };
}

QuadraticFormStats quadratic_form_variances(const Eigen::MatrixXd& h, std::span<const double> sigma,
                                            std::size_t draws, std::uint64_t seed) {
  const auto n = h.rows();
  if (static_cast<std::size_t>(n) != sigma.size()) throw ShapeError("quadratic_form_variances: sigma length");
  if (draws < 2) throw DomainError("quadratic_form_variances: need at least two draws");
  RngState rng(seed);
  Eigen::VectorXd v(n), w(n);
  // Welford accumulators.
  double mv = 0.0, sv = 0.0, mw = 0.0, sw = 0.0;
  for (std::size_t k = 1; k <= draws; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      v(j) = sigma[static_cast<std::size_t>(j)] * rng.rademacher(Stream::perturb);
      w(j) = sigma[static_cast<std::size_t>(j)] * rng.normal(Stream::perturb);
    }
    const double qv = v.dot(h * v);
    const double qw = w.dot(h * w);
    const double dv = qv - mv;
    mv += dv / static_cast<double>(k);
    sv += dv * (qv - mv);
    const double dw = qw - mw;
    mw += dw / static_cast<double>(k);
    sw += dw * (qw - mw);
  }
  const double denom = static_cast<double>(draws - 1);
  return {sv / denom, sw / denom};
}

// ---------------------------------------------------------------------------
// Gradient checking

GradcheckReport gradcheck(const ScalarFunction& f, const std::vector<Tensor>& inputs, double step,
                          std::span<const bool> mask) {
  if (!mask.empty() && mask.size() != inputs.size()) throw ShapeError("gradcheck: mask length mismatch");
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : inputs) vars.push_back(tape.variable(t));
    const GradientMap grads = tape.backward(f(tape, vars));
    for (std::size_t k = 0; k < vars.size(); ++k) {
      auto it = grads.find(vars[k].id());
      analytic.push_back(it != grads.end() ? it->second : Tensor(inputs[k].shape(), 0.0));
    }
  }
  auto evaluate = [&](const std::vector<Tensor>& point) {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : point) vars.push_back(tape.constant(t));
    return f(tape, vars).value().item();
  };

  GradcheckReport report;
  std::vector<Tensor> point(inputs);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!mask.empty() && !mask[k]) continue;
    for (std::size_t e = 0; e < inputs[k].size(); ++e) {
      const double x0 = inputs[k][e];
      auto at = [&](double offset) {
        point[k][e] = x0 + offset;
        return evaluate(point);
      };
      // Five-point central difference: O(step^4) truncation lets a wide step swamp rounding.
      const double numeric = (8.0 * (at(step) - at(-step)) - (at(2.0 * step) - at(-2.0 * step))) / (12.0 * step);
      point[k][e] = x0;
      const double a = analytic[k][e];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kGradcheckFloor});
      ++report.checked;
      if (err >= report.max_rel_error) {
        report.max_rel_error = err;
        std::ostringstream os;
        os << "input " << k << " entry " << e << ": analytic " << a << " numeric " << numeric;
        report.worst = os.str();
      }
    }
  }
  return report;
}

namespace {

Tensor random_tensor(Shape shape, RngState& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = lo + (hi - lo) * rng.uniform(Stream::init);
  return t;
}

// Contracts an op output with fixed random weights so every output entry matters.
Var contract(const Var& y, std::uint64_t salt) {
  RngState rng(salt);
  Tensor w(y.shape());
  for (double& v : w.data()) v = rng.uniform(Stream::init) + 0.5;
  return sum(y * y.tape().constant(w));
}

}  // namespace

std::vector<std::pair<std::string, GradcheckReport>> op_gradchecks(std::uint64_t seed) {
  RngState rng(seed);
  std::vector<std::pair<std::string, GradcheckReport>> out;
  auto check = [&](const std::string& name, std::vector<Tensor> inputs,
                   std::function<Var(std::span<const Var>)> op) {
    ScalarFunction f = [op](Tape&, std::span<const Var> v) { return contract(op(v), 17); };
    out.emplace_back(name, gradcheck(f, inputs));
  };
  const Shape m{3, 4};
  auto r = [&](Shape s, double lo = -1.0, double hi = 1.0) { return random_tensor(std::move(s), rng, lo, hi); };
  // Keep clear of kinks: relu and clamp_min inputs avoid a neighbourhood of the threshold.
  auto away = [&](Shape s, double threshold) {
    Tensor t = r(std::move(s));
    for (double& v : t.data()) v = threshold + (v >= 0 ? 0.2 + v : -0.2 + v);
    return t;
  };

  check("add", {r(m), r({1, 4})}, [](auto v) { return v[0] + v[1]; });
  check("sub", {r({3, 1}), r(m)}, [](auto v) { return v[0] - v[1]; });
  check("mul", {r(m), r({4})}, [](auto v) { return v[0] * v[1]; });
  check("div", {r(m), r({3, 1}, 0.5, 2.0)}, [](auto v) { return v[0] / v[1]; });
  check("scale", {r(m)}, [](auto v) { return scale(v[0], -2.5); });
  check("shift", {r(m)}, [](auto v) { return shift(v[0], 0.75); });
  check("neg", {r(m)}, [](auto v) { return neg(v[0]); });
  check("matmul", {r({3, 5}), r({5, 2})}, [](auto v) { return matmul(v[0], v[1]); });
  check("tanh", {r(m, -2.0, 2.0)}, [](auto v) { return tanh(v[0]); });
  check("sigmoid", {r(m, -3.0, 3.0)}, [](auto v) { return sigmoid(v[0]); });
  check("relu", {away(m, 0.0)}, [](auto v) { return relu(v[0]); });
  check("exp", {r(m)}, [](auto v) { return exp(v[0]); });
  check("log", {r(m, 0.2, 3.0)}, [](auto v) { return log(v[0]); });
  check("sqrt", {r(m, 0.2, 3.0)}, [](auto v) { return sqrt(v[0]); });
  check("square", {r(m)}, [](auto v) { return square(v[0]); });
  check("softplus", {r(m, -5.0, 5.0)}, [](auto v) { return softplus(v[0]); });
  check("clamp_min", {away(m, 0.1)}, [](auto v) { return clamp_min(v[0], 0.1); });
  check("sum", {r(m)}, [](auto v) { return sum(v[0]); });
  check("sum_axis", {r({2, 3, 4})}, [](auto v) { return sum(v[0], 1); });
  check("mean", {r(m)}, [](auto v) { return mean(v[0]); });
  check("mean_axis", {r({2, 3, 4})}, [](auto v) { return mean(v[0], 2); });
  check("variance", {r({5, 3})}, [](auto v) { return variance(v[0], 0, 1); });
  check("variance_ddof0", {r({2, 5, 3})}, [](auto v) { return variance(v[0], 1, 0); });
  check("logsumexp", {r({3, 4, 2}, -3.0, 3.0)}, [](auto v) { return logsumexp(v[0], 1); });
  check("reshape", {r(m)}, [](auto v) { return reshape(v[0], {2, 6}); });
  check("broadcast_to", {r({3, 1})}, [](auto v) { return broadcast_to(v[0], {2, 3, 4}); });
  check("concat", {r({2, 3}), r({2, 2})}, [](auto v) {
    const Var parts[] = {v[0], v[1]};
    return concat(parts, 1);
  });
  check("slice", {r({4, 3})}, [](auto v) { return slice(v[0], 0, 1, 3); });
  check("gather_columns", {r({3, 5})}, [](auto v) {
    static const std::size_t idx[] = {0, 4, 2, 1, 1, 3, 4, 0, 0, 2, 2, 2};
    return gather_columns(v[0], idx, 4);
  });
  check("composite", {r({4, 3}), r({3, 2})}, [](auto v) {
    Var h = tanh(matmul(v[0], v[1]));
    return logsumexp(square(h) / (sqrt(variance(h, 0) + 1.0)), 0);
  });
  return out;
}

GradcheckReport objective_gradcheck(const TrainConfig& config, bool decoder_only, std::uint64_t seed, double step) {
  const SyntheticProcess process = SyntheticProcess::by_name(config.dataset);
  RngState rng(seed);
  Autoencoder model(config, process.pixels(), process.n_s(), rng);
  Tensor batch(Shape{config.batch_size, process.pixels()});
  for (std::size_t i = 0; i < config.batch_size; ++i) {
    const Sample s = sample_pair(process, rng);
    for (std::size_t p = 0; p < s.image.size(); ++p) batch.at(i, p) = s.image[p];
  }
  // At initialization the encoder output barely varies across the batch, so sigma-scaled probe
  // steps are tiny and the second differences lose most of their digits. Rescale the encoder's
  // output layer to unit spread first; the gradient must agree at any parameter point.
  {
    Tape tape;
    const Autoencoder::Bound bound = model.bind(tape, false);
    const Tensor pre = model.encode(bound, tape.constant(batch)).value();
    double mean = 0.0, sq = 0.0;
    for (double v : pre.storage()) mean += v;
    mean /= static_cast<double>(pre.size());
    for (double v : pre.storage()) sq += (v - mean) * (v - mean);
    const double gain = 1.0 / std::max(std::sqrt(sq / static_cast<double>(pre.size())), 1e-3);
    const std::string last = "enc.l" + std::to_string(config.hidden_layers);
    for (auto& p : model.parameters())
      if (p.name.rfind(last, 0) == 0) p.value *= gain;
  }
  const RngState snapshot = rng;
  ScalarFunction f = [&](Tape&, std::span<const Var> params) {
    Autoencoder::Bound bound{{params.begin(), params.end()}};
    RngState replay = snapshot;
    return tripod_objective(batch, model, bound, config, replay).loss;
  };
  std::vector<Tensor> inputs;
  const std::size_t n = model.parameters().size();
  std::unique_ptr<bool[]> mask(new bool[n]);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& p = model.parameters()[k];
    inputs.push_back(p.value);
    mask[k] = !decoder_only || p.name.rfind("dec.", 0) == 0;
  }
  return gradcheck(f, inputs, step, std::span<const bool>(mask.get(), n));
}

// ---------------------------------------------------------------------------
// Suites

bool SuiteResult::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::vector<double> random_point(std::size_t n, RngState& rng, double lo, double hi) {
  std::vector<double> z(n);
  for (double& v : z) v = lo + (hi - lo) * rng.uniform(Stream::eval);
  return z;
}

TapFunction product_tap(double alpha) {
  return [alpha](const Var& z) { return scale(slice(z, 1, 0, 1) * slice(z, 1, 1, 2), alpha); };
}

SuiteResult suite_prop32(std::uint64_t seed) {
  SuiteResult out{"prop32", {}};
  constexpr std::size_t kDecoders = 20, kDraws = 100000, kNz = 4, kWidth = 16;
  RngState rng(seed);
  std::size_t within = 0;
  double worst = 0.0;
  for (std::size_t d = 0; d < kDecoders; ++d) {
    const TapFunction f = random_tanh_mlp(kNz, kWidth, 1, seed * 7919 + d);
    const auto z = random_point(kNz, rng, -1.0, 1.0);
    const auto sigma = random_point(kNz, rng, 0.3, 2.0);
    const Eigen::MatrixXd h = hessian_oracle(f, z, std::size_t{0});
    const double exact = normalized_hessian_ratio(h, sigma);
    const double mc = quadratic_form_variances(h, sigma, kDraws, seed * 104729 + d).ratio();
    const double err = rel_err(mc, exact);
    worst = std::max(worst, err);
    if (err < 0.02) ++within;
  }
  out.checks.push_back({"monte_carlo_ratio_matches_oracle", within >= 19, static_cast<double>(within), 19.0,
                        std::to_string(within) + "/20 within 2%, worst rel err " + fmt(worst)});
  return out;
}

SuiteResult suite_prop31(std::uint64_t seed) {
  SuiteResult out{"prop31", {}};
  RngState rng(seed);
  // Truncation error scales with the tap, so a wide step isolates rounding.
  constexpr double kStep = 1e-2;
  double worst_vanilla = 0.0, worst_normalized = 0.0, worst_latent = 0.0;
  for (int trial = 0; trial < 6; ++trial) {
    const bool product = trial == 0;
    const TapFunction base = product ? product_tap(1.0) : random_tanh_mlp(4, 16, 3, seed * 31 + trial);
    const std::size_t n_z = product ? 2 : 4;
    const auto z = random_point(n_z, rng, -1.0, 1.0);
    const auto sigma = random_point(n_z, rng, 0.3, 2.0);
    const auto h = hessian_oracle(base, z, kStep);
    for (double alpha : {0.1, 10.0}) {
      const TapFunction scaled = [&base, alpha](const Var& v) { return scale(base(v), alpha); };
      const auto hs = hessian_oracle(scaled, z, kStep);
      for (std::size_t k = 0; k < h.size(); ++k) {
        const double v0 = 2.0 * offdiagonal_mass(h[k]);
        const double v1 = 2.0 * offdiagonal_mass(hs[k]);
        worst_vanilla = std::max(worst_vanilla, rel_err(v1, alpha * alpha * v0));
        worst_normalized = std::max(
            worst_normalized, std::abs(normalized_hessian_ratio(hs[k], sigma) - normalized_hessian_ratio(h[k], sigma)));
      }
    }
    // z_j <- s_j z_j with sigma_j <- s_j sigma_j.
    const auto s = random_point(n_z, rng, 0.2, 5.0);
    Tensor inv_s(Shape{n_z});
    for (std::size_t j = 0; j < n_z; ++j) inv_s[j] = 1.0 / s[j];
    const TapFunction reparam = [&base, inv_s](const Var& v) { return base(v * v.tape().constant(inv_s)); };
    std::vector<double> z2(n_z), sigma2(n_z);
    for (std::size_t j = 0; j < n_z; ++j) {
      z2[j] = s[j] * z[j];
      sigma2[j] = s[j] * sigma[j];
    }
    const auto h_fine = hessian_oracle(base, z);
    const auto h2 = hessian_oracle(reparam, z2);
    for (std::size_t k = 0; k < h_fine.size(); ++k)
      worst_latent = std::max(worst_latent, std::abs(normalized_hessian_ratio(h2[k], sigma2) -
                                                     normalized_hessian_ratio(h_fine[k], sigma)));
  }
  out.checks.push_back({"vanilla_scales_by_alpha_squared", worst_vanilla < 1e-6, worst_vanilla, 1e-6,
                        "max rel err " + fmt(worst_vanilla)});
  out.checks.push_back({"normalized_invariant_to_output_scale", worst_normalized < 1e-9, worst_normalized, 1e-9,
                        "max abs diff " + fmt(worst_normalized)});
  out.checks.push_back({"normalized_invariant_to_latent_scale", worst_latent < 1e-6, worst_latent, 1e-6,
                        "max abs diff " + fmt(worst_latent)});
  return out;
}

SuiteResult suite_hutchinson(std::uint64_t seed) {
  SuiteResult out{"hutchinson", {}};
  constexpr std::size_t kDraws = 100000;
  const std::vector<double> zero2{0.3, -0.7};
  const std::vector<double> ones2{1.0, 1.0};
  const Eigen::MatrixXd hp = hessian_oracle(product_tap(1.0), zero2, std::size_t{0});
  const double v = quadratic_form_variances(hp, ones2, kDraws, seed).var_rademacher;
  out.checks.push_back({"product_variance_is_4", rel_err(v, 4.0) < 0.02, rel_err(v, 4.0), 0.02,
                        "Var[v'Hv] = " + fmt(v)});
  RngState rng(seed + 1);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const TapFunction f = random_tanh_mlp(4, 16, 1, seed * 13 + 100 + trial);
    const auto z = random_point(4, rng, -1.0, 1.0);
    const Eigen::MatrixXd h = hessian_oracle(f, z, std::size_t{0});
    const std::vector<double> ones(4, 1.0);
    const double mc = quadratic_form_variances(h, ones, kDraws, seed * 17 + trial).var_rademacher;
    worst = std::max(worst, rel_err(mc, 2.0 * offdiagonal_mass(h)));
  }
  out.checks.push_back({"mlp_variance_matches_offdiagonal_mass", worst < 0.02, worst, 0.02,
                        "worst rel err " + fmt(worst)});
  return out;
}

SuiteResult suite_kde(std::uint64_t seed) {
  SuiteResult out{"kde", {}};
  RngState rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n_b = 8 + rng.index(Stream::eval, 40);
    const std::size_t n_z = 1 + rng.index(Stream::eval, 5);
    Tape tape;
    Tensor zt = random_tensor({n_b, n_z}, rng);
    Var z = tape.constant(zt);
    Var sigma = sqrt(variance(z, 0, 0));
    const SmoothingSpec spec = silverman(sigma, n_b);
    const Tensor joint = kde_log_joint(z, spec).value();
    const Tensor marg = kde_log_marginals(z, spec).value();
    const double mi = multiinformation(z, spec).value().item();

    Eigen::MatrixXd ze(static_cast<Eigen::Index>(n_b), static_cast<Eigen::Index>(n_z));
    for (std::size_t i = 0; i < n_b; ++i)
      for (std::size_t j = 0; j < n_z; ++j) ze(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = zt.at(i, j);
    const auto& jv = spec.joint_variance.value().storage();
    const auto& mh = spec.marginal_bandwidth.value().storage();
    const auto nj = naive_log_joint(ze, jv);
    for (std::size_t i = 0; i < n_b; ++i) worst = std::max(worst, rel_err(joint[i], nj[i]));
    for (std::size_t j = 0; j < n_z; ++j) {
      const auto nm = naive_log_marginal(ze, j, mh[j]);
      for (std::size_t i = 0; i < n_b; ++i) worst = std::max(worst, rel_err(marg.at(i, j), nm[i]));
    }
    const double nmi = naive_multiinformation(ze, jv, mh);
    worst = std::max(worst, std::abs(mi - nmi) / std::max(std::abs(nmi), 1e-3));
  }
  out.checks.push_back({"vectorized_matches_double_loop", worst < 1e-10, worst, 1e-10, "worst rel err " + fmt(worst)});
  const double s = silverman_factor(64, 2);
  out.checks.push_back({"silverman_nz2_nb64_sigma1", s == 0.25, s, 0.0, "factor = " + fmt(s)});
  return out;
}

SuiteResult suite_klm(std::uint64_t seed) {
  SuiteResult out{"klm", {}};
  constexpr std::size_t kBatch = 512, kSeeds = 20;
  double permuted = 0.0, duplicated = 0.0;
  for (std::size_t k = 0; k < kSeeds; ++k) {
    RngState rng(seed * 1000 + k);
    // Correlated pair, then each column shuffled independently.
    std::vector<double> a(kBatch), b(kBatch);
    for (std::size_t i = 0; i < kBatch; ++i) {
      const double u = rng.normal(Stream::data);
      a[i] = std::tanh(u);
      b[i] = std::tanh(0.8 * u + 0.6 * rng.normal(Stream::data));
    }
    for (std::size_t i = kBatch; i > 1; --i) std::swap(a[i - 1], a[rng.index(Stream::data, i)]);
    for (std::size_t i = kBatch; i > 1; --i) std::swap(b[i - 1], b[rng.index(Stream::data, i)]);
    auto estimate = [&](const std::vector<double>& x, const std::vector<double>& y) {
      Tape tape;
      Tensor t(Shape{kBatch, 2});
      for (std::size_t i = 0; i < kBatch; ++i) {
        t.at(i, 0) = x[i];
        t.at(i, 1) = y[i];
      }
      const LatentBatch latents = fsq_quantize(tape.constant(t), FsqSpec{2, 12});
      return klm_loss(latents).value().item();
    };
    // fsq_quantize applies tanh itself, so feed the pre-activation.
    for (auto* col : {&a, &b})
      for (double& v : *col) v = std::atanh(std::clamp(v, -0.999999, 0.999999));
    permuted += estimate(a, b);
    duplicated += estimate(a, a);
  }
  permuted /= kSeeds;
  duplicated /= kSeeds;
  out.checks.push_back({"permuted_batches_near_zero", std::abs(permuted) < 0.05, permuted, 0.05,
                        "mean multiinformation " + fmt(permuted) + " nats"});
  out.checks.push_back({"duplicated_dimension_positive", duplicated > 0.5, duplicated, 0.5,
                        "mean multiinformation " + fmt(duplicated) + " nats"});
  return out;
}

SuiteResult suite_gradcheck(std::uint64_t seed) {
  SuiteResult out{"gradcheck", {}};
  for (const auto& [name, r] : op_gradchecks(seed))
    out.checks.push_back({"op_" + name, r.max_rel_error < 1e-4, r.max_rel_error, 1e-4, r.worst});

  TrainConfig small;
  small.hidden_width = 6;
  small.hidden_layers = 2;
  small.batch_size = 4;
  // The probe's second differences divide rounding error by epsilon^2; a wider probe keeps the
  // loss smooth enough for finite differences without changing the code path.
  small.epsilon = 0.5;
  small.n_p = 4;
  struct Variant {
    const char* name;
    QuantizerKind q;
    DensityLeg d;
    HessianLeg h;
    bool decoder_only;
    double step;
  };
  const Variant variants[] = {
      {"objective_continuous_tripod", QuantizerKind::none, DensityLeg::klm, HessianLeg::nhp, false, 3e-4},
      // Dividing by the tap mean square curves this loss sharply; a finer step keeps truncation down.
      {"objective_continuous_naive_legs", QuantizerKind::none, DensityLeg::klm_naive, HessianLeg::vanilla, false, 1e-4},
      {"objective_fsq_tripod_decoder", QuantizerKind::fsq, DensityLeg::klm, HessianLeg::nhp, true, 3e-4},
  };
  for (const auto& v : variants) {
    TrainConfig c = small;
    c.quantizer = v.q;
    c.density = v.d;
    c.hessian = v.h;
    c.lambda_klm = 0.5;
    c.lambda_nhp = 0.5;
    const GradcheckReport r = objective_gradcheck(c, v.decoder_only, seed, v.step);
    out.checks.push_back({v.name, r.max_rel_error < 1e-4, r.max_rel_error, 1e-4,
                          std::to_string(r.checked) + " entries; worst " + r.worst});
  }
  return out;
}

}  // namespace

std::vector<std::string> suite_names() { return {"prop31", "prop32", "hutchinson", "kde", "klm", "gradcheck"}; }

SuiteResult run_suite(const std::string& name, std::uint64_t seed) {
  if (name == "prop31") return suite_prop31(seed);
  if (name == "prop32") return suite_prop32(seed);
  if (name == "hutchinson") return suite_hutchinson(seed);
  if (name == "kde") return suite_kde(seed);
  if (name == "klm") return suite_klm(seed);
  if (name == "gradcheck") return suite_gradcheck(seed);
  throw ConfigError("unknown oracle suite '" + name + "'");
}

}  // namespace tripod
