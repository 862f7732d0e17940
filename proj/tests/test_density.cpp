#include <cmath>
#include <numbers>

#include "doctest.h"

#include "tripod/density.hpp"
#include "tripod/quantizers.hpp"
#include "tripod/rng.hpp"
#include "tripod/verify.hpp"

using namespace tripod;

namespace {

Eigen::MatrixXd to_matrix(const Tensor& t) {
  Eigen::MatrixXd m(t.extent(0), t.extent(1));
  for (std::size_t i = 0; i < t.extent(0); ++i)
    for (std::size_t j = 0; j < t.extent(1); ++j) m(i, j) = t.at(i, j);
  return m;
}

Tensor random_batch(std::size_t n, std::size_t d, std::uint64_t seed) {
  RngState rng(seed);
  Tensor t({n, d});
  for (double& v : t.storage()) v = rng.normal(Stream::init);
  return t;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_SUITE("density") {
  TEST_CASE("silverman factor") {
    CHECK(silverman_factor(64, 2) == 0.25);
    Tape tape;
    auto spec = silverman(tape.constant(Tensor::vector({1.0, 1.0})), 64);
    CHECK(spec.joint_variance.value()[0] == 0.25);

    auto doubled = silverman(tape.constant(Tensor::vector({0.5, 1.0})), 64);
    CHECK(doubled.joint_variance.value()[1] == doctest::Approx(4 * doubled.joint_variance.value()[0]));

    auto floored = silverman(tape.constant(Tensor::vector({0.0, 1.0})), 64);
    CHECK(floored.joint_variance.value()[0] == doctest::Approx(0.25 * kSigmaFloor * kSigmaFloor));
  }

  TEST_CASE("single point gives the kernel peak") {
    Tape tape;
    const double h = 0.3;
    auto spec = fixed_bandwidth(tape, h, 3);
    Var z = tape.constant(Tensor::matrix(1, 3, {0.2, -0.7, 1.1}));
    const double log2pi = std::log(2 * std::numbers::pi);
    CHECK(kde_log_joint(z, spec).value()[0] == doctest::Approx(-1.5 * log2pi - 1.5 * std::log(h * h)));
    CHECK(kde_log_marginal(z, 1, spec).value()[0] == doctest::Approx(-0.5 * log2pi - std::log(h)));
  }

  TEST_CASE("vectorized estimates match the double loop") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Tensor batch = random_batch(8, 3, seed);
      Tape tape;
      Var z = tape.constant(batch);
      auto spec = silverman(latent_sigma(z), 8);
      const Tensor joint = kde_log_joint(z, spec).value();
      const auto& s = spec.joint_variance.value().storage();
      const auto oracle = naive_log_joint(to_matrix(batch), s);
      for (std::size_t i = 0; i < 8; ++i) CHECK(rel(joint[i], oracle[i]) < 1e-10);
      for (std::size_t j = 0; j < 3; ++j) {
        const Tensor marg = kde_log_marginal(z, j, spec).value();
        const auto mo = naive_log_marginal(to_matrix(batch), j, spec.marginal_bandwidth.value()[j]);
        for (std::size_t i = 0; i < 8; ++i) CHECK(rel(marg[i], mo[i]) < 1e-10);
      }
    }
  }

  TEST_CASE("translation leaves the estimates unchanged") {
    Tensor batch = random_batch(16, 2, 4);
    Tape tape;
    Var z = tape.constant(batch);
    for (std::size_t i = 0; i < 16; ++i) {
      batch.at(i, 0) += 3.0;
      batch.at(i, 1) -= 1.5;
    }
    Var moved = tape.constant(batch);
    auto spec = fixed_bandwidth(tape, 0.4, 2);
    const Tensor a = kde_log_joint(z, spec).value(), b = kde_log_joint(moved, spec).value();
    const Tensor am = kde_log_marginal(z, 0, spec).value(), bm = kde_log_marginal(moved, 0, spec).value();
    for (std::size_t i = 0; i < 16; ++i) {
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
      CHECK(am[i] == doctest::Approx(bm[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("klm: one dimension estimates exactly zero") {
    Tape tape;
    auto lb = continuous_latents(tape.constant(random_batch(64, 1, 9)));
    CHECK(std::abs(klm_loss(lb).value().item()) < 1e-12);
  }

  TEST_CASE("klm: duplicated dimension reads as dependent") {
    Tensor b = random_batch(512, 2, 1);
    for (std::size_t i = 0; i < 512; ++i) b.at(i, 1) = b.at(i, 0);
    Tape tape;
    auto lb = continuous_latents(tape.constant(b));
    CHECK(klm_loss(lb).value().item() > 0.5);
    CHECK(klm_loss_naive(lb, 0.1).value().item() > 0.5);
  }

  TEST_CASE("klm: independent dimensions read near zero") {
    Tape tape;
    auto lb = continuous_latents(tape.constant(random_batch(512, 2, 2)));
    CHECK(std::abs(klm_loss(lb).value().item()) < 0.05);
  }

  TEST_CASE("klm: identical points stay finite") {
    Tape tape;
    auto lb = continuous_latents(tape.constant(Tensor({32, 3}, 0.25)));
    CHECK(std::isfinite(klm_loss(lb).value().item()));
    CHECK(std::isfinite(klm_loss_naive(lb, 0.1).value().item()));
  }

  TEST_CASE("naive klm uses the fixed bandwidth") {
    Tensor batch = random_batch(32, 2, 6);
    Tape tape;
    auto lb = continuous_latents(tape.constant(batch));
    const double h = 0.1;
    Eigen::MatrixXd c = to_matrix(lb.continuous.value());
    const std::vector<double> s{h * h, h * h}, hs{h, h};
    CHECK(klm_loss_naive(lb, h).value().item() == doctest::Approx(naive_multiinformation(c, s, hs)).epsilon(1e-10));
  }
}
