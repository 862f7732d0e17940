#include <cmath>

#include "doctest.h"

#include "tripod/hessian.hpp"
#include "tripod/rng.hpp"
#include "tripod/verify.hpp"

using namespace tripod;

namespace {

TapFunction product(double k) {
  return [k](const Var& z) { return scale(mul(slice(z, 1, 0, 1), slice(z, 1, 1, 2)), k); };
}

TapFunction separable() {
  return [](const Var& z) { return reshape(sum(square(z), 1), {z.shape()[0], 1}); };
}

Tensor points(std::size_t n, std::uint64_t seed) {
  RngState rng(seed);
  Tensor t({n, 2});
  for (double& v : t.storage()) v = rng.normal(Stream::init);
  return t;
}

}  // namespace

TEST_SUITE("hessian_penalties") {
  TEST_CASE("curvature probe is exact on quadratics") {
    Tape tape;
    Var z = tape.constant(Tensor::matrix(1, 2, {0.4, -1.3}));
    Var d11 = tape.constant(Tensor::matrix(1, 2, {1.0, 1.0}));
    Var d10 = tape.constant(Tensor::matrix(1, 2, {1.0, 0.0}));
    CHECK(curvature_probe(product(1.0), z, d11, 0.1).value()[0] == doctest::Approx(2.0).epsilon(1e-12));

    TapFunction affine = [](const Var& x) { return sum(scale(x, 3.0), 1) + 1.0; };
    CHECK(std::abs(curvature_probe(affine, z, d11, 0.1).value()[0]) < 1e-12);

    TapFunction first_square = [](const Var& x) { return square(slice(x, 1, 0, 1)); };
    CHECK(curvature_probe(first_square, z, d10, 0.1).value()[0] == doctest::Approx(2.0).epsilon(1e-12));
  }

  TEST_CASE("vanilla penalty of z1 z2 is 4 and scales quadratically") {
    Tape tape;
    Var z = tape.constant(points(50000, 1));
    RngState rng(2);
    CHECK(vanilla_hp_loss(product(1.0), z, rng, 2, 0.1).value().item() == doctest::Approx(4.0).epsilon(0.02));
    RngState rng10(2);
    const double scaled = vanilla_hp_loss(product(10.0), z, rng10, 2, 0.1).value().item();
    RngState rng1(2);
    CHECK(scaled == doctest::Approx(100.0 * vanilla_hp_loss(product(1.0), z, rng1, 2, 0.1).value().item()));
  }

  TEST_CASE("vanilla penalty of a separable map vanishes") {
    Tape tape;
    Var z = tape.constant(points(256, 3));
    RngState rng(4);
    CHECK(vanilla_hp_loss(separable(), z, rng).value().item() < 1e-12);
  }

  // The ratio is taken per sample, so the Monte-Carlo budget goes into the perturbation count.
  TEST_CASE("normalized penalty: z1 z2 gives 1, invariant to output scale") {
    Tape tape;
    Var z = tape.constant(Tensor::matrix(1, 2, {0.3, -0.8}));
    Var sigma = tape.constant(Tensor::vector({1.0, 1.0}));
    RngState rng(6);
    const double r1 = nhp_loss(product(1.0), z, sigma, rng, 100000).value().item();
    CHECK(r1 == doctest::Approx(1.0).epsilon(0.02));
    RngState rng2(6);
    CHECK(nhp_loss(product(10.0), z, sigma, rng2, 100000).value().item() == doctest::Approx(r1).epsilon(1e-9));
  }

  TEST_CASE("per-activation aggregation: z1 z2 gives 1 over a large batch") {
    Tape tape;
    Var z = tape.constant(points(50000, 11));
    Var sigma = tape.constant(Tensor::vector({1.0, 1.0}));
    RngState rng(12);
    const double r = nhp_loss(product(1.0), z, sigma, rng, 2, 0.1, NhpAggregation::activation).value().item();
    CHECK(r == doctest::Approx(1.0).epsilon(0.02));

    TapFunction two = [](const Var& x) {
      Var taps[] = {square(slice(x, 1, 0, 1)), mul(slice(x, 1, 0, 1), slice(x, 1, 1, 2))};
      return concat(taps, 1);
    };
    Var sep = tape.constant(points(256, 13));
    RngState rng2(14);
    const double mixed = nhp_loss(two, sep, sigma, rng2, 2, 0.1, NhpAggregation::activation).value().item();
    CHECK(mixed > 0.25);  // the product tap alone contributes ~1/2 to the mean
    RngState rng3(14);
    CHECK(nhp_loss(separable(), sep, sigma, rng3, 2, 0.1, NhpAggregation::activation).value().item() < 1e-12);
  }

  TEST_CASE("aggregations agree for one sample and one activation") {
    Tape tape;
    Var z = tape.constant(Tensor::matrix(1, 2, {-0.2, 0.9}));
    Var sigma = tape.constant(Tensor::vector({0.5, 2.0}));
    RngState a(15), b(15);
    const double s = nhp_loss(product(1.0), z, sigma, a, 4).value().item();
    const double t = nhp_loss(product(1.0), z, sigma, b, 4, 0.1, NhpAggregation::activation).value().item();
    CHECK(s == t);
  }

  TEST_CASE("normalized penalty of a separable map is 0") {
    Tape tape;
    Var z = tape.constant(points(256, 7));
    Var sigma = tape.constant(Tensor::vector({0.7, 1.3}));
    RngState rng(8);
    CHECK(nhp_loss(separable(), z, sigma, rng).value().item() < 1e-12);
  }

  TEST_CASE("oracle Hessian") {
    const std::vector<double> z{0.2, -0.5};
    const Eigen::MatrixXd h = hessian_oracle(product(1.0), z, std::size_t{0});
    CHECK(std::abs(h(0, 0)) < 1e-6);
    CHECK(std::abs(h(1, 1)) < 1e-6);
    CHECK(h(0, 1) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(h(1, 0) == doctest::Approx(1.0).epsilon(1e-6));

    const TapFunction mlp = random_tanh_mlp(4, 16, 3, 9);
    const std::vector<double> z4{0.1, -0.3, 0.5, 0.2};
    for (const auto& m : hessian_oracle(mlp, z4)) CHECK((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-6);
  }

  TEST_CASE("closed-form ratio helpers") {
    Eigen::MatrixXd h(2, 2);
    h << 0, 1, 1, 0;
    CHECK(offdiagonal_mass(h) == 2.0);
    const std::vector<double> ones{1.0, 1.0};
    CHECK(normalized_hessian_ratio(h, ones) == 1.0);
    h << 2, 0, 0, 2;
    CHECK(normalized_hessian_ratio(h, ones) == 0.0);
  }
}
