#include <cmath>

#include "doctest.h"

#include "tripod/autodiff.hpp"
#include "tripod/error.hpp"
#include "tripod/rng.hpp"
#include "tripod/verify.hpp"

using namespace tripod;

namespace {

Tensor random_tensor(Shape shape, RngState& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.storage()) v = rng.normal(Stream::init);
  return t;
}

}  // namespace

TEST_SUITE("tensor_core") {
  TEST_CASE("tensor storage matches its shape") {
    Tensor t({2, 3}, 1.5);
    CHECK(t.size() == 6);
    CHECK(numel(t.shape()) == t.size());
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  }

  TEST_CASE("tanh at the origin") {
    Tape tape;
    Var x = tape.variable(Tensor::scalar(0.0));
    Var y = tanh(x);
    CHECK(y.value().item() == 0.0);
    CHECK(tape.backward(y).at(x.id()).item() == doctest::Approx(1.0));
  }

  TEST_CASE("unbiased variance of 1, 2, 3") {
    Tape tape;
    Var x = tape.constant(Tensor::vector({1, 2, 3}));
    CHECK(variance(x, 0).value().item() == doctest::Approx(1.0));
    CHECK(variance(x, 0, 0).value().item() == doctest::Approx(2.0 / 3.0));
  }

  TEST_CASE("matmul gradient against central differences") {
    RngState rng(3);
    const std::vector<Tensor> inputs{random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)};
    auto f = [](Tape&, std::span<const Var> v) { return sum(square(matmul(v[0], v[1]))); };
    CHECK(gradcheck(f, inputs).max_rel_error < 1e-6);
  }

  TEST_CASE("stop_gradient detaches one factor") {
    Tape tape;
    Var x = tape.variable(Tensor::scalar(2.0));
    Var y = x * stop_gradient(x);
    CHECK(tape.backward(y).at(x.id()).item() == doctest::Approx(2.0));
  }

  TEST_CASE("detached operand receives no gradient") {
    Tape tape;
    Var c = tape.variable(Tensor::vector({0.3, -0.2}));
    Var z = tape.variable(Tensor::vector({0.1, 0.4}));
    auto grads = tape.backward(sum(square(stop_gradient(c) - z)));
    for (double g : grads.at(c.id()).storage()) CHECK(g == 0.0);

    Tape tape2;
    Var c2 = tape2.variable(Tensor::vector({0.3, -0.2}));
    Var z2 = tape2.constant(Tensor::vector({0.1, 0.4}));
    auto g = tape2.backward(sum(square(c2 - stop_gradient(z2)))).at(c2.id());
    CHECK(g[0] == doctest::Approx(2 * (0.3 - 0.1)));
    CHECK(g[1] == doctest::Approx(2 * (-0.2 - 0.4)));
  }

  TEST_CASE("straight-through forward is q, Jacobian is identity") {
    Tape tape;
    Var c = tape.variable(Tensor::scalar(0.3));
    Var q = straight_through(c, Tensor::scalar(0.27));
    CHECK(q.value().item() == 0.27);
    CHECK(tape.backward(q).at(c.id()).item() == 1.0);

    Tape tape2;
    Var pre = tape2.variable(Tensor::scalar(0.7));
    Var t = tanh(pre);
    Var z = straight_through(t, Tensor::scalar(std::round(t.value().item() * 5) / 5));
    const double g = tape2.backward(z).at(pre.id()).item();
    const double h = 1e-6;
    CHECK(g == doctest::Approx((std::tanh(0.7 + h) - std::tanh(0.7 - h)) / (2 * h)).epsilon(1e-8));
  }

  TEST_CASE("backward of a sum and of a reused leaf") {
    Tape tape;
    Var x = tape.variable(Tensor::vector({1, 2, 3}));
    const Tensor g = tape.backward(sum(x)).at(x.id());
    CHECK(g == Tensor::vector({1, 1, 1}));

    Tape tape2;
    Var y = tape2.variable(Tensor::scalar(4.0));
    CHECK(tape2.backward(y + y).at(y.id()).item() == 2.0);
  }

  TEST_CASE("two-layer MLP parameter gradients") {
    RngState rng(11);
    const std::vector<Tensor> inputs{random_tensor({5, 3}, rng), random_tensor({3, 6}, rng), random_tensor({1, 6}, rng),
                                     random_tensor({6, 1}, rng)};
    auto f = [](Tape&, std::span<const Var> v) {
      Var h = tanh(matmul(v[0], v[1]) + broadcast_to(v[2], {5, 6}));
      return sum(matmul(h, v[3]));
    };
    CHECK(gradcheck(f, inputs).max_rel_error < 1e-5);
  }

  TEST_CASE("non-finite results raise NumericalError") {
    Tape tape;
    Var x = tape.variable(Tensor::vector({1e300}));
    CHECK_THROWS_AS(x * x, NumericalError);
    CHECK_THROWS_AS(log(-x), DomainError);
    CHECK_THROWS_AS(tape.variable(Tensor::scalar(std::nan(""))), NumericalError);
  }

  TEST_CASE("every registered op passes gradcheck") {
    for (const auto& [name, report] : op_gradchecks(0)) {
      INFO(name);
      CHECK(report.max_rel_error < 1e-4);
    }
  }
}
