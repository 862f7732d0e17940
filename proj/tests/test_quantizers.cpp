#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "tripod/quantizers.hpp"
#include "tripod/rng.hpp"

using namespace tripod;

namespace {

bool on_grid(double v, const FsqSpec& spec) {
  const auto g = spec.grid();
  return std::find(g.begin(), g.end(), v) != g.end();
}

}  // namespace

TEST_SUITE("quantizers") {
  TEST_CASE("fsq grid endpoints and midpoints") {
    FsqSpec twelve{1, 12};
    CHECK(fsq_round(Tensor::matrix(1, 1, {-1.0}), twelve)[0] == -1.0);
    CHECK(fsq_round(Tensor::matrix(1, 1, {1.0}), twelve)[0] == 1.0);

    FsqSpec three{1, 3};
    Tape tape;
    CHECK(fsq_quantize(tape.constant(Tensor::matrix(1, 1, {0.0})), three).quantized.value()[0] == 0.0);
  }

  TEST_CASE("even n_q tie at tanh output 0 rounds away from zero") {
    Tape tape;
    auto lb = fsq_quantize(tape.constant(Tensor::matrix(1, 1, {0.0})), FsqSpec{1, 12});
    CHECK(lb.quantized.value()[0] == doctest::Approx(1.0 / 11.0).epsilon(1e-15));
  }

  TEST_CASE("fsq outputs lie on the grid and are idempotent") {
    RngState rng(5);
    FsqSpec spec{3, 12};
    Tensor pre({200, 3});
    for (double& v : pre.storage()) v = 3.0 * rng.normal(Stream::init);
    Tape tape;
    auto lb = fsq_quantize(tape.constant(pre), spec);
    for (double z : lb.quantized.value().storage()) CHECK(on_grid(z, spec));
    CHECK(fsq_round(lb.quantized.value(), spec) == lb.quantized.value());
    for (double z : lb.quantized.value().storage()) CHECK(std::abs(z) <= 1.0);
  }

  TEST_CASE("fsq is odd for odd n_q") {
    RngState rng(6);
    FsqSpec spec{1, 7};
    for (int k = 0; k < 100; ++k) {
      const double c = std::tanh(2.0 * rng.normal(Stream::init));
      CHECK(fsq_round(Tensor::matrix(1, 1, {-c}), spec)[0] == -fsq_round(Tensor::matrix(1, 1, {c}), spec)[0]);
    }
  }

  TEST_CASE("fsq gradient is the tanh derivative") {
    Tape tape;
    Var pre = tape.variable(Tensor::matrix(2, 2, {0.3, -1.2, 0.0, 2.0}));
    auto lb = fsq_quantize(pre, FsqSpec{2, 12});
    const Tensor g = tape.backward(sum(lb.quantized)).at(pre.id());
    for (std::size_t i = 0; i < 4; ++i) {
      const double t = std::tanh(pre.value()[i]);
      CHECK(g[i] == doctest::Approx(1.0 - t * t));
    }
  }

  TEST_CASE("lq picks the nearest code, lower index on ties") {
    Tape tape;
    Var book = tape.constant(Tensor::matrix(1, 2, {0.0, 1.0}));
    CHECK(lq_quantize(tape.constant(Tensor::matrix(1, 1, {0.4})), book).quantized.value()[0] == 0.0);
    CHECK(lq_quantize(tape.constant(Tensor::matrix(1, 1, {0.5})), book).quantized.value()[0] == 0.0);
    CHECK(lq_quantize(tape.constant(Tensor::matrix(1, 1, {0.6})), book).quantized.value()[0] == 1.0);
  }

  TEST_CASE("lq matches a brute-force scan") {
    RngState rng(8);
    Tensor values({3, 5});
    for (double& v : values.storage()) v = rng.uniform(Stream::init) * 2 - 1;
    Tensor c({40, 3});
    for (double& v : c.storage()) v = rng.uniform(Stream::init) * 2 - 1;
    Tape tape;
    auto lb = lq_quantize(tape.constant(c), tape.constant(values));
    for (std::size_t i = 0; i < 40; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < 5; ++k)
          if (std::abs(c.at(i, j) - values.at(j, k)) < std::abs(c.at(i, j) - values.at(j, best))) best = k;
        CHECK(lb.quantized.value().at(i, j) == values.at(j, best));
      }
  }

  TEST_CASE("lq losses") {
    Tape tape;
    Var c = tape.constant(Tensor::matrix(1, 2, {1.0, 0.0}));
    auto same = lq_losses(c, c);
    CHECK(same.quantize.value().item() == 0.0);
    CHECK(same.commit.value().item() == 0.0);
    auto unit = lq_losses(c, tape.constant(Tensor::matrix(1, 2, {0.0, 0.0})));
    CHECK(unit.quantize.value().item() == doctest::Approx(1.0));
    CHECK(unit.commit.value().item() == doctest::Approx(1.0));
  }

  TEST_CASE("lq losses route gradients to one side each") {
    for (bool quantize : {true, false}) {
      Tape tape;
      Var c = tape.variable(Tensor::matrix(1, 2, {0.3, -0.4}));
      Var z = tape.variable(Tensor::matrix(1, 2, {0.1, 0.2}));
      auto l = lq_losses(c, z);
      auto g = tape.backward(quantize ? l.quantize : l.commit);
      if (quantize) {
        for (double v : g.at(c.id()).storage()) CHECK(v == 0.0);
        CHECK(g.at(z.id())[0] == doctest::Approx(-2 * (0.3 - 0.1)));
      } else {
        for (double v : g.at(z.id()).storage()) CHECK(v == 0.0);
        CHECK(g.at(c.id())[1] == doctest::Approx(2 * (-0.4 - 0.2)));
      }
    }
  }

  TEST_CASE("uniform codebook is size matched to the fsq grid") {
    auto book = LearnedCodebook::uniform_grid(2, 12);
    CHECK(book.n_v() == 12);
    CHECK(book.values.at(0, 0) == -1.0);
    CHECK(book.values.at(1, 11) == 1.0);
  }
}
