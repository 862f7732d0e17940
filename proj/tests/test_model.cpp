#include <cmath>
#include <cstdlib>
#include <sstream>

#include "doctest.h"

#include "tripod/checkpoint.hpp"
#include "tripod/config.hpp"
#include "tripod/error.hpp"
#include "tripod/model.hpp"
#include "tripod/pipeline.hpp"

using namespace tripod;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.hidden_width = 16;
  c.hidden_layers = 2;
  c.batch_size = 16;
  c.max_updates = 4;
  c.eval_every = 2;
  c.eval_samples = 256;
  return c;
}

Tensor blob_batch(std::size_t n, std::uint64_t seed) {
  const auto process = SyntheticProcess::blobs();
  RngState rng(seed);
  Tensor batch({n, process.pixels()});
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = sample_pair(process, rng);
    for (std::size_t p = 0; p < s.image.size(); ++p) batch.at(i, p) = s.image[p];
  }
  return batch;
}

struct Evaluated {
  ObjectiveTerms terms;
  std::vector<Tensor> grads;
};

Evaluated evaluate(const TrainConfig& config, const Tensor& batch) {
  RngState init(config.seed);
  Autoencoder model(config, 256, 4, init);
  Tape tape;
  auto bound = model.bind(tape, true);
  RngState rng(42);
  Objective obj = tripod_objective(batch, model, bound, config, rng);
  auto g = tape.backward(obj.loss);
  Evaluated out{obj.terms, {}};
  for (const Var& p : bound.params) out.grads.push_back(g.at(p.id()));
  return out;
}

MetricsReport report(std::uint64_t step, double psnr, double info_m) {
  MetricsReport r;
  r.step = step;
  r.psnr = psnr;
  r.info_m = info_m;
  return r;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("zero weights leave the reconstruction loss alone") {
    TrainConfig c = small_config();
    c.lambda_klm = 0.0;
    c.lambda_nhp = 0.0;
    const auto e = evaluate(c, blob_batch(16, 1));
    CHECK(e.terms.total == e.terms.reconstruction);
  }

  TEST_CASE("a disabled leg and a zero-weight leg give the same gradient") {
    const Tensor batch = blob_batch(16, 2);
    TrainConfig zero = small_config();
    zero.lambda_nhp = 0.0;
    TrainConfig off = small_config();
    off.hessian = HessianLeg::off;
    const auto a = evaluate(zero, batch), b = evaluate(off, batch);
    REQUIRE(a.grads.size() == b.grads.size());
    for (std::size_t k = 0; k < a.grads.size(); ++k)
      for (std::size_t i = 0; i < a.grads[k].size(); ++i)
        CHECK(a.grads[k][i] == doctest::Approx(b.grads[k][i]).epsilon(1e-12).scale(1e-12));
  }

  TEST_CASE("objective is bit-reproducible") {
    const Tensor batch = blob_batch(16, 3);
    const auto a = evaluate(small_config(), batch), b = evaluate(small_config(), batch);
    CHECK(a.terms.total == b.terms.total);
    for (std::size_t k = 0; k < a.grads.size(); ++k) CHECK(a.grads[k] == b.grads[k]);
  }

  TEST_CASE("confident correct logits drive BCE to zero") {
    Tape tape;
    Var x = tape.constant(Tensor::matrix(1, 4, {0, 1, 1, 0}));
    Var logits = tape.constant(Tensor::matrix(1, 4, {-30, 30, 30, -30}));
    CHECK(binary_cross_entropy(logits, x).value().item() < 1e-12);
  }

  TEST_CASE("adamw: zero gradient and zero decay leave parameters unchanged") {
    std::vector<Tensor> p{Tensor::vector({0.5, -1.0})};
    const std::vector<Tensor> g{Tensor::vector({0.0, 0.0})};
    AdamWState state;
    adamw_step(p, g, state, {});
    CHECK(p[0] == Tensor::vector({0.5, -1.0}));
  }

  TEST_CASE("adamw: first step is lr * g / (|g| + eps)") {
    std::vector<Tensor> p{Tensor::scalar(1.0)};
    const std::vector<Tensor> g{Tensor::scalar(0.02)};
    AdamWState state;
    AdamWConfig cfg;
    adamw_step(p, g, state, cfg);
    CHECK(p[0].item() == doctest::Approx(1.0 - cfg.learning_rate * 0.02 / (0.02 + cfg.epsilon)).epsilon(1e-14));
  }

  TEST_CASE("adamw descends a quadratic bowl") {
    std::vector<Tensor> p{Tensor::vector({1.0, -2.0, 0.5})};
    AdamWState state;
    AdamWConfig cfg;
    cfg.learning_rate = 1e-2;
    double prev = 1e300;
    for (int t = 0; t < 100; ++t) {
      double loss = 0.0;
      Tensor g(p[0].shape());
      for (std::size_t i = 0; i < 3; ++i) {
        loss += p[0][i] * p[0][i];
        g[i] = 2 * p[0][i];
      }
      if (t >= 5) CHECK(loss < prev);
      prev = loss;
      adamw_step(p, std::span<const Tensor>(&g, 1), state, cfg);
    }
  }

  TEST_CASE("psnr") {
    const std::vector<double> a(100, 0.5);
    std::vector<double> b(100, 0.6);
    CHECK(psnr(a, b) == doctest::Approx(20.0));
    CHECK(psnr(a, a) == kPsnrCap);
    std::vector<double> x{0.1, 0.9, 0.3, 0.7}, y{0.2, 0.7, 0.35, 0.75};
    double mse = 0;
    for (int i = 0; i < 4; ++i) mse += (x[i] - y[i]) * (x[i] - y[i]) / 4;
    CHECK(psnr(x, y) == doctest::Approx(-10 * std::log10(mse)));
  }

  TEST_CASE("checkpoint selection") {
    const std::vector<MetricsReport> single{report(0, 36.0, 0.2)};
    CHECK(select_checkpoint(single, 35.0) == 0);

    const std::vector<MetricsReport> failing{report(0, 20.0, 0.9), report(1, 34.9, 0.8)};
    CHECK_THROWS_AS(select_checkpoint(failing, 35.0), SelectionError);

    const std::vector<MetricsReport> log{report(0, 30.0, 0.95), report(1, 36.0, 0.4), report(2, 37.0, 0.7),
                                         report(3, 35.0, 0.7), report(4, 38.0, 0.6)};
    CHECK(select_checkpoint(log, 35.0) == 2);
  }

  TEST_CASE("checkpoint round trip resumes bit-exactly") {
    TrainConfig c = small_config();
    c.seed = 7;
    Trainer a(c);
    for (int i = 0; i < 3; ++i) a.step();
    std::stringstream buf;
    write_checkpoint(buf, a.checkpoint());
    Trainer b = Trainer::restore(read_checkpoint(buf));
    CHECK(b.step_count() == 3);
    const StepLog la = a.step(), lb = b.step();
    CHECK(la.terms.total == lb.terms.total);
    const auto& pa = a.model().parameters();
    const auto& pb = b.model().parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t k = 0; k < pa.size(); ++k) CHECK(pa[k].value == pb[k].value);
  }

  TEST_CASE("corrupt checkpoints are rejected") {
    std::stringstream bad("nope");
    CHECK_THROWS_AS(read_checkpoint(bad), ConfigError);
  }

  TEST_CASE("every learned-codebook variant trains a step") {
    TrainConfig c = small_config();
    c.quantizer = QuantizerKind::lq;
    c.density = DensityLeg::klm_naive;
    c.hessian = HessianLeg::vanilla;
    Trainer t(c);
    const StepLog log = t.step();
    CHECK(std::isfinite(log.terms.total));
    CHECK(log.terms.commit >= 0.0);
  }

  TEST_CASE("config json") {
    const TrainConfig c = small_config();
    const TrainConfig back = config_from_json(config_to_json(c));
    CHECK(config_hash(back) == config_hash(c));
    CHECK_THROWS_AS(config_from_json(R"({"lambda_kl": 1})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"batch_size": "64"})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"batch_size": -1})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"quantizer": "vq"})"), ConfigError);
    TrainConfig other = c;
    other.lambda_klm = 1e-4;
    CHECK(config_hash(other) != config_hash(c));
  }

  TEST_CASE("TRIPOD_SEED overrides the config seed") {
    TrainConfig c = small_config();
    setenv("TRIPOD_SEED", "123", 1);
    apply_seed_override(c);
    unsetenv("TRIPOD_SEED");
    CHECK(c.seed == 123);
  }

  TEST_CASE("training with zero updates evaluates the initial model only") {
    TrainConfig c = small_config();
    c.max_updates = 0;
    const TrainResult r = train(c);
    REQUIRE(r.log.size() == 1);
    CHECK(r.log[0].step == 0);
  }
}
