#include <cmath>

#include "doctest.h"

#include "tripod/forest.hpp"
#include "tripod/metrics.hpp"
#include "tripod/pipeline.hpp"
#include "tripod/verify.hpp"

using namespace tripod;

namespace {

NmiHeatmap heatmap(const Eigen::MatrixXd& m) {
  NmiHeatmap h;
  h.n_s = static_cast<std::size_t>(m.rows());
  h.n_z = static_cast<std::size_t>(m.cols());
  h.m = m;
  h.active.assign(h.n_z, true);
  return h;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("plugin mi of a copy and of an independent pair") {
    std::vector<std::int64_t> a, b, c;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        a.push_back(i);
        b.push_back(i);
        c.push_back(j);
      }
    CHECK(plugin_mi(a, b) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK(plugin_mi(a, b) / entropy(a) == doctest::Approx(1.0));
    CHECK(std::abs(plugin_mi(a, c)) < 1e-15);
  }

  TEST_CASE("plugin mi matches the direct sum") {
    RngState rng(3);
    std::vector<std::int64_t> a, b;
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(5, 3);
    for (int i = 0; i < 2000; ++i) {
      const auto x = static_cast<std::int64_t>(rng.index(Stream::eval, 5));
      const auto y = static_cast<std::int64_t>((x + rng.index(Stream::eval, 2)) % 3);
      a.push_back(x);
      b.push_back(y);
      counts(x, y) += 1;
    }
    CHECK(std::abs(plugin_mi(a, b) - direct_sum_mi(counts)) < 1e-12);
  }

  TEST_CASE("modularity and compactness") {
    Eigen::MatrixXd perm(3, 3);
    perm << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    CHECK(info_modularity(heatmap(perm)) == 1.0);
    CHECK(info_compactness(heatmap(perm)) == 1.0);

    Eigen::MatrixXd column(3, 1);
    column << 0.5, 0.25, 0.25;
    CHECK(info_modularity(heatmap(column)) == doctest::Approx(0.25));

    Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(3, 1, 0.3);
    CHECK(std::abs(info_modularity(heatmap(uniform))) < 1e-15);
  }

  TEST_CASE("dci scores of one-hot and uniform importances") {
    Eigen::MatrixXd one_hot = Eigen::MatrixXd::Identity(3, 3);
    CHECK(dci_disentanglement(one_hot) == doctest::Approx(1.0));
    CHECK(dci_completeness(one_hot) == doctest::Approx(1.0));
    Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(3, 3, 1.0 / 3);
    CHECK(std::abs(dci_disentanglement(uniform)) < 1e-12);
    CHECK(std::abs(dci_completeness(uniform)) < 1e-12);
  }

  TEST_CASE("identity latents score perfectly") {
    const EvalContext eval = EvalContext::build("blobs", 10000);
    const LatentCodes codes = source_oracle_codes(eval.data);
    const MetricsReport r = evaluate_codes(eval.labels, codes);
    CHECK(r.info_m == 1.0);
    CHECK(r.info_c == 1.0);
    CHECK(r.d == 1.0);
    CHECK(r.c == 1.0);
    CHECK(r.info_e >= 0.98);
    CHECK(r.i >= 0.98);
    for (std::uint64_t seed : {1, 2, 3}) CHECK(dci(eval.labels, codes, seed).informativeness >= 0.98);
  }

  TEST_CASE("constant latents carry nothing") {
    const EvalContext eval = EvalContext::build("blobs", 10000);
    LatentCodes codes;
    codes.continuous = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(eval.data.size()), 3, 0.2);
    codes.quantized = codes.continuous;
    codes.on_grid = true;
    CHECK(info_explicitness(eval.labels, codes) == 0.0);
    CHECK(std::ranges::none_of(active_latents(codes), [](bool a) { return a; }));
  }

  TEST_CASE("probe is deterministic for a fixed seed") {
    const EvalContext eval = EvalContext::build("blobs", 10000);
    LatentCodes codes = source_oracle_codes(eval.data);
    RngState rng(4);
    for (Eigen::Index i = 0; i < codes.continuous.rows(); ++i) {
      codes.continuous(i, 1) = rng.normal(Stream::eval);
      codes.quantized(i, 1) = codes.continuous(i, 1);
    }
    codes.on_grid = false;
    CHECK(info_explicitness(eval.labels, codes, 5) == info_explicitness(eval.labels, codes, 5));
  }

  TEST_CASE("equal-width bins and distinct labels") {
    const std::vector<double> v{0.0, 0.05, 0.5, 1.0};
    const auto bins = equal_width_bins(v, 20);
    CHECK(bins.front() == 0);
    CHECK(bins.back() == 19);
    CHECK(equal_width_bins(std::vector<double>{2, 2, 2}, 20) == std::vector<std::int64_t>{0, 0, 0});
    CHECK(distinct_labels(std::vector<double>{0.5, -1, 0.5}) == std::vector<std::int64_t>{1, 0, 1});
  }

  TEST_CASE("forest separates a threshold rule") {
    Eigen::MatrixXd x(200, 2);
    std::vector<int> y(200);
    RngState rng(2);
    for (int i = 0; i < 200; ++i) {
      x(i, 0) = rng.uniform(Stream::eval);
      x(i, 1) = rng.uniform(Stream::eval);
      y[static_cast<std::size_t>(i)] = x(i, 0) > 0.5 ? 1 : 0;
    }
    RandomForest forest(ForestConfig{});
    forest.fit(x, y, 2);
    const auto imp = forest.importances(x, y);
    CHECK(imp[0] > 0.9);
    int right = 0;
    for (int i = 0; i < 200; ++i) right += forest.predict(x, static_cast<std::size_t>(i)) == y[static_cast<std::size_t>(i)];
    CHECK(right >= 195);
  }
}
