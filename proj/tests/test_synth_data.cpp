#include <cmath>
#include <set>

#include "doctest.h"

#include "tripod/error.hpp"
#include "tripod/metrics.hpp"
#include "tripod/synth.hpp"

using namespace tripod;

TEST_SUITE("synth_data") {
  TEST_CASE("fixed seed reproduces pairs") {
    const auto p = SyntheticProcess::blobs();
    RngState a(17), b(17);
    for (int i = 0; i < 20; ++i) {
      const Sample x = sample_pair(p, a), y = sample_pair(p, b);
      CHECK(x.sources == y.sources);
      CHECK(x.image == y.image);
    }
  }

  TEST_CASE("sources are uniform and pairwise independent") {
    const auto p = SyntheticProcess::blobs();
    constexpr std::size_t n = 100000;
    RngState rng(1);
    std::vector<std::vector<std::int64_t>> cols(p.n_s(), std::vector<std::int64_t>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = p.sample_sources(rng);
      for (std::size_t k = 0; k < s.size(); ++k) cols[k][i] = static_cast<std::int64_t>(s[k]);
    }
    for (std::size_t k = 0; k < p.n_s(); ++k) {
      const double card = static_cast<double>(p.sources()[k].cardinality);
      std::vector<double> counts(p.sources()[k].cardinality, 0.0);
      for (auto v : cols[k]) counts[static_cast<std::size_t>(v)] += 1;
      const double expect = n / card, sd = std::sqrt(n * (1 / card) * (1 - 1 / card));
      for (double c : counts) CHECK(std::abs(c - expect) < 3 * sd);
      for (std::size_t l = k + 1; l < p.n_s(); ++l) CHECK(plugin_mi(cols[k], cols[l]) < 0.01);
    }
  }

  TEST_CASE("smallest dim blob in the corner") {
    const std::vector<std::size_t> s{0, 0, 0, 0};
    const auto img = render_blob(s);
    for (std::size_t r = 0; r < 16; ++r)
      for (std::size_t c = 0; c < 16; ++c) {
        const bool inside = r >= 1 && r <= 2 && c >= 1 && c <= 2;
        CHECK(img[r * 16 + c] == (inside ? 0.25 : 0.0));
      }
  }

  TEST_CASE("swapping x and y transposes") {
    const std::vector<std::size_t> s{1, 5, 2, 3}, t{5, 1, 2, 3};
    const auto a = render_blob(s), b = render_blob(t);
    for (std::size_t r = 0; r < 16; ++r)
      for (std::size_t c = 0; c < 16; ++c) CHECK(a[r * 16 + c] == b[c * 16 + r]);
  }

  TEST_CASE("largest blob fits in the frame") {
    const std::vector<std::size_t> s{7, 7, 3, 3};
    const auto img = render_blob(s);
    double mass = 0;
    for (double v : img) mass += v;
    CHECK(mass == 25.0);
    CHECK_THROWS_AS(render_blob(std::vector<std::size_t>{8, 0, 0, 0}), DomainError);
  }

  TEST_CASE("enumeration is complete and injective") {
    const auto p = SyntheticProcess::blobs();
    const Dataset d = enumerate_all(p);
    CHECK(d.size() == 1024);
    CHECK(d.source(1, 3) == 1);
    CHECK(d.source(1, 0) == 0);
    std::set<std::vector<double>> images;
    for (std::size_t i = 0; i < d.size(); ++i) {
      std::vector<double> row(d.images.data().begin() + i * 256, d.images.data().begin() + (i + 1) * 256);
      images.insert(row);
    }
    CHECK(images.size() == 1024);
    CHECK(enumerate_all(SyntheticProcess::two_blobs()).size() == 2304);
  }

  TEST_CASE("unknown processes are config errors") {
    CHECK_THROWS_AS(SyntheticProcess::by_name("dsprites"), ConfigError);
  }
}
