#include "tripod/synth.hpp"

#include <fstream>

#include "tripod/error.hpp"
#include "tripod/image.hpp"

namespace tripod {

namespace {

constexpr std::size_t kSide = 16;

void fill_square(std::vector<double>& img, std::size_t row, std::size_t col, std::size_t size, double value) {
  for (std::size_t r = row; r < row + size; ++r)
    for (std::size_t c = col; c < col + size; ++c) img[r * kSide + c] = value;
}

}  // namespace

SyntheticProcess::SyntheticProcess(std::string name, Renderer renderer, std::vector<SourceSpec> sources,
                                   std::size_t side)
    : name_(std::move(name)), renderer_(renderer), sources_(std::move(sources)), side_(side) {}

SyntheticProcess SyntheticProcess::blobs() {
  return SyntheticProcess("blobs", Renderer::blob,
                          {{"x", 8}, {"y", 8}, {"size", 4}, {"intensity", 4}}, kSide);
}

SyntheticProcess SyntheticProcess::two_blobs() {
  return SyntheticProcess(
      "two_blobs", Renderer::two_blob,
      {{"left_x", 4}, {"left_y", 4}, {"left_size", 3}, {"right_x", 4}, {"right_y", 4}, {"right_size", 3}},
      kSide);
}

SyntheticProcess SyntheticProcess::by_name(const std::string& name) {
  if (name == "blobs") return blobs();
  if (name == "two_blobs") return two_blobs();
  throw ConfigError("unknown dataset '" + name + "' (expected blobs or two_blobs)");
}

std::size_t SyntheticProcess::configurations() const {
  std::size_t n = 1;
  for (const auto& s : sources_) n *= s.cardinality;
  return n;
}

std::vector<double> render_blob(std::span<const std::size_t> s) {
  if (s.size() != 4 || s[0] >= 8 || s[1] >= 8 || s[2] >= 4 || s[3] >= 4) {
    throw DomainError("render_blob: source values out of range");
  }
  std::vector<double> img(kSide * kSide, 0.0);
  const std::size_t size = 2 + s[2];
  const double intensity = 0.25 * static_cast<double>(s[3] + 1);
  fill_square(img, 1 + s[1], 1 + s[0], size, intensity);
  return img;
}

std::vector<double> SyntheticProcess::render(std::span<const std::size_t> s) const {
  if (s.size() != n_s()) throw DomainError("render: expected " + std::to_string(n_s()) + " sources");
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] >= sources_[k].cardinality) throw DomainError("render: source " + sources_[k].name + " out of range");
  }
  switch (renderer_) {
    case Renderer::blob:
      return render_blob(s);
    case Renderer::two_blob: {
      std::vector<double> img(kSide * kSide, 0.0);
      fill_square(img, 1 + 3 * s[1], s[0], 2 + s[2], 1.0);
      fill_square(img, 1 + 3 * s[4], 8 + s[3], 2 + s[5], 0.6);
      return img;
    }
  }
  return {};
}

std::vector<std::size_t> SyntheticProcess::sample_sources(RngState& rng) const {
  std::vector<std::size_t> s(n_s());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = rng.index(Stream::data, sources_[k].cardinality);
  return s;
}

Sample sample_pair(const SyntheticProcess& process, RngState& rng) {
  Sample out;
  out.sources = process.sample_sources(rng);
  out.image = process.render(out.sources);
  return out;
}

Dataset enumerate_all(const SyntheticProcess& process) {
  const std::size_t n = process.configurations();
  const std::size_t n_s = process.n_s();
  Dataset d;
  d.n_s = n_s;
  d.sources.resize(n * n_s);
  d.images = Tensor(Shape{n, process.pixels()});
  std::vector<std::size_t> s(n_s, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(s.begin(), s.end(), d.sources.begin() + static_cast<std::ptrdiff_t>(i * n_s));
    const auto img = process.render(s);
    std::copy(img.begin(), img.end(), d.images.data().begin() + static_cast<std::ptrdiff_t>(i * img.size()));
    for (std::size_t k = n_s; k-- > 0;) {
      if (++s[k] < process.sources()[k].cardinality) break;
      s[k] = 0;
    }
  }
  return d;
}

Dataset sample_dataset(const SyntheticProcess& process, RngState& rng, std::size_t n) {
  Dataset d;
  d.n_s = process.n_s();
  d.sources.reserve(n * d.n_s);
  d.images = Tensor(Shape{n, process.pixels()});
  for (std::size_t i = 0; i < n; ++i) {
    Sample s = sample_pair(process, rng);
    d.sources.insert(d.sources.end(), s.sources.begin(), s.sources.end());
    std::copy(s.image.begin(), s.image.end(),
              d.images.data().begin() + static_cast<std::ptrdiff_t>(i * s.image.size()));
  }
  return d;
}

Dataset evaluation_set(const SyntheticProcess& process, std::size_t max_samples, std::uint64_t seed) {
  if (process.configurations() <= max_samples) return enumerate_all(process);
  RngState rng(seed);
  return sample_dataset(process, rng, max_samples);
}

void dump_dataset(const Dataset& data, const SyntheticProcess& process, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream labels(dir / "labels.csv");
  if (!labels) throw ConfigError("cannot write " + (dir / "labels.csv").string());
  labels << "file";
  for (const auto& s : process.sources()) labels << ',' << s.name;
  labels << '\n';
  const std::size_t side = process.side();
  for (std::size_t i = 0; i < data.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.pgm", i);
    GrayImage img(side, side);
    for (std::size_t p = 0; p < side * side; ++p) img.pixels[p] = data.images.at(i, p);
    write_pgm(img, dir / name);
    labels << name;
    for (std::size_t k = 0; k < data.n_s; ++k) labels << ',' << data.source(i, k);
    labels << '\n';
  }
}

}  // namespace tripod
