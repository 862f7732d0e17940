#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tripod/rng.hpp"
#include "tripod/tensor.hpp"

namespace tripod {

struct SourceSpec {
  std::string name;
  std::size_t cardinality = 0;
};

/// Independent uniform discrete sources rendered deterministically to a grayscale image.
class SyntheticProcess {
 public:
  enum class Renderer { blob, two_blob };

  /// x(8), y(8), size(4), intensity(4): one axis-aligned square, 1024 configurations.
  static SyntheticProcess blobs();
  /// Two squares in separate halves, n_s = 6, 2304 configurations.
  static SyntheticProcess two_blobs();
  /// "blobs" or "two_blobs"; throws ConfigError otherwise.
  static SyntheticProcess by_name(const std::string& name);

  const std::string& name() const { return name_; }
  const std::vector<SourceSpec>& sources() const { return sources_; }
  std::size_t n_s() const { return sources_.size(); }
  std::size_t side() const { return side_; }
  std::size_t pixels() const { return side_ * side_; }
  std::size_t configurations() const;

  /// g(s): pixels in [0, 1], row-major side x side.
  std::vector<double> render(std::span<const std::size_t> s) const;
  std::vector<std::size_t> sample_sources(RngState& rng) const;

 private:
  SyntheticProcess(std::string name, Renderer renderer, std::vector<SourceSpec> sources, std::size_t side);

  std::string name_;
  Renderer renderer_;
  std::vector<SourceSpec> sources_;
  std::size_t side_;
};

/// Single square for the default process sources (x, y, size, intensity) on a 16 x 16 frame.
std::vector<double> render_blob(std::span<const std::size_t> s);

struct Sample {
  std::vector<std::size_t> sources;
  std::vector<double> image;
};

Sample sample_pair(const SyntheticProcess& process, RngState& rng);

/// Paired source labels and images.
struct Dataset {
  std::size_t n_s = 0;
  std::vector<std::size_t> sources;  // (n, n_s) row-major
  Tensor images;                     // (n, pixels)

  std::size_t size() const { return images.rank() == 2 ? images.extent(0) : 0; }
  std::size_t source(std::size_t i, std::size_t k) const { return sources[i * n_s + k]; }
};

/// Every configuration in mixed-radix order (last source fastest).
Dataset enumerate_all(const SyntheticProcess& process);
Dataset sample_dataset(const SyntheticProcess& process, RngState& rng, std::size_t n);

/// Full enumeration when it has at most `max_samples` rows, otherwise a seeded random subset.
Dataset evaluation_set(const SyntheticProcess& process, std::size_t max_samples, std::uint64_t seed);

/// Writes one PGM per image plus labels.csv into `dir`.
void dump_dataset(const Dataset& data, const SyntheticProcess& process, const std::filesystem::path& dir);

}  // namespace tripod
