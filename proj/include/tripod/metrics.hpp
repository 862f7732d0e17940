#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tripod/synth.hpp"

namespace tripod {

inline constexpr std::size_t kContinuousBins = 20;
inline constexpr double kActiveStdFloor = 1e-3;

/// Latent codes of an evaluation set, one row per sample.
struct LatentCodes {
  Eigen::MatrixXd continuous;  // pre-quantization values
  Eigen::MatrixXd quantized;   // grid values (equal to continuous for unquantized models)
  bool on_grid = true;         // false: bin quantized values before computing MI
};

/// Ground-truth labels (n x n_s) and their cardinalities.
struct SourceLabels {
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> values;
  std::vector<int> cardinalities;

  static SourceLabels from_dataset(const Dataset& data, const SyntheticProcess& process);
  std::size_t n() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t n_s() const { return static_cast<std::size_t>(values.cols()); }
  std::vector<int> column(std::size_t i) const;
};

/// Entropy in nats of the empirical distribution of `a`.
double entropy(std::span<const std::int64_t> a);
/// Plug-in mutual information in nats from the joint histogram of (a, b).
double plugin_mi(std::span<const std::int64_t> a, std::span<const std::int64_t> b);

/// Dense ids of the distinct values, in ascending value order.
std::vector<std::int64_t> distinct_labels(std::span<const double> values);
/// Equal-width bins over [min, max]; a constant column maps to bin 0.
std::vector<std::int64_t> equal_width_bins(std::span<const double> values, std::size_t bins);

/// >= 2 distinct quantized values and continuous std above kActiveStdFloor.
std::vector<bool> active_latents(const LatentCodes& latents);

struct NmiHeatmap {
  std::size_t n_s = 0;
  std::size_t n_z = 0;
  Eigen::MatrixXd m;  // I(s_i; z_j) / H(s_i)
  std::vector<bool> active;

  std::size_t active_count() const;
};

NmiHeatmap nmi_heatmap(const SourceLabels& sources, const LatentCodes& latents);
double info_modularity(const NmiHeatmap& h);
double info_compactness(const NmiHeatmap& h);

/// Multinomial logistic probes on standardized continuous latents, deterministic 80/20 split.
double info_explicitness(const SourceLabels& sources, const LatentCodes& latents, std::uint64_t seed = 0);

struct DciScores {
  double disentanglement = 0.0;
  double completeness = 0.0;
  double informativeness = 0.0;
  Eigen::MatrixXd importance;  // n_z x n_s, each column sums to 1 (or 0)
};

/// Entropy-based scores of an importance matrix R (latents x sources).
double dci_disentanglement(const Eigen::MatrixXd& r);
double dci_completeness(const Eigen::MatrixXd& r);
DciScores dci(const SourceLabels& sources, const LatentCodes& latents, std::uint64_t seed = 0);

struct MetricsReport {
  double info_m = 0.0;
  double info_c = 0.0;
  double info_e = 0.0;
  double d = 0.0;
  double c = 0.0;
  double i = 0.0;
  double psnr = 0.0;
  std::uint64_t step = 0;
  std::size_t active = 0;

  /// Throws NumericalError on NaN and Error when a score leaves [0, 1].
  void validate() const;
};

MetricsReport evaluate_codes(const SourceLabels& sources, const LatentCodes& latents, std::uint64_t seed = 0);

/// Heatmap as an RGB image, `cell` pixels per entry; inactive columns drawn in red.
void write_heatmap_ppm(const NmiHeatmap& h, const std::filesystem::path& path, std::size_t cell = 16);

}  // namespace tripod
