#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tripod/image.hpp"
#include "tripod/metrics.hpp"
#include "tripod/model.hpp"

namespace tripod {

/// Evaluation data for one process: the full enumeration, or a seeded subset.
struct EvalContext {
  SyntheticProcess process;
  Dataset data;
  SourceLabels labels;

  static EvalContext build(const std::string& dataset, std::size_t max_samples);
};

struct Encoded {
  LatentCodes codes;
  double psnr = 0.0;
};

/// Encodes, quantizes and reconstructs every row of `data`.
Encoded encode_dataset(const Autoencoder& model, const Dataset& data);
/// Codes of a model whose latents are the sources themselves (metrics oracle).
LatentCodes source_oracle_codes(const Dataset& data);

MetricsReport evaluate_model(const Autoencoder& model, const EvalContext& eval, std::uint64_t seed = 0);
/// Also handles checkpoints of the source_oracle model kind.
MetricsReport evaluate_checkpoint(const Checkpoint& checkpoint, const EvalContext& eval);
NmiHeatmap checkpoint_heatmap(const Checkpoint& checkpoint, const EvalContext& eval);

/// Index of the report with maximal InfoM among those with PSNR >= threshold; the earliest wins ties.
/// Throws SelectionError when none pass.
std::size_t select_checkpoint(std::span<const MetricsReport> log, double psnr_threshold);

struct TrainHooks {
  std::function<void(const StepLog&)> on_step;
  std::function<void(const Checkpoint&, const MetricsReport&)> on_eval;
};

struct TrainResult {
  std::vector<MetricsReport> log;
  std::optional<std::size_t> selected;   // index into log
  std::optional<Checkpoint> best;        // checkpoint at `selected`
};

/// Runs max_updates steps, evaluating at step 0, every eval_every steps, and at the end.
TrainResult train(const TrainConfig& config, const TrainHooks& hooks = {});

/// Source-oracle checkpoint for `dataset`.
Checkpoint make_oracle_checkpoint(const std::string& dataset);

/// One row per active latent, `n_steps` decoded images each, sweeping that latent from its
/// occupied minimum to maximum while the others keep the probe image's codes.
struct Traversal {
  GrayImage grid;
  std::vector<std::size_t> latents;
  std::vector<std::pair<double, double>> ranges;
};
Traversal traversal_grid(const Autoencoder& model, const EvalContext& eval, std::size_t image_index,
                         std::size_t n_steps);

}  // namespace tripod
