#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tripod/model.hpp"

namespace tripod {

struct Variant {
  std::string name;
  TrainConfig config;
};

/// tripod, naive (learned codebook, fixed-bandwidth KLM, vanilla Hessian penalty) and the three
/// ablations fine_quantization (n_q squared), no_klm, no_nhp.
std::vector<Variant> ablation_variants(const TrainConfig& base);

/// qlae, qlae+klm, fsq, fsq+klm, tripod.
std::vector<Variant> bench_variants(const TrainConfig& base);

/// Sets one key from its text form: JSON literal if it parses, otherwise a string.
TrainConfig with_override(const TrainConfig& config, const std::string& key, const std::string& value);

using Overrides = std::vector<std::pair<std::string, std::string>>;

/// "a=1,2,b=x,y" -> the cartesian product, first key slowest. Values without '=' extend the previous key.
std::vector<Overrides> expand_grid(const std::string& grid);
/// Named grids; "lambda_grid" sweeps lambda_klm and lambda_nhp over {0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2}.
std::string grid_preset(const std::string& name);

struct BenchRow {
  std::string name;
  double seconds_per_iteration = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  /// tripod / fsq+klm: cost of the Hessian leg.
  double nhp_ratio = 0.0;
};

/// Mean wall time of `steps` updates per variant after `warmup` untimed ones.
BenchReport bench(const TrainConfig& base, std::size_t steps, std::size_t warmup = 2);

}  // namespace tripod
