#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tripod/model.hpp"

namespace tripod {

std::string to_string(QuantizerKind k);
std::string to_string(DensityLeg k);
std::string to_string(HessianLeg k);
std::string to_string(ModelKind k);
std::string to_string(MarginalBandwidth k);
std::string to_string(NhpAggregation k);

/// Canonical JSON text: every key, sorted.
std::string config_to_json(const TrainConfig& config, int indent = -1);
/// Starts from defaults; unknown keys and ill-typed values raise ConfigError. Validates the result.
TrainConfig config_from_json(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical JSON.
std::uint64_t config_hash(const TrainConfig& config);
std::string hex64(std::uint64_t v);

/// Applies TRIPOD_SEED from the environment if set.
void apply_seed_override(TrainConfig& config);

/// Library version baked in at configure time.
const char* version();

}  // namespace tripod
