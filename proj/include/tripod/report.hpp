#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tripod/experiments.hpp"
#include "tripod/metrics.hpp"
#include "tripod/model.hpp"

namespace tripod {

/// Number formatting shared by every CSV writer: %.10g, so reruns are byte-identical.
std::string fmt(double v);

/// "# tripod <version> config <hash> seed <seed>"; first line of every CSV.
std::string csv_banner(const TrainConfig& config);

std::string step_csv_header();
std::string step_csv_row(const StepLog& log);

std::string report_csv_header();
std::string report_csv_row(const MetricsReport& report, bool passed);

/// Report with provenance and the config, indented JSON.
std::string report_json(const MetricsReport& report, const TrainConfig& config, double psnr_threshold);

/// Whole-run summary: every evaluation, and the selected one if any passed.
std::string run_summary_json(const TrainConfig& config, const std::vector<MetricsReport>& log,
                             const std::optional<std::size_t>& selected);

std::string bench_json(const BenchReport& report, const TrainConfig& config, std::size_t steps);

}  // namespace tripod
