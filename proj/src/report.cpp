#include "tripod/report.hpp"

#include <cstdio>
#include <optional>

#include "json.hpp"

#include "tripod/config.hpp"

namespace tripod {

using nlohmann::ordered_json;

namespace {

ordered_json provenance(const TrainConfig& config) {
  return {{"version", version()}, {"config_hash", hex64(config_hash(config))}, {"seed", config.seed}};
}

ordered_json report_object(const MetricsReport& r) {
  return {{"step", r.step},  {"psnr", r.psnr}, {"info_m", r.info_m}, {"info_c", r.info_c},
          {"info_e", r.info_e}, {"d", r.d},      {"c", r.c},           {"i", r.i},
          {"active", r.active}};
}

}  // namespace

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string csv_banner(const TrainConfig& config) {
  return "# tripod " + std::string(version()) + " config " + hex64(config_hash(config)) + " seed " +
         std::to_string(config.seed);
}

std::string step_csv_header() { return "step,loss,recon,klm,nhp,quantize,commit,psnr"; }

std::string step_csv_row(const StepLog& s) {
  const auto& t = s.terms;
  return std::to_string(s.step) + "," + fmt(t.total) + "," + fmt(t.reconstruction) + "," + fmt(t.klm) + "," +
         fmt(t.hessian) + "," + fmt(t.quantize) + "," + fmt(t.commit) + "," + fmt(s.psnr);
}

std::string report_csv_header() { return "step,psnr,info_m,info_c,info_e,d,c,i,active,passed"; }

std::string report_csv_row(const MetricsReport& r, bool passed) {
  return std::to_string(r.step) + "," + fmt(r.psnr) + "," + fmt(r.info_m) + "," + fmt(r.info_c) + "," +
         fmt(r.info_e) + "," + fmt(r.d) + "," + fmt(r.c) + "," + fmt(r.i) + "," + std::to_string(r.active) + "," +
         (passed ? "1" : "0");
}

std::string report_json(const MetricsReport& report, const TrainConfig& config, double psnr_threshold) {
  ordered_json doc = provenance(config);
  doc["psnr_threshold"] = psnr_threshold;
  doc["passed"] = report.psnr >= psnr_threshold;
  doc["report"] = report_object(report);
  doc["config"] = nlohmann::json::parse(config_to_json(config));
  return doc.dump(2) + "\n";
}

std::string run_summary_json(const TrainConfig& config, const std::vector<MetricsReport>& log,
                             const std::optional<std::size_t>& selected) {
  ordered_json doc = provenance(config);
  doc["psnr_threshold"] = config.psnr_threshold;
  doc["selected"] = selected ? ordered_json(report_object(log[*selected])) : ordered_json(nullptr);
  ordered_json evals = ordered_json::array();
  for (const auto& r : log) evals.push_back(report_object(r));
  doc["evaluations"] = std::move(evals);
  doc["config"] = nlohmann::json::parse(config_to_json(config));
  return doc.dump(2) + "\n";
}

std::string bench_json(const BenchReport& report, const TrainConfig& config, std::size_t steps) {
  ordered_json doc = provenance(config);
  doc["steps"] = steps;
  ordered_json rows = ordered_json::array();
  for (const auto& r : report.rows) rows.push_back({{"variant", r.name}, {"seconds_per_iteration", r.seconds_per_iteration}});
  doc["variants"] = std::move(rows);
  doc["nhp_ratio"] = report.nhp_ratio;
  return doc.dump(2) + "\n";
}

}  // namespace tripod
