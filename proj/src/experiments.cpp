#include "tripod/experiments.hpp"

#include <chrono>
#include <sstream>

#include "json.hpp"

#include "tripod/config.hpp"
#include "tripod/error.hpp"

namespace tripod {

namespace {

TrainConfig legs(TrainConfig c, QuantizerKind q, DensityLeg d, HessianLeg h) {
  c.quantizer = q;
  c.density = d;
  c.hessian = h;
  return c;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

}  // namespace

std::vector<Variant> ablation_variants(const TrainConfig& base) {
  using Q = QuantizerKind;
  using D = DensityLeg;
  using H = HessianLeg;
  // The quantization leg is ablated by coarse-to-fine: n_q^2 levels. Dropping the quantizer outright
  // lets both other legs shrink all but one latent to a point, which zeroes them.
  TrainConfig fine = legs(base, Q::fsq, D::klm, H::nhp);
  fine.n_q = base.n_q * base.n_q;
  return {
      {"tripod", legs(base, Q::fsq, D::klm, H::nhp)},
      {"naive", legs(base, Q::lq, D::klm_naive, H::vanilla)},
      {"fine_quantization", fine},
      {"no_klm", legs(base, Q::fsq, D::off, H::nhp)},
      {"no_nhp", legs(base, Q::fsq, D::klm, H::off)},
  };
}

std::vector<Variant> bench_variants(const TrainConfig& base) {
  using Q = QuantizerKind;
  using D = DensityLeg;
  using H = HessianLeg;
  return {
      {"qlae", legs(base, Q::lq, D::off, H::off)},
      {"qlae+klm", legs(base, Q::lq, D::klm, H::off)},
      {"fsq", legs(base, Q::fsq, D::off, H::off)},
      {"fsq+klm", legs(base, Q::fsq, D::klm, H::off)},
      {"tripod", legs(base, Q::fsq, D::klm, H::nhp)},
  };
}

TrainConfig with_override(const TrainConfig& config, const std::string& key, const std::string& value) {
  auto doc = nlohmann::json::parse(config_to_json(config));
  if (!doc.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  auto parsed = nlohmann::json::parse(value, nullptr, false);
  doc[key] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
  return config_from_json(doc.dump());
}

std::vector<Overrides> expand_grid(const std::string& grid) {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  std::stringstream ss(grid);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty grid entry in '" + grid + "'");
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      if (axes.empty()) throw ConfigError("grid value '" + item + "' has no key");
      axes.back().second.push_back(item);
      continue;
    }
    const std::string key = trim(item.substr(0, eq));
    const std::string v = trim(item.substr(eq + 1));
    if (key.empty() || v.empty()) throw ConfigError("malformed grid entry '" + item + "'");
    for (const auto& [k, _] : axes)
      if (k == key) throw ConfigError("grid key '" + key + "' repeated");
    axes.push_back({key, {v}});
  }
  if (axes.empty()) throw ConfigError("empty grid");

  std::vector<Overrides> points{{}};
  for (const auto& [key, values] : axes) {
    std::vector<Overrides> next;
    for (const auto& p : points)
      for (const auto& v : values) {
        next.push_back(p);
        next.back().emplace_back(key, v);
      }
    points = std::move(next);
  }
  return points;
}

std::string grid_preset(const std::string& name) {
  if (name == "lambda_grid")
    return "lambda_klm=0,1e-10,1e-8,1e-6,1e-4,1e-2,lambda_nhp=0,1e-10,1e-8,1e-6,1e-4,1e-2";
  throw ConfigError("unknown grid preset '" + name + "'");
}

BenchReport bench(const TrainConfig& base, std::size_t steps, std::size_t warmup) {
  if (steps == 0) throw ConfigError("bench needs at least one step");
  BenchReport report;
  double with_nhp = 0.0, without_nhp = 0.0;
  for (const auto& v : bench_variants(base)) {
    Trainer trainer(v.config);
    for (std::size_t i = 0; i < warmup; ++i) trainer.step();
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < steps; ++i) trainer.step();
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.rows.push_back({v.name, dt / static_cast<double>(steps)});
    if (v.name == "tripod") with_nhp = report.rows.back().seconds_per_iteration;
    if (v.name == "fsq+klm") without_nhp = report.rows.back().seconds_per_iteration;
  }
  report.nhp_ratio = with_nhp / without_nhp;
  return report;
}

}  // namespace tripod
