// tripod: train, evaluate and inspect disentangling autoencoders on the synthetic processes.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "CLI11.hpp"

#include "tripod/checkpoint.hpp"
#include "tripod/config.hpp"
#include "tripod/error.hpp"
#include "tripod/experiments.hpp"
#include "tripod/pipeline.hpp"
#include "tripod/report.hpp"
#include "tripod/verify.hpp"

namespace fs = std::filesystem;
using namespace tripod;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitSelection = 4;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string ckpt_name(std::uint64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_%08llu.trpd", static_cast<unsigned long long>(step));
  return buf;
}

// Precedence: --seed, then TRIPOD_SEED, then the file.
TrainConfig resolve_config(const std::string& path, const std::optional<std::uint64_t>& seed) {
  TrainConfig config = load_config(path);
  apply_seed_override(config);
  if (seed) config.seed = *seed;
  config.validate();
  return config;
}

struct RunOutcome {
  TrainResult result;
  fs::path dir;
};

// Writes steps.csv, evals.csv, one checkpoint per evaluation, best.trpd and summary.json.
RunOutcome run_training(const TrainConfig& config, const fs::path& dir, std::size_t log_every, bool verbose) {
  fs::create_directories(dir);
  std::ofstream steps(dir / "steps.csv", std::ios::binary);
  std::ofstream evals(dir / "evals.csv", std::ios::binary);
  if (!steps || !evals) throw Error("cannot write into " + dir.string());
  const std::string banner = csv_banner(config);
  steps << banner << "\n" << step_csv_header() << "\n";
  evals << banner << "\n" << report_csv_header() << "\n";

  TrainHooks hooks;
  hooks.on_step = [&](const StepLog& s) {
    steps << step_csv_row(s) << "\n";
    if (verbose && log_every && s.step % log_every == 0)
      std::fprintf(stderr, "step %llu loss %.4f psnr %.2f\n", static_cast<unsigned long long>(s.step),
                   s.terms.total, s.psnr);
  };
  hooks.on_eval = [&](const Checkpoint& ck, const MetricsReport& r) {
    const bool passed = r.psnr >= config.psnr_threshold;
    evals << report_csv_row(r, passed) << "\n";
    evals.flush();
    save_checkpoint(dir / ckpt_name(ck.step), ck);
    if (verbose)
      std::fprintf(stderr, "eval step %llu psnr %.2f InfoM %.4f active %zu%s\n",
                   static_cast<unsigned long long>(r.step), r.psnr, r.info_m, r.active, passed ? "" : " (below PSNR)");
  };

  RunOutcome out{train(config, hooks), dir};
  if (out.result.best) save_checkpoint(dir / "best.trpd", *out.result.best);
  write_text(dir / "summary.json", run_summary_json(config, out.result.log, out.result.selected));
  return out;
}

int cmd_train(const std::string& config_path, const std::optional<std::uint64_t>& seed, const fs::path& out,
              std::size_t log_every) {
  const TrainConfig config = resolve_config(config_path, seed);
  const RunOutcome run = run_training(config, out, log_every, true);
  if (!run.result.selected) {
    std::fprintf(stderr, "no checkpoint reached %.1f dB PSNR\n", config.psnr_threshold);
    return kExitSelection;
  }
  const MetricsReport& best = run.result.log[*run.result.selected];
  std::printf("selected step %llu psnr %s InfoM %s\n", static_cast<unsigned long long>(best.step),
              fmt(best.psnr).c_str(), fmt(best.info_m).c_str());
  return 0;
}

int cmd_eval(const fs::path& checkpoint_path, std::string dataset, const fs::path& out,
             std::optional<double> threshold, std::optional<std::size_t> samples) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  if (dataset.empty()) dataset = ck.config.dataset;
  const double psnr_threshold = threshold.value_or(ck.config.psnr_threshold);
  const EvalContext eval = EvalContext::build(dataset, samples.value_or(ck.config.eval_samples));
  const MetricsReport report = evaluate_checkpoint(ck, eval);
  const bool passed = report.psnr >= psnr_threshold;

  fs::create_directories(out);
  write_text(out / "report.json", report_json(report, ck.config, psnr_threshold));
  write_text(out / "report.csv",
             csv_banner(ck.config) + "\n" + report_csv_header() + "\n" + report_csv_row(report, passed) + "\n");
  write_heatmap_ppm(checkpoint_heatmap(ck, eval), out / "heatmap.ppm");

  std::printf("%s\n%s\n", report_csv_header().c_str(), report_csv_row(report, passed).c_str());
  if (!passed) {
    std::fprintf(stderr, "PSNR %.2f below threshold %.2f\n", report.psnr, psnr_threshold);
    return kExitSelection;
  }
  return 0;
}

int cmd_traverse(const fs::path& checkpoint_path, std::size_t index, std::size_t n_steps, const fs::path& out) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  if (ck.config.model != ModelKind::autoencoder) throw ConfigError("traversals need an autoencoder checkpoint");
  const EvalContext eval = EvalContext::build(ck.config.dataset, ck.config.eval_samples);
  const Traversal t = traversal_grid(model_from_checkpoint(ck), eval, index, n_steps);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_pgm(t.grid, out);
  std::printf("# tripod %s config %s seed %llu\n", version(), hex64(config_hash(ck.config)).c_str(),
              static_cast<unsigned long long>(ck.config.seed));
  std::printf("latent,min,max\n");
  for (std::size_t k = 0; k < t.latents.size(); ++k)
    std::printf("%zu,%s,%s\n", t.latents[k], fmt(t.ranges[k].first).c_str(), fmt(t.ranges[k].second).c_str());
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::optional<std::uint64_t>& seed, std::string grid,
              const std::string& preset, const fs::path& out, std::size_t jobs) {
  const TrainConfig base = resolve_config(config_path, seed);
  if (!preset.empty()) {
    if (!grid.empty()) throw ConfigError("give either --grid or --preset");
    grid = grid_preset(preset);
  }
  if (grid.empty()) throw ConfigError("sweep needs --grid or --preset");
  const auto points = expand_grid(grid);
  std::vector<TrainConfig> configs;
  for (const auto& p : points) {
    TrainConfig c = base;
    for (const auto& [k, v] : p) c = with_override(c, k, v);
    configs.push_back(c);
  }

  struct Row {
    std::optional<MetricsReport> best;
    std::string status = "pending";
  };
  std::vector<Row> rows(points.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < points.size();) {
      char name[32];
      std::snprintf(name, sizeof name, "point_%03zu", k);
      try {
        const RunOutcome run = run_training(configs[k], out / name, 0, false);
        if (run.result.selected) {
          rows[k].best = run.result.log[*run.result.selected];
          rows[k].status = "ok";
        } else {
          rows[k].status = "psnr";
        }
      } catch (const NumericalError&) {
        rows[k].status = "nan";
      }
      std::lock_guard lock(log_mutex);
      std::fprintf(stderr, "%s done: %s\n", name, rows[k].status.c_str());
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, points.size()));
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::string csv = csv_banner(base) + "\npoint";
  for (const auto& [k, _] : points.front()) csv += "," + k;
  csv += ",config_hash,status," + report_csv_header() + "\n";
  for (std::size_t k = 0; k < points.size(); ++k) {
    csv += std::to_string(k);
    for (const auto& [_, v] : points[k]) csv += "," + v;
    csv += "," + hex64(config_hash(configs[k])) + "," + rows[k].status + ",";
    csv += rows[k].best ? report_csv_row(*rows[k].best, true) : std::string(",,,,,,,,,0");
    csv += "\n";
  }
  fs::create_directories(out);
  write_text(out / "sweep.csv", csv);
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int cmd_bench(const std::string& config_path, const std::optional<std::uint64_t>& seed, std::size_t steps,
              const std::string& out) {
  const TrainConfig config = resolve_config(config_path, seed);
  const BenchReport report = bench(config, steps);
  std::printf("variant,seconds_per_iteration\n");
  for (const auto& r : report.rows) std::printf("%s,%.6f\n", r.name.c_str(), r.seconds_per_iteration);
  std::printf("nhp_ratio,%.3f\n", report.nhp_ratio);
  if (!out.empty()) write_text(out, bench_json(report, config, steps));
  return 0;
}

int cmd_oracle(const std::string& suite, std::uint64_t seed) {
  std::vector<std::string> names = suite == "all" ? suite_names() : std::vector<std::string>{suite};
  bool all = true;
  for (const auto& name : names) {
    const SuiteResult r = run_suite(name, seed);
    std::printf("%s %s\n", r.suite.c_str(), r.passed() ? "PASS" : "FAIL");
    for (const auto& c : r.checks)
      std::printf("  %-4s %-36s measured %-12.6g tol %-10.3g %s\n", c.passed ? "ok" : "FAIL", c.name.c_str(),
                  c.measured, c.tolerance, c.detail.c_str());
    all = all && r.passed();
  }
  return all ? 0 : 1;
}

int cmd_make_oracle(const std::string& dataset, const fs::path& out) {
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_checkpoint(out, make_oracle_checkpoint(dataset));
  return 0;
}

int cmd_dump_dataset(const std::string& dataset, const fs::path& out, std::size_t samples, std::uint64_t seed) {
  const SyntheticProcess process = SyntheticProcess::by_name(dataset);
  dump_dataset(evaluation_set(process, samples, seed), process, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tripod disentanglement toolkit"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  std::string config_path, grid, preset, dataset, suite = "all", bench_out;
  fs::path out, checkpoint;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::optional<std::size_t> samples;
  std::size_t log_every = 500, image_index = 0, n_steps = 8, jobs = 1, steps = 20, dump_samples = 10000;
  std::uint64_t oracle_seed = 0, dump_seed = 0;

  auto* train = app.add_subcommand("train", "Train one model, writing checkpoints and step/eval logs");
  train->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "Overrides the config and TRIPOD_SEED");
  train->add_option("--out", out, "Output directory")->required();
  train->add_option("--log-every", log_every, "Progress line interval on stderr (0 = silent)");

  auto* eval = app.add_subcommand("eval", "Metrics report and NMI heatmap of a checkpoint");
  eval->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  eval->add_option("--dataset", dataset, "Defaults to the checkpoint's dataset");
  eval->add_option("--out", out, "Output directory")->required();
  eval->add_option("--psnr-threshold", threshold, "Defaults to the checkpoint config (35 dB)");
  eval->add_option("--eval-samples", samples, "Evaluation subset size");

  auto* traverse = app.add_subcommand("traverse", "Latent traversal grid of one image");
  traverse->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  traverse->add_option("--image-index", image_index, "Row of the evaluation set")->required();
  traverse->add_option("--steps", n_steps, "Images per latent");
  traverse->add_option("--out", out, "PGM path")->required();

  auto* sweep = app.add_subcommand("sweep", "One training run per grid point");
  sweep->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  sweep->add_option("--seed", seed);
  sweep->add_option("--grid", grid, "key=v1,v2,key2=v3,...");
  sweep->add_option("--preset", preset, "Named grid: lambda_grid");
  sweep->add_option("--out", out)->required();
  sweep->add_option("--jobs", jobs, "Concurrent runs");

  auto* benchc = app.add_subcommand("bench", "Seconds per iteration for each leg configuration");
  benchc->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  benchc->add_option("--seed", seed);
  benchc->add_option("--steps", steps, "Timed iterations per variant");
  benchc->add_option("--out", bench_out, "JSON report path");

  auto* oracle = app.add_subcommand("oracle", "Numerical oracle suites; exit 0 iff all pass");
  oracle->add_option("--suite", suite, "all, prop31, prop32, hutchinson, kde, klm or gradcheck");
  oracle->add_option("--seed", oracle_seed);

  auto* make_oracle = app.add_subcommand("make-oracle", "Checkpoint whose latents are the sources");
  make_oracle->add_option("--dataset", dataset)->required();
  make_oracle->add_option("--out", out)->required();

  auto* dump = app.add_subcommand("dump-dataset", "Write the evaluation images as PGM plus labels.csv");
  dump->add_option("--dataset", dataset)->required();
  dump->add_option("--out", out)->required();
  dump->add_option("--samples", dump_samples, "Full enumeration when it fits, else a seeded subset");
  dump->add_option("--seed", dump_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*train) return cmd_train(config_path, seed, out, log_every);
    if (*eval) return cmd_eval(checkpoint, dataset, out, threshold, samples);
    if (*traverse) return cmd_traverse(checkpoint, image_index, n_steps, out);
    if (*sweep) return cmd_sweep(config_path, seed, grid, preset, out, jobs);
    if (*benchc) return cmd_bench(config_path, seed, steps, bench_out);
    if (*oracle) return cmd_oracle(suite, oracle_seed);
    if (*make_oracle) return cmd_make_oracle(dataset, out);
    if (*dump) return cmd_dump_dataset(dataset, out, dump_samples, dump_seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const SelectionError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitSelection;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
