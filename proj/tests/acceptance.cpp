// Acceptance run: one PASS/FAIL line per criterion. Tolerances are pinned here.
//   tripod_acceptance            all criteria
//   tripod_acceptance 1 2 9      selected criteria

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "tripod/config.hpp"
#include "tripod/experiments.hpp"
#include "tripod/metrics.hpp"
#include "tripod/pipeline.hpp"
#include "tripod/quantizers.hpp"
#include "tripod/verify.hpp"

using namespace tripod;

namespace {

constexpr std::uint64_t kSeed = 0;

struct Outcome {
  bool passed = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v, const char* f = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome from_suite(const std::string& name, double time_limit = 0.0) {
  const auto t0 = std::chrono::steady_clock::now();
  const SuiteResult r = run_suite(name, kSeed);
  const double dt = seconds_since(t0);
  Outcome o{r.passed(), ""};
  for (const auto& c : r.checks) {
    if (!c.passed || r.checks.size() <= 4) o.detail += c.name + " " + c.detail + "; ";
  }
  if (r.checks.size() > 4) {
    std::size_t ok = 0;
    for (const auto& c : r.checks) ok += c.passed;
    o.detail = std::to_string(ok) + "/" + std::to_string(r.checks.size()) + " checks; " + o.detail;
  }
  if (time_limit > 0.0) {
    o.passed = o.passed && dt < time_limit;
    o.detail += "runtime " + num(dt, "%.1f") + " s (limit " + num(time_limit, "%.0f") + " s)";
  } else {
    o.detail += "runtime " + num(dt, "%.1f") + " s";
  }
  return o;
}

Outcome criterion_metrics_oracle() {
  const EvalContext eval = EvalContext::build("blobs", 10000);
  const MetricsReport r = evaluate_codes(eval.labels, source_oracle_codes(eval.data), kSeed);
  bool ok = r.info_m == 1.0 && r.info_c == 1.0 && r.d == 1.0 && r.c == 1.0 && r.info_e >= 0.98 && r.i >= 0.98;

  RngState rng(kSeed);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t na = 2 + rng.index(Stream::eval, 6), nb = 2 + rng.index(Stream::eval, 6);
    std::vector<std::int64_t> a, b;
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(nb));
    for (int i = 0; i < 3000; ++i) {
      const auto x = rng.index(Stream::eval, na);
      const auto y = rng.uniform(Stream::eval) < 0.5 ? x % nb : rng.index(Stream::eval, nb);
      a.push_back(static_cast<std::int64_t>(x));
      b.push_back(static_cast<std::int64_t>(y));
      counts(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) += 1;
    }
    worst = std::max(worst, std::abs(plugin_mi(a, b) - direct_sum_mi(counts)));
  }
  ok = ok && worst <= 1e-12;
  return {ok, "InfoM " + num(r.info_m, "%.17g") + " InfoC " + num(r.info_c, "%.17g") + " D " + num(r.d, "%.17g") +
                  " C " + num(r.c, "%.17g") + " InfoE " + num(r.info_e) + " I " + num(r.i) +
                  "; plugin MI vs direct sum max abs diff " + num(worst) + " (tol 1e-12)"};
}

// Desk-scale protocol: every variant, three seeds, best InfoM among checkpoints passing 35 dB.
TrainConfig desk_config() {
  TrainConfig c;
  c.dataset = "blobs";
  c.hidden_width = 128;
  c.max_updates = 15000;
  c.eval_every = 1000;
  c.psnr_threshold = 35.0;
  return c;
}

Outcome criterion_desk_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::string, double> mean_best;
  std::vector<std::string> order;
  bool all_passed_psnr = true;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    TrainConfig base = desk_config();
    base.seed = seed;
    for (const auto& v : ablation_variants(base)) {
      if (seed == 0) order.push_back(v.name);
      const auto r0 = std::chrono::steady_clock::now();
      const TrainResult r = train(v.config);
      double best = 0.0, psnr = r.log.back().psnr;
      if (r.selected) {
        best = r.log[*r.selected].info_m;
        psnr = r.log[*r.selected].psnr;
      } else {
        all_passed_psnr = false;
      }
      mean_best[v.name] += best / 3.0;
      std::printf("  run %-16s seed %llu  best InfoM %.4f  psnr %.2f  %s  %.0f s\n", v.name.c_str(),
                  static_cast<unsigned long long>(seed), best, psnr, r.selected ? "passed" : "NO CHECKPOINT >= 35 dB",
                  seconds_since(r0));
      std::fflush(stdout);
    }
  }
  const double dt = seconds_since(t0);
  bool ordered = true;
  std::string detail;
  for (const auto& name : order) {
    detail += name + " " + num(mean_best[name], "%.4f") + ", ";
    if (name != "tripod" && mean_best["tripod"] < mean_best[name]) ordered = false;
  }
  detail += std::string("all runs pass 35 dB: ") + (all_passed_psnr ? "yes" : "no") + "; runtime " +
            num(dt / 60.0, "%.1f") + " min (limit 120)";
  return {ordered && all_passed_psnr && dt < 7200.0, "mean best InfoM: " + detail};
}

Outcome criterion_fsq() {
  const FsqSpec spec{4, 12};
  const auto grid = spec.grid();
  const std::set<double> levels(grid.begin(), grid.end());
  RngState rng(kSeed);
  Tensor pre(Shape{1000, 4});
  for (double& v : pre.storage()) v = 3.0 * rng.normal(Stream::eval);
  Tensor weights(Shape{1000, 4});
  for (double& v : weights.storage()) v = rng.normal(Stream::eval);

  Tape tape;
  Var x = tape.variable(pre);
  const LatentBatch lb = fsq_quantize(x, spec);
  std::size_t off_grid = 0;
  for (double z : lb.quantized.value().storage()) off_grid += levels.count(z) == 0;
  const Tensor idempotent = fsq_round(lb.quantized.value(), spec);
  const bool fixed_point = idempotent == lb.quantized.value();

  // d z / d c is the identity, so d z / d c_pre is tanh' elementwise.
  const auto grads = tape.backward(sum(lb.quantized * tape.constant(weights)));
  const Tensor& g = grads.at(x.id());
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double t = std::tanh(pre[i]);
    worst = std::max(worst, std::abs(g[i] - weights[i] * (1.0 - t * t)));
  }

  Tape tie_tape;
  const double tie = fsq_quantize(tie_tape.constant(Tensor::matrix(1, 1, {0.0})), FsqSpec{1, 12}).quantized.value()[0];
  const bool ok = off_grid == 0 && fixed_point && worst < 1e-15 && std::abs(tie - 1.0 / 11.0) < 1e-15;
  return {ok, "off-grid outputs " + std::to_string(off_grid) + "/4000, idempotent " + (fixed_point ? "yes" : "no") +
                  ", straight-through Jacobian max dev " + num(worst) + ", tie value " + num(tie, "%.17g") +
                  " (1/11 = " + num(1.0 / 11.0, "%.17g") + ")"};
}

Outcome criterion_bench() {
  TrainConfig base = desk_config();
  const BenchReport r = bench(base, 20);
  double on = 0.0, off = 0.0;
  std::string detail;
  for (const auto& row : r.rows) {
    detail += row.name + " " + num(row.seconds_per_iteration * 1e3, "%.2f") + " ms, ";
    if (row.name == "tripod") on = row.seconds_per_iteration;
    if (row.name == "fsq+klm") off = row.seconds_per_iteration;
  }
  return {on > off, detail + "NHP on/off ratio " + num(r.nhp_ratio, "%.3f")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria = {
      {1, {"normalized penalty equals variance ratio", [] { return from_suite("prop32", 120.0); }}},
      {2, {"scale invariance of the normalized penalty", [] { return from_suite("prop31"); }}},
      {3, {"Hutchinson identity", [] { return from_suite("hutchinson"); }}},
      {4, {"autodiff gradcheck incl. full objective", [] { return from_suite("gradcheck", 60.0); }}},
      {5, {"KDE vectorized vs double loop", [] { return from_suite("kde"); }}},
      {6, {"KLM calibration", [] { return from_suite("klm"); }}},
      {7, {"metrics oracle", criterion_metrics_oracle}},
      {8, {"desk-scale ordering", criterion_desk_ordering}},
      {9, {"FSQ invariants", criterion_fsq}},
      {10, {"bench sanity", criterion_bench}},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  if (selected.empty())
    for (const auto& [k, _] : criteria) selected.insert(k);

  std::printf("tripod %s acceptance\n", version());
  int failures = 0;
  for (int k : selected) {
    const auto it = criteria.find(k);
    if (it == criteria.end()) {
      std::fprintf(stderr, "no criterion %d\n", k);
      return 2;
    }
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.passed;
    std::printf("[%s] criterion %d: %s | %s\n", o.passed ? "PASS" : "FAIL", k, it->second.first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
