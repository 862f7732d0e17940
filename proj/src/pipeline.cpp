#include "tripod/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "tripod/error.hpp"

namespace tripod {

namespace {

constexpr std::size_t kEncodeChunk = 512;
constexpr std::uint64_t kEvalSubsetSeed = 0;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor rows_of(const Tensor& images, std::size_t begin, std::size_t end) {
  const std::size_t width = images.extent(1);
  std::vector<double> v(images.storage().begin() + static_cast<std::ptrdiff_t>(begin * width),
                        images.storage().begin() + static_cast<std::ptrdiff_t>(end * width));
  return Tensor(Shape{end - begin, width}, std::move(v));
}

}  // namespace

EvalContext EvalContext::build(const std::string& dataset, std::size_t max_samples) {
  SyntheticProcess process = SyntheticProcess::by_name(dataset);
  Dataset data = evaluation_set(process, max_samples, kEvalSubsetSeed);
  SourceLabels labels = SourceLabels::from_dataset(data, process);
  return {std::move(process), std::move(data), std::move(labels)};
}

Encoded encode_dataset(const Autoencoder& model, const Dataset& data) {
  const std::size_t n = data.size();
  const auto n_z = static_cast<Eigen::Index>(model.n_z());
  Encoded out;
  out.codes.continuous.resize(static_cast<Eigen::Index>(n), n_z);
  out.codes.quantized.resize(static_cast<Eigen::Index>(n), n_z);
  out.codes.on_grid = model.quantizer() != QuantizerKind::none;
  std::vector<double> recon;
  recon.reserve(data.images.size());
  for (std::size_t begin = 0; begin < n; begin += kEncodeChunk) {
    const std::size_t end = std::min(n, begin + kEncodeChunk);
    Tape tape;
    const Autoencoder::Bound bound = model.bind(tape, false);
    const Var x = tape.constant(rows_of(data.images, begin, end));
    const LatentBatch latents = model.quantize(bound, model.encode(bound, x));
    const Var logits = model.decode(bound, latents.quantized).logits;
    for (std::size_t r = begin; r < end; ++r) {
      for (Eigen::Index j = 0; j < n_z; ++j) {
        const std::size_t k = (r - begin) * static_cast<std::size_t>(n_z) + static_cast<std::size_t>(j);
        out.codes.continuous(static_cast<Eigen::Index>(r), j) = latents.continuous.value()[k];
        out.codes.quantized(static_cast<Eigen::Index>(r), j) = latents.quantized.value()[k];
      }
    }
    for (double l : logits.value().storage()) recon.push_back(sigmoid(l));
  }
  out.psnr = psnr(data.images.storage(), recon);
  return out;
}

LatentCodes source_oracle_codes(const Dataset& data) {
  LatentCodes codes;
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto n_s = static_cast<Eigen::Index>(data.n_s);
  codes.continuous.resize(n, n_s);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index k = 0; k < n_s; ++k)
      codes.continuous(r, k) = static_cast<double>(data.source(static_cast<std::size_t>(r), static_cast<std::size_t>(k)));
  codes.quantized = codes.continuous;
  codes.on_grid = true;
  return codes;
}

MetricsReport evaluate_model(const Autoencoder& model, const EvalContext& eval, std::uint64_t seed) {
  const Encoded enc = encode_dataset(model, eval.data);
  MetricsReport r = evaluate_codes(eval.labels, enc.codes, seed);
  r.psnr = enc.psnr;
  return r;
}

MetricsReport evaluate_checkpoint(const Checkpoint& checkpoint, const EvalContext& eval) {
  MetricsReport r;
  if (checkpoint.config.model == ModelKind::source_oracle) {
    r = evaluate_codes(eval.labels, source_oracle_codes(eval.data), checkpoint.config.seed);
    r.psnr = kPsnrCap;  // the oracle reconstructs through the renderer itself
  } else {
    r = evaluate_model(model_from_checkpoint(checkpoint), eval, checkpoint.config.seed);
  }
  r.step = checkpoint.step;
  return r;
}

NmiHeatmap checkpoint_heatmap(const Checkpoint& checkpoint, const EvalContext& eval) {
  if (checkpoint.config.model == ModelKind::source_oracle)
    return nmi_heatmap(eval.labels, source_oracle_codes(eval.data));
  return nmi_heatmap(eval.labels, encode_dataset(model_from_checkpoint(checkpoint), eval.data).codes);
}

std::size_t select_checkpoint(std::span<const MetricsReport> log, double psnr_threshold) {
  if (log.empty()) throw SelectionError("select_checkpoint: empty checkpoint series");
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < log.size(); ++k) {
    if (!(log[k].psnr >= psnr_threshold)) continue;
    if (!best || log[k].info_m > log[*best].info_m) best = k;
  }
  if (!best) throw SelectionError("no checkpoint reached " + std::to_string(psnr_threshold) + " dB PSNR");
  return *best;
}

TrainResult train(const TrainConfig& config, const TrainHooks& hooks) {
  Trainer trainer(config);
  const EvalContext eval = EvalContext::build(config.dataset, config.eval_samples);
  TrainResult result;
  auto evaluate = [&] {
    Checkpoint ck = trainer.checkpoint();
    MetricsReport r = evaluate_model(trainer.model(), eval, config.seed);
    r.step = ck.step;
    r.validate();
    result.log.push_back(r);
    if (hooks.on_eval) hooks.on_eval(ck, r);
    const std::size_t k = result.log.size() - 1;
    if (r.psnr >= config.psnr_threshold && (!result.selected || r.info_m > result.log[*result.selected].info_m)) {
      result.selected = k;
      result.best = std::move(ck);
    }
  };
  evaluate();
  for (std::size_t s = 1; s <= config.max_updates; ++s) {
    const StepLog log = trainer.step();
    if (hooks.on_step) hooks.on_step(log);
    if (s % config.eval_every == 0 || s == config.max_updates) evaluate();
  }
  return result;
}

Checkpoint make_oracle_checkpoint(const std::string& dataset) {
  Checkpoint c;
  c.config.dataset = dataset;
  c.config.model = ModelKind::source_oracle;
  c.config.validate();
  SyntheticProcess::by_name(dataset);
  return c;
}

Traversal traversal_grid(const Autoencoder& model, const EvalContext& eval, std::size_t image_index,
                         std::size_t n_steps) {
  if (n_steps < 2) throw DomainError("traversal_grid: need at least two steps");
  if (image_index >= eval.data.size()) throw DomainError("traversal_grid: image index out of range");
  const Encoded enc = encode_dataset(model, eval.data);
  const std::vector<bool> active = active_latents(enc.codes);
  Traversal t;
  for (std::size_t j = 0; j < active.size(); ++j)
    if (active[j]) t.latents.push_back(j);

  const std::size_t side = eval.process.side();
  const std::size_t n_z = model.n_z();
  t.grid = GrayImage(n_steps * side, std::max<std::size_t>(t.latents.size(), 1) * side, 0.0);
  if (t.latents.empty()) return t;

  Tensor z(Shape{t.latents.size() * n_steps, n_z});
  for (std::size_t row = 0; row < t.latents.size(); ++row) {
    const auto j = static_cast<Eigen::Index>(t.latents[row]);
    const double lo = enc.codes.quantized.col(j).minCoeff();
    const double hi = enc.codes.quantized.col(j).maxCoeff();
    t.ranges.emplace_back(lo, hi);
    for (std::size_t s = 0; s < n_steps; ++s) {
      const std::size_t r = row * n_steps + s;
      for (std::size_t d = 0; d < n_z; ++d)
        z.at(r, d) = enc.codes.quantized(static_cast<Eigen::Index>(image_index), static_cast<Eigen::Index>(d));
      const double u = static_cast<double>(s) / static_cast<double>(n_steps - 1);
      z.at(r, static_cast<std::size_t>(j)) = s + 1 == n_steps ? hi : lo + u * (hi - lo);
    }
  }
  Tape tape;
  const Autoencoder::Bound bound = model.bind(tape, false);
  const Tensor logits = model.decode(bound, tape.constant(z)).logits.value();
  for (std::size_t r = 0; r < z.extent(0); ++r) {
    const std::size_t row = r / n_steps;
    const std::size_t col = r % n_steps;
    for (std::size_t p = 0; p < side * side; ++p)
      t.grid.at(row * side + p / side, col * side + p % side) = sigmoid(logits.at(r, p));
  }
  return t;
}

}  // namespace tripod
