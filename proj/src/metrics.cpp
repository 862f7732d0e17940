#include "tripod/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "tripod/error.hpp"
#include "tripod/forest.hpp"
#include "tripod/image.hpp"

namespace tripod {

SourceLabels SourceLabels::from_dataset(const Dataset& data, const SyntheticProcess& process) {
  SourceLabels s;
  const std::size_t n = data.size();
  s.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(data.n_s));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < data.n_s; ++k) s.values(i, k) = static_cast<int>(data.source(i, k));
  for (const auto& src : process.sources()) s.cardinalities.push_back(static_cast<int>(src.cardinality));
  return s;
}

std::vector<int> SourceLabels::column(std::size_t i) const {
  std::vector<int> out(n());
  for (std::size_t r = 0; r < n(); ++r) out[r] = values(r, i);
  return out;
}

// ---------------------------------------------------------------------------
// Information

namespace {

std::vector<std::size_t> counts_of(std::span<const std::int64_t> a) {
  std::vector<std::int64_t> sorted(a.begin(), a.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    counts.push_back(j - i);
    i = j;
  }
  return counts;
}

std::vector<std::int64_t> to_int64(std::span<const int> v) { return {v.begin(), v.end()}; }

}  // namespace

double entropy(std::span<const std::int64_t> a) {
  if (a.empty()) throw DomainError("entropy: empty input");
  const double n = static_cast<double>(a.size());
  double h = 0.0;
  for (std::size_t c : counts_of(a)) h += static_cast<double>(c) / n * std::log(n / static_cast<double>(c));
  return h;
}

double plugin_mi(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  if (a.empty()) throw DomainError("plugin_mi: empty input");
  if (a.size() != b.size()) throw ShapeError("plugin_mi: inputs differ in length");
  std::vector<std::pair<std::int64_t, std::int64_t>> joint(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) joint[i] = {a[i], b[i]};
  std::sort(joint.begin(), joint.end());

  auto marginal = [](std::span<const std::int64_t> v) {
    std::vector<std::pair<std::int64_t, std::size_t>> m;
    std::vector<std::int64_t> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::int64_t x : sorted) {
      if (m.empty() || m.back().first != x) m.push_back({x, 0});
      ++m.back().second;
    }
    return m;
  };
  const auto ma = marginal(a);
  const auto mb = marginal(b);
  auto lookup = [](const auto& m, std::int64_t x) {
    return std::lower_bound(m.begin(), m.end(), std::pair<std::int64_t, std::size_t>{x, 0})->second;
  };

  const double n = static_cast<double>(a.size());
  double mi = 0.0;
  for (std::size_t i = 0; i < joint.size();) {
    std::size_t j = i;
    while (j < joint.size() && joint[j] == joint[i]) ++j;
    const double nab = static_cast<double>(j - i);
    const double na = static_cast<double>(lookup(ma, joint[i].first));
    const double nb = static_cast<double>(lookup(mb, joint[i].second));
    mi += nab / n * std::log(nab * n / (na * nb));
    i = j;
  }
  return std::max(mi, 0.0);
}

std::vector<std::int64_t> distinct_labels(std::span<const double> values) {
  std::vector<double> uniq(values.begin(), values.end());
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<std::int64_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = std::lower_bound(uniq.begin(), uniq.end(), values[i]) - uniq.begin();
  return out;
}

std::vector<std::int64_t> equal_width_bins(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw DomainError("equal_width_bins: need at least one bin");
  std::vector<std::int64_t> out(values.size(), 0);
  if (values.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double width = (*hi_it - lo) / static_cast<double>(bins);
  if (!(width > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto b = static_cast<std::int64_t>(std::floor((values[i] - lo) / width));
    out[i] = std::clamp<std::int64_t>(b, 0, static_cast<std::int64_t>(bins) - 1);
  }
  return out;
}

namespace {

std::vector<double> column_of(const Eigen::MatrixXd& m, Eigen::Index j) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) v[static_cast<std::size_t>(r)] = m(r, j);
  return v;
}

std::vector<std::int64_t> latent_labels(const LatentCodes& latents, Eigen::Index j) {
  const auto v = column_of(latents.quantized, j);
  return latents.on_grid ? distinct_labels(v) : equal_width_bins(v, kContinuousBins);
}

void check_codes(const LatentCodes& latents, std::size_t n) {
  if (latents.continuous.rows() != latents.quantized.rows() || latents.continuous.cols() != latents.quantized.cols())
    throw ShapeError("latent codes: continuous and quantized shapes differ");
  if (static_cast<std::size_t>(latents.quantized.rows()) != n)
    throw ShapeError("latent codes: row count does not match the sources");
  if (latents.quantized.cols() == 0) throw ShapeError("latent codes: no latent dimensions");
}

}  // namespace

std::vector<bool> active_latents(const LatentCodes& latents) {
  const Eigen::Index n_z = latents.quantized.cols();
  std::vector<bool> active(static_cast<std::size_t>(n_z), false);
  for (Eigen::Index j = 0; j < n_z; ++j) {
    const auto labels = latent_labels(latents, j);
    const bool varied = std::any_of(labels.begin(), labels.end(), [&](std::int64_t l) { return l != labels[0]; });
    const auto col = latents.continuous.col(j);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().mean());
    active[static_cast<std::size_t>(j)] = varied && sd > kActiveStdFloor;
  }
  return active;
}

std::size_t NmiHeatmap::active_count() const { return static_cast<std::size_t>(std::count(active.begin(), active.end(), true)); }

NmiHeatmap nmi_heatmap(const SourceLabels& sources, const LatentCodes& latents) {
  check_codes(latents, sources.n());
  NmiHeatmap h;
  h.n_s = sources.n_s();
  h.n_z = static_cast<std::size_t>(latents.quantized.cols());
  h.m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(h.n_s), static_cast<Eigen::Index>(h.n_z));
  h.active = active_latents(latents);
  std::vector<std::vector<std::int64_t>> z(h.n_z);
  for (std::size_t j = 0; j < h.n_z; ++j) z[j] = latent_labels(latents, static_cast<Eigen::Index>(j));
  for (std::size_t i = 0; i < h.n_s; ++i) {
    const auto s = to_int64(sources.column(i));
    const double hs = entropy(s);
    if (!(hs > 0.0)) throw DomainError("nmi_heatmap: source " + std::to_string(i) + " is constant");
    for (std::size_t j = 0; j < h.n_z; ++j)
      h.m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = plugin_mi(s, z[j]) / hs;
  }
  return h;
}

namespace {

// (n r - 1) / (n - 1) for r = max / sum, the gap of the peak above uniform.
double peak_score(const std::vector<double>& v) {
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (v.size() == 1) return total > 0.0 ? 1.0 : 0.0;
  if (!(total > 0.0)) return 0.0;
  const double r = *std::max_element(v.begin(), v.end()) / total;
  const double n = static_cast<double>(v.size());
  return std::clamp((n * r - 1.0) / (n - 1.0), 0.0, 1.0);
}

}  // namespace

double info_modularity(const NmiHeatmap& h) {
  if (h.n_s < 2) throw DomainError("info_modularity: need at least two sources");
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < h.n_z; ++j) {
    if (!h.active[j]) continue;
    std::vector<double> col(h.n_s);
    for (std::size_t i = 0; i < h.n_s; ++i) col[i] = h.m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    acc += peak_score(col);
    ++count;
  }
  return count ? acc / static_cast<double>(count) : 0.0;
}

double info_compactness(const NmiHeatmap& h) {
  if (h.n_s == 0) throw DomainError("info_compactness: no sources");
  if (h.active_count() == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < h.n_s; ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < h.n_z; ++j)
      if (h.active[j]) row.push_back(h.m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    acc += peak_score(row);
  }
  return acc / static_cast<double>(h.n_s);
}

// ---------------------------------------------------------------------------
// Explicitness

namespace {

constexpr std::size_t kProbeIterations = 500;
constexpr double kProbeRate = 0.1;

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Pcg32 rng(seed, 0x2545f4914f6cdd1dULL);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng()) % i;
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

// Test accuracy of a softmax regression fit by full-batch Adam.
double probe_accuracy(const Eigen::MatrixXd& train_x, const std::vector<int>& train_y, const Eigen::MatrixXd& test_x,
                      const std::vector<int>& test_y, int k) {
  const Eigen::Index d = train_x.cols();
  const Eigen::Index n = train_x.rows();
  Eigen::MatrixXd xb(n, d + 1);
  xb << train_x, Eigen::VectorXd::Ones(n);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index r = 0; r < n; ++r) y(r, train_y[static_cast<std::size_t>(r)]) = 1.0;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d + 1, k);
  Eigen::MatrixXd m = w, v = w;
  const double b1 = 0.9, b2 = 0.999;
  for (std::size_t t = 1; t <= kProbeIterations; ++t) {
    Eigen::MatrixXd logits = xb * w;
    logits.colwise() -= logits.rowwise().maxCoeff();
    Eigen::MatrixXd p = logits.array().exp();
    p.array().colwise() /= p.rowwise().sum().array();
    const Eigen::MatrixXd g = xb.transpose() * (p - y) / static_cast<double>(n);
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g.cwiseProduct(g);
    const double c1 = 1 - std::pow(b1, double(t));
    const double c2 = 1 - std::pow(b2, double(t));
    w.array() -= kProbeRate * (m.array() / c1) / ((v.array() / c2).sqrt() + 1e-8);
  }
  Eigen::MatrixXd tb(test_x.rows(), d + 1);
  tb << test_x, Eigen::VectorXd::Ones(test_x.rows());
  const Eigen::MatrixXd scores = tb * w;
  std::size_t correct = 0;
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index arg = 0;
    scores.row(r).maxCoeff(&arg);
    if (arg == test_y[static_cast<std::size_t>(r)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.rows());
}

double chance_of(const std::vector<int>& y, int k) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int v : y) ++counts[static_cast<std::size_t>(v)];
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) / static_cast<double>(y.size());
}

double normalized_accuracy(double acc, double chance) {
  if (!(chance < 1.0)) return 0.0;
  return std::clamp((acc - chance) / (1.0 - chance), 0.0, 1.0);
}

}  // namespace

double info_explicitness(const SourceLabels& sources, const LatentCodes& latents, std::uint64_t seed) {
  check_codes(latents, sources.n());
  const std::size_t n = sources.n();
  if (n < 5) throw DomainError("info_explicitness: need at least 5 samples");
  const auto order = shuffled(n, seed);
  const std::size_t n_train = n * 4 / 5;
  const Eigen::Index d = latents.continuous.cols();

  Eigen::MatrixXd train(static_cast<Eigen::Index>(n_train), d);
  Eigen::MatrixXd test(static_cast<Eigen::Index>(n - n_train), d);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = latents.continuous.row(static_cast<Eigen::Index>(order[r]));
    if (r < n_train)
      train.row(static_cast<Eigen::Index>(r)) = row;
    else
      test.row(static_cast<Eigen::Index>(r - n_train)) = row;
  }
  const Eigen::RowVectorXd mean = train.colwise().mean();
  Eigen::RowVectorXd scale = ((train.rowwise() - mean).array().square().colwise().mean()).sqrt();
  for (Eigen::Index j = 0; j < d; ++j) scale(j) = scale(j) > 1e-12 ? 1.0 / scale(j) : 0.0;
  train = (train.rowwise() - mean).array().rowwise() * scale.array();
  test = (test.rowwise() - mean).array().rowwise() * scale.array();

  double acc = 0.0;
  for (std::size_t i = 0; i < sources.n_s(); ++i) {
    const auto labels = sources.column(i);
    std::vector<int> y_train(n_train), y_test(n - n_train);
    for (std::size_t r = 0; r < n; ++r) (r < n_train ? y_train[r] : y_test[r - n_train]) = labels[order[r]];
    const int k = sources.cardinalities[i];
    acc += normalized_accuracy(probe_accuracy(train, y_train, test, y_test, k), chance_of(y_test, k));
  }
  return acc / static_cast<double>(sources.n_s());
}

// ---------------------------------------------------------------------------
// DCI

namespace {

double normalized_entropy(const std::vector<double>& v, double total) {
  if (v.size() < 2) return 0.0;
  double h = 0.0;
  for (double x : v) {
    if (x <= 0.0) continue;
    const double p = x / total;
    h -= p * std::log(p);
  }
  return h / std::log(static_cast<double>(v.size()));
}

}  // namespace

double dci_disentanglement(const Eigen::MatrixXd& r) {
  double weighted = 0.0;
  double total = 0.0;
  for (Eigen::Index j = 0; j < r.rows(); ++j) {
    std::vector<double> row(static_cast<std::size_t>(r.cols()));
    for (Eigen::Index i = 0; i < r.cols(); ++i) row[static_cast<std::size_t>(i)] = r(j, i);
    const double t = std::accumulate(row.begin(), row.end(), 0.0);
    if (!(t > 0.0)) continue;
    weighted += t * (1.0 - normalized_entropy(row, t));
    total += t;
  }
  return total > 0.0 ? std::clamp(weighted / total, 0.0, 1.0) : 0.0;
}

double dci_completeness(const Eigen::MatrixXd& r) {
  if (r.cols() == 0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < r.cols(); ++i) {
    std::vector<double> col(static_cast<std::size_t>(r.rows()));
    for (Eigen::Index j = 0; j < r.rows(); ++j) col[static_cast<std::size_t>(j)] = r(j, i);
    const double t = std::accumulate(col.begin(), col.end(), 0.0);
    if (!(t > 0.0)) continue;
    acc += 1.0 - normalized_entropy(col, t);
  }
  return std::clamp(acc / static_cast<double>(r.cols()), 0.0, 1.0);
}

DciScores dci(const SourceLabels& sources, const LatentCodes& latents, std::uint64_t seed) {
  check_codes(latents, sources.n());
  const std::size_t n = sources.n();
  if (n < 5) throw DomainError("dci: need at least 5 samples");
  const auto order = shuffled(n, seed);
  const std::size_t n_train = n * 4 / 5;
  const Eigen::Index n_z = latents.continuous.cols();
  Eigen::MatrixXd train(static_cast<Eigen::Index>(n_train), n_z);
  for (std::size_t r = 0; r < n_train; ++r)
    train.row(static_cast<Eigen::Index>(r)) = latents.continuous.row(static_cast<Eigen::Index>(order[r]));

  DciScores out;
  out.importance = Eigen::MatrixXd::Zero(n_z, static_cast<Eigen::Index>(sources.n_s()));
  double informativeness = 0.0;
  for (std::size_t i = 0; i < sources.n_s(); ++i) {
    const auto y = sources.column(i);
    const int k = sources.cardinalities[i];
    std::vector<int> y_train(n_train), y_test;
    for (std::size_t r = 0; r < n_train; ++r) y_train[r] = y[order[r]];
    RandomForest forest(ForestConfig{20, 8, 2, seed * 1000003ULL + i});
    forest.fit(train, y_train, k);
    // Importance is measured on every sample so uninformative splits contribute exactly zero.
    const auto imp = forest.importances(latents.continuous, y);
    for (Eigen::Index j = 0; j < n_z; ++j) out.importance(j, static_cast<Eigen::Index>(i)) = imp[static_cast<std::size_t>(j)];
    std::size_t correct = 0;
    for (std::size_t r = n_train; r < n; ++r) {
      y_test.push_back(y[order[r]]);
      if (forest.predict(latents.continuous, order[r]) == y[order[r]]) ++correct;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(n - n_train);
    informativeness += normalized_accuracy(acc, chance_of(y_test, k));
  }
  out.disentanglement = dci_disentanglement(out.importance);
  out.completeness = dci_completeness(out.importance);
  out.informativeness = informativeness / static_cast<double>(sources.n_s());
  return out;
}

// ---------------------------------------------------------------------------

void MetricsReport::validate() const {
  const std::pair<const char*, double> scores[] = {{"InfoM", info_m}, {"InfoC", info_c}, {"InfoE", info_e},
                                                   {"D", d},          {"C", c},           {"I", i}};
  for (const auto& [name, v] : scores) {
    if (std::isnan(v)) throw NumericalError(std::string(name) + " is NaN");
    if (v < 0.0 || v > 1.0) throw Error(std::string(name) + " outside [0, 1]: " + std::to_string(v));
  }
  if (std::isnan(psnr)) throw NumericalError("PSNR is NaN");
}

MetricsReport evaluate_codes(const SourceLabels& sources, const LatentCodes& latents, std::uint64_t seed) {
  MetricsReport r;
  const NmiHeatmap h = nmi_heatmap(sources, latents);
  r.info_m = info_modularity(h);
  r.info_c = info_compactness(h);
  r.info_e = info_explicitness(sources, latents, seed);
  const DciScores s = dci(sources, latents, seed);
  r.d = s.disentanglement;
  r.c = s.completeness;
  r.i = s.informativeness;
  r.active = h.active_count();
  return r;
}

void write_heatmap_ppm(const NmiHeatmap& h, const std::filesystem::path& path, std::size_t cell) {
  if (cell == 0) throw DomainError("write_heatmap_ppm: cell size must be positive");
  RgbImage img(h.n_z * cell, h.n_s * cell);
  for (std::size_t i = 0; i < h.n_s; ++i) {
    for (std::size_t j = 0; j < h.n_z; ++j) {
      const double v = std::clamp(h.m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 0.0, 1.0);
      for (std::size_t r = 0; r < cell; ++r)
        for (std::size_t c = 0; c < cell; ++c) {
          if (h.active[j])
            img.set(i * cell + r, j * cell + c, v, v, v);
          else
            img.set(i * cell + r, j * cell + c, 0.5 + 0.5 * v, 0.25 * v, 0.25 * v);
        }
    }
  }
  write_ppm(img, path);
}

}  // namespace tripod
