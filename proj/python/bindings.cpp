#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tripod/checkpoint.hpp"
#include "tripod/config.hpp"
#include "tripod/density.hpp"
#include "tripod/error.hpp"
#include "tripod/experiments.hpp"
#include "tripod/hessian.hpp"
#include "tripod/metrics.hpp"
#include "tripod/pipeline.hpp"
#include "tripod/quantizers.hpp"
#include "tripod/report.hpp"
#include "tripod/verify.hpp"

namespace py = pybind11;
using namespace tripod;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Eigen::MatrixXd to_matrix(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-d array");
  Eigen::MatrixXd m(a.shape(0), a.shape(1));
  for (py::ssize_t i = 0; i < a.shape(0); ++i)
    for (py::ssize_t j = 0; j < a.shape(1); ++j) m(i, j) = a.at(i, j);
  return m;
}

py::dict report_dict(const MetricsReport& r) {
  py::dict d;
  d["step"] = r.step;
  d["psnr"] = r.psnr;
  d["info_m"] = r.info_m;
  d["info_c"] = r.info_c;
  d["info_e"] = r.info_e;
  d["d"] = r.d;
  d["c"] = r.c;
  d["i"] = r.i;
  d["active"] = r.active;
  return d;
}

py::dict step_dict(const StepLog& s) {
  py::dict d;
  d["step"] = s.step;
  d["loss"] = s.terms.total;
  d["recon"] = s.terms.reconstruction;
  d["klm"] = s.terms.klm;
  d["nhp"] = s.terms.hessian;
  d["quantize"] = s.terms.quantize;
  d["commit"] = s.terms.commit;
  d["psnr"] = s.psnr;
  return d;
}

MarginalBandwidth marginal_from(const std::string& s) {
  if (s == "silverman") return MarginalBandwidth::silverman;
  if (s == "sigma") return MarginalBandwidth::sigma;
  throw ConfigError("marginal must be 'silverman' or 'sigma'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tripod: disentangling autoencoders with finite scalar quantization, KLM and NHP.";
  m.attr("__version__") = version();

  // Translators run newest first, so the base class goes in before its subclasses.
  py::register_exception<Error>(m, "TripodError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<SelectionError>(m, "SelectionError", PyExc_RuntimeError);

  m.def("default_config", [] { return config_to_json(TrainConfig{}); }, "Canonical JSON of the default config.");
  m.def("normalize_config", [](const std::string& text) { return config_to_json(config_from_json(text)); },
        py::arg("config_json"), "Validate a JSON config and return its canonical form.");
  m.def("config_hash", [](const std::string& text) { return hex64(config_hash(config_from_json(text))); },
        py::arg("config_json"));

  m.def(
      "fsq_quantize",
      [](const Array& pre, std::size_t n_q) {
        if (pre.ndim() != 2) throw ShapeError("fsq_quantize expects (n_b, n_z)");
        Tape tape;
        const LatentBatch lb = fsq_quantize(tape.constant(to_tensor(pre)),
                                            FsqSpec{static_cast<std::size_t>(pre.shape(1)), n_q});
        return py::make_tuple(to_array(lb.continuous.value()), to_array(lb.quantized.value()));
      },
      py::arg("pre_activation"), py::arg("n_q") = 12, "tanh then round onto the n_q-level grid; returns (c, z).");
  m.def("fsq_grid", [](std::size_t n_q) { return FsqSpec{1, n_q}.grid(); }, py::arg("n_q") = 12);

  m.def("silverman_factor", &silverman_factor, py::arg("n_b"), py::arg("n_z"));
  m.def(
      "multiinformation",
      [](const Array& z, const std::string& marginal) {
        Tape tape;
        Var zv = tape.constant(to_tensor(z));
        const std::size_t n_b = zv.shape()[0];
        return multiinformation(zv, silverman(latent_sigma(zv), n_b, marginal_from(marginal))).value().item();
      },
      py::arg("z"), py::arg("marginal") = "silverman", "KDE estimate of the multiinformation of a batch, in nats.");

  m.def(
      "normalized_hessian_ratio",
      [](const Array& h, const std::vector<double>& sigma) { return normalized_hessian_ratio(to_matrix(h), sigma); },
      py::arg("hessian"), py::arg("sigma"));

  m.def("plugin_mi", [](const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) { return plugin_mi(a, b); },
        py::arg("a"), py::arg("b"), "Plug-in mutual information in nats.");
  m.def("psnr", [](const std::vector<double>& x, const std::vector<double>& y) { return psnr(x, y); });

  m.def(
      "evaluate_codes",
      [](const Array& sources, const Array& continuous, const Array& quantized, bool on_grid, std::uint64_t seed) {
        SourceLabels labels;
        const Eigen::MatrixXd s = to_matrix(sources);
        labels.values = s.cast<int>();
        for (Eigen::Index k = 0; k < s.cols(); ++k) labels.cardinalities.push_back(static_cast<int>(s.col(k).maxCoeff()) + 1);
        LatentCodes codes{to_matrix(continuous), to_matrix(quantized), on_grid};
        return report_dict(evaluate_codes(labels, codes, seed));
      },
      py::arg("sources"), py::arg("continuous"), py::arg("quantized"), py::arg("on_grid") = true, py::arg("seed") = 0,
      "InfoM/InfoC/InfoE and D/C/I of latent codes against integer source labels.");

  m.def(
      "enumerate_dataset",
      [](const std::string& name) {
        const SyntheticProcess p = SyntheticProcess::by_name(name);
        const Dataset d = enumerate_all(p);
        py::array_t<std::int64_t> s({static_cast<py::ssize_t>(d.size()), static_cast<py::ssize_t>(d.n_s)});
        std::copy(d.sources.begin(), d.sources.end(), s.mutable_data());
        Array images = to_array(d.images.reshaped({d.size(), p.side(), p.side()}));
        return py::make_tuple(s, images);
      },
      py::arg("dataset") = "blobs", "Every (sources, image) pair of a synthetic process.");

  py::class_<Trainer>(m, "Trainer")
      .def(py::init([](const std::string& config_json) { return Trainer(config_from_json(config_json)); }),
           py::arg("config_json"))
      .def("step", [](Trainer& t) {
        StepLog s;
        {
          py::gil_scoped_release release;
          s = t.step();
        }
        return step_dict(s);
      })
      .def_property_readonly("step_count", &Trainer::step_count)
      .def("config_json", [](const Trainer& t) { return config_to_json(t.config()); })
      .def("save", [](const Trainer& t, const std::string& path) { save_checkpoint(path, t.checkpoint()); },
           py::arg("path"))
      .def_static("load", [](const std::string& path) { return Trainer::restore(load_checkpoint(path)); },
                  py::arg("path"));

  m.def(
      "train",
      [](const std::string& config_json) {
        const TrainConfig config = config_from_json(config_json);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(config);
        }
        return run_summary_json(config, r.log, r.selected);
      },
      py::arg("config_json"), "Full training run; returns the summary JSON.");

  m.def(
      "evaluate_checkpoint",
      [](const std::string& path, std::size_t max_samples) {
        const Checkpoint ck = load_checkpoint(path);
        return report_dict(evaluate_checkpoint(ck, EvalContext::build(ck.config.dataset, max_samples)));
      },
      py::arg("path"), py::arg("max_samples") = 10000);
  m.def("make_oracle_checkpoint",
        [](const std::string& dataset, const std::string& path) { save_checkpoint(path, make_oracle_checkpoint(dataset)); },
        py::arg("dataset"), py::arg("path"));

  m.def(
      "bench",
      [](const std::string& config_json, std::size_t steps) {
        const TrainConfig config = config_from_json(config_json);
        BenchReport r;
        {
          py::gil_scoped_release release;
          r = bench(config, steps);
        }
        py::dict rows;
        for (const auto& row : r.rows) rows[py::str(row.name)] = row.seconds_per_iteration;
        return py::make_tuple(rows, r.nhp_ratio);
      },
      py::arg("config_json"), py::arg("steps") = 5);

  m.def("suite_names", &suite_names);
  m.def(
      "run_suite",
      [](const std::string& name, std::uint64_t seed) {
        const SuiteResult r = run_suite(name, seed);
        py::list checks;
        for (const auto& c : r.checks) {
          py::dict d;
          d["name"] = c.name;
          d["passed"] = c.passed;
          d["measured"] = c.measured;
          d["tolerance"] = c.tolerance;
          d["detail"] = c.detail;
          checks.append(d);
        }
        return py::make_tuple(r.passed(), checks);
      },
      py::arg("name"), py::arg("seed") = 0, "Run one numerical oracle suite; returns (passed, checks).");
}
