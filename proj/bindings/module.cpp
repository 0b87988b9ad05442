#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tempo/eval/metrics.hpp"
#include "tempo/io/checkpoint.hpp"
#include "tempo/model/tempo_model.hpp"
#include "tempo/sim/generator.hpp"

namespace py = pybind11;
using namespace tempo;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array matrix(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  Array out({rows, cols});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

sim::Cohort cohort_from(Array x, const std::vector<int>& dx) {
  if (x.ndim() != 2) throw py::value_error("x must be a 2-d array (participants x biomarkers)");
  const auto J = static_cast<std::size_t>(x.shape(0));
  const auto B = static_cast<std::size_t>(x.shape(1));
  if (dx.size() != J) throw py::value_error("dx must have one entry per row of x");
  return sim::make_cohort(J, B, std::vector<double>(x.data(), x.data() + J * B), dx);
}

py::dict dataset_dict(const sim::Dataset& ds) {
  const auto& c = ds.cohort;
  py::dict d;
  d["experiment_id"] = ds.experiment_id;
  d["seed"] = ds.seed;
  d["raw"] = matrix(c.raw, c.n_participants, c.n_biomarkers);
  d["x"] = matrix(c.x, c.n_participants, c.n_biomarkers);
  d["dx"] = c.dx;
  d["xi"] = ds.truth.xi;
  d["k"] = ds.truth.k;
  d["y_star"] = ds.truth.y_star;
  return d;
}

py::dict prediction_dict(const model::TempoModel& m, Array x, const std::vector<int>& dx) {
  const sim::Cohort c = cohort_from(std::move(x), dx);
  const auto out = m.predict(c);
  py::dict d;
  d["s"] = out.s;
  d["p"] = matrix(out.p, c.n_participants, c.n_biomarkers);
  d["y_hat"] = out.y_hat;
  return d;
}

}  // namespace

PYBIND11_MODULE(_tempo, m) {
  m.doc() = "Transformer biomarker ordering and staging";

  m.def(
      "generate_dataset",
      [](int experiment_id, std::uint64_t seed, std::size_t n_biomarkers,
         std::size_t n_participants) {
        sim::ExperimentConfig c;
        c.experiment_id = experiment_id;
        c.seed = seed;
        c.n_biomarkers = n_biomarkers;
        c.n_participants = n_participants;
        return dataset_dict(sim::generate_dataset(c));
      },
      py::arg("experiment_id"), py::arg("seed") = 0, py::arg("n_biomarkers") = 12,
      py::arg("n_participants") = 200);

  m.def(
      "kendall_tau",
      [](const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth) {
        return eval::normalized_kendall_tau(pred, truth);
      },
      py::arg("pred_order"), py::arg("true_order"));

  m.def(
      "order_by_value", [](const std::vector<double>& v) { return eval::order_by_value(v); },
      py::arg("values"));

  m.def(
      "consensus_from_ranks",
      [](const std::vector<std::vector<double>>& ranks) {
        const auto c = eval::consensus_from_ranks(ranks);
        py::dict d;
        d["mean"] = c.mean;
        d["std"] = c.std;
        d["ci_low"] = c.ci_low;
        d["ci_high"] = c.ci_high;
        d["order"] = c.order;
        return d;
      },
      py::arg("ranks"));

  py::class_<model::TempoModel>(m, "Model")
      .def(py::init([](std::size_t n_biomarkers, std::size_t d_model, std::size_t n_heads,
                       std::uint64_t seed) {
             model::ModelConfig c;
             c.n_biomarkers = n_biomarkers;
             c.d_model = d_model;
             c.n_heads = n_heads;
             return model::TempoModel(c, seed);
           }),
           py::arg("n_biomarkers") = 12, py::arg("d_model") = 64, py::arg("n_heads") = 4,
           py::arg("seed") = 0)
      .def_static(
          "load", [](const std::filesystem::path& p) { return io::load_checkpoint(p).model; },
          py::arg("path"))
      .def_property_readonly("n_biomarkers",
                             [](const model::TempoModel& t) { return t.config().n_biomarkers; })
      .def("parameter_count", &model::TempoModel::parameter_count)
      .def("predict", &prediction_dict, py::arg("x"), py::arg("dx"));
}
