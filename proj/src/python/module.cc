// Python bindings for the core library. Matrices cross the boundary as
// 2-D float64 NumPy arrays; everything else uses the STL casters.

#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "repbias/audit.h"
#include "repbias/cli.h"
#include "repbias/embedding_store.h"
#include "repbias/encoder.h"
#include "repbias/error.h"
#include "repbias/pca.h"
#include "repbias/report.h"
#include "repbias/svm.h"
#include "repbias/tradeoff.h"

namespace py = pybind11;

namespace repbias {
namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix ToMatrix(const Array& a) {
  if (a.ndim() != 2) throw UsageError("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Array ToArray(const Matrix& m) {
  Array a({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), a.mutable_data());
  return a;
}

std::tuple<int, std::string, std::string> Run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace
}  // namespace repbias

PYBIND11_MODULE(repbias, m) {
  using namespace repbias;
  m.doc() = "Representation bias audit for sentence encodings";
  m.attr("__version__") = kToolVersion;

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::enum_<OovPolicy>(m, "OovPolicy")
      .value("SKIP", OovPolicy::kSkip)
      .value("ZERO", OovPolicy::kZero);

  py::class_<EmbeddingTable>(m, "EmbeddingTable")
      .def_static("load", &EmbeddingTable::Load, py::arg("path"), py::arg("expected_dim") = std::nullopt)
      .def_static("from_entries", &EmbeddingTable::FromEntries, py::arg("entries"),
                  py::arg("source") = "<memory>")
      .def_property_readonly("dim", &EmbeddingTable::dim)
      .def("__len__", &EmbeddingTable::size)
      .def("lookup", [](const EmbeddingTable& t, const std::string& token) -> std::optional<std::vector<double>> {
        const auto v = t.Lookup(token);
        if (!v) return std::nullopt;
        return std::vector<double>(v->begin(), v->end());
      });

  m.def("encode_average", [](const std::vector<std::string>& tokens, const EmbeddingTable& t,
                             OovPolicy oov) { return EncodeAverage(tokens, t, oov); },
        py::arg("tokens"), py::arg("table"), py::arg("oov") = OovPolicy::kSkip);
  m.def("encode_extrema", [](const std::vector<std::string>& tokens, const EmbeddingTable& t,
                             OovPolicy oov) { return EncodeExtrema(tokens, t, oov); },
        py::arg("tokens"), py::arg("table"), py::arg("oov") = OovPolicy::kSkip);
  m.def("encode_convex", [](const std::vector<std::string>& tokens, const EmbeddingTable& t,
                            double lambda, OovPolicy oov) { return EncodeConvex(tokens, t, lambda, oov); },
        py::arg("tokens"), py::arg("table"), py::arg("lam"), py::arg("oov") = OovPolicy::kSkip);

  py::class_<PcaModel>(m, "PcaModel")
      .def_readonly("mean", &PcaModel::mean)
      .def_readonly("eigenvalues", &PcaModel::eigenvalues)
      .def_readonly("fitted_on", &PcaModel::fitted_on)
      .def_property_readonly("components", [](const PcaModel& p) { return ToArray(p.components); })
      .def("reconstruct", [](const PcaModel& p, const std::vector<double>& x, std::size_t k) {
        return Reconstruct(p, x, k);
      })
      .def("reconstruction_error", [](const PcaModel& p, const Array& rows, std::size_t k) {
        return ReconstructionError(p, ToMatrix(rows), k);
      })
      .def("to_json", [](const PcaModel& p) { return DumpJson(ToJson(p)); });
  m.def("fit_pca", [](const Array& rows) { return FitPca(ToMatrix(rows)); }, py::arg("rows"));

  m.def("group_error_profile",
        [](const PcaModel& p, const Array& rows, const std::vector<int>& groups,
           const std::vector<std::size_t>& ks) {
          EncodingMatrix e;
          e.rows = ToMatrix(rows);
          e.groups = groups;
          e.labels.assign(groups.size(), 0);
          for (std::size_t i = 0; i < groups.size(); ++i) e.sample_ids.push_back(std::to_string(i));
          const auto prof = ComputeGroupErrorProfile(p, e, ks);
          return py::dict(py::arg("k") = prof.k_values, py::arg("err_g0") = prof.err_group0,
                          py::arg("err_g1") = prof.err_group1, py::arg("gap") = prof.gap);
        },
        py::arg("model"), py::arg("rows"), py::arg("groups"), py::arg("k_values"));

  py::class_<SvmModel>(m, "SvmModel")
      .def_readonly("bias", &SvmModel::bias)
      .def_readonly("dual_coeffs", &SvmModel::dual_coeffs)
      .def("decision_value", [](const SvmModel& s, const std::vector<double>& x) { return DecisionValue(s, x); })
      .def("predict", [](const SvmModel& s, const std::vector<double>& x) { return Predict(s, x); })
      .def("accuracy", [](const SvmModel& s, const Array& x, const std::vector<int>& y) {
        return EvaluateAccuracy(s, ToMatrix(x), y);
      });
  m.def("train_svm", [](const Array& x, const std::vector<int>& y, double c, double gamma) {
          return TrainSvm(ToMatrix(x), y, {c, gamma});
        },
        py::arg("features"), py::arg("labels"), py::arg("c"), py::arg("gamma"));
  m.def("solve_dual", [](const Array& x, const std::vector<int>& y, double c, double gamma) {
          const DualSolution s = SolveDual(ToMatrix(x), y, {c, gamma});
          return py::make_tuple(s.alpha, s.bias, s.dual_objective);
        },
        py::arg("features"), py::arg("labels"), py::arg("c"), py::arg("gamma"));

  m.def("lambda_grid", &LambdaGrid, py::arg("start"), py::arg("stop"), py::arg("step"));
  m.def("refine_grid", &RefineGrid, py::arg("around"), py::arg("step"), py::arg("coarse_step"));

  m.def("run_cli", &Run, py::arg("args"),
        "Runs a repbias subcommand in process; returns (exit_code, stdout, stderr).");
}
