#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "scmb/cli.hpp"
#include "scmb/credal.hpp"
#include "scmb/credible.hpp"
#include "scmb/dataset.hpp"
#include "scmb/emcc.hpp"
#include "scmb/error.hpp"
#include "scmb/io.hpp"

namespace py = pybind11;

namespace {

std::tuple<int, std::string, std::string> run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = scmb::runCommand(args, out, err);
  }
  return {code, out.str(), err.str()};
}

scmb::CredalSpec credalSpec(const scmb::StructuralCausalModel& model, const scmb::EndogenousBN& bn) {
  if (model.markovian()) return scmb::markovMap(model, bn);
  return scmb::quasiMarkovMap(model, bn);
}

std::tuple<double, double> exactBounds(const std::string& modelPath, const std::string& dataPath,
                                       const std::string& query) {
  const auto model = scmb::parseModel(modelPath);
  const auto data = scmb::Dataset::readCsv(dataPath);
  py::gil_scoped_release release;
  const auto bn = scmb::fitEndogenous(model, data);
  const auto spec = credalSpec(model, bn);
  if (!scmb::isCompatible(spec)) throw scmb::Error(scmb::ErrorCode::Infeasible, "data incompatible with the model");
  const auto b = scmb::exactBounds(model, spec, scmb::parseQuery(model, query));
  return {b.lower, b.upper};
}

std::string emcc(const std::string& modelPath, const std::string& dataPath, const std::string& query, int runs,
                 std::uint64_t seed) {
  const auto model = scmb::parseModel(modelPath);
  const auto data = scmb::Dataset::readCsv(dataPath);
  scmb::EmccOptions options;
  options.runs = runs;
  options.seed = seed;
  scmb::EmccResult result;
  {
    py::gil_scoped_release release;
    result = scmb::runEmcc(model, data, scmb::parseQuery(model, query), options);
  }
  return scmb::toJson(result, model).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Counterfactual bounds for structural causal models";

  py::register_exception<scmb::Error>(m, "Error", PyExc_RuntimeError);

  m.def("run", &run, py::arg("args"), "Runs one scmb command; returns (exit code, stdout, stderr).");
  m.def("canonical_model", [](const std::string& text) { return scmb::serializeModel(scmb::parseModelText(text)); },
        py::arg("text"), "Parses and validates a model document and returns its canonical text.");
  m.def("exact_bounds", &exactBounds, py::arg("model"), py::arg("data"), py::arg("query"));
  m.def("emcc", &emcc, py::arg("model"), py::arg("data"), py::arg("query"), py::arg("runs") = 20,
        py::arg("seed") = 0, "EMCC result as a JSON string.");
  m.def("hyp2f1", &scmb::hyp2f1, py::arg("p"), py::arg("q"), py::arg("r"), py::arg("z"));
  m.def("identifiability_probability", &scmb::identifiabilityProbability, py::arg("k"));
  m.def("uniform_coverage", &scmb::uniformCoverage, py::arg("k"), py::arg("epsilon"), py::arg("L"));
  m.def("credible_report", [](const std::vector<double>& rho, double epsilon) {
    return scmb::toJson(scmb::credibleReport(rho, epsilon)).dump();
  }, py::arg("rho"), py::arg("epsilon"), "Credible-interval report as a JSON string.");
  m.def("epsilon_star", &scmb::epsilonStar, py::arg("rho"), py::arg("target"), py::arg("tolerance") = 1e-4);
}
