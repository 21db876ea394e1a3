#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mlpg/encoder/subtokens.hpp"
#include "mlpg/graph/builder.hpp"
#include "mlpg/harness/corpus.hpp"
#include "mlpg/lang/typecheck.hpp"
#include "mlpg/tasks/metrics.hpp"

namespace py = pybind11;
using namespace mlpg;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_mlpg, m) {
  m.doc() = "MiniLang program graphs";

  py::register_exception<lang::LexError>(m, "LexError", PyExc_ValueError);
  py::register_exception<lang::ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<lang::TypeError>(m, "TypeError", PyExc_ValueError);

  m.def("split_subtokens", &encoder::split_subtokens, py::arg("name"));

  m.def("compile_ok", [](const std::string& src) {
    try {
      lang::compile(src);
      return true;
    } catch (const std::runtime_error&) {
      return false;
    }
  }, py::arg("source"));

  m.def("build_graph", [](const std::string& src, bool backward) {
    auto g = graph::build_graph(lang::compile(src));
    return to_py(graph::to_json(backward ? graph::add_backward_edges(std::move(g)) : g));
  }, py::arg("source"), py::arg("backward") = false, "Program graph of a MiniLang file as a dict.");

  m.def("misuse_slots", [](const std::string& src) { return graph::misuse_slots(lang::compile(src)); },
        py::arg("source"), "Token indices of VarMisuse slots.");

  m.def("naming_targets", [](const std::string& src) {
    auto prog = lang::compile(src);
    std::vector<std::string> out;
    for (auto v : graph::naming_targets(prog)) out.push_back(prog.qualified_var(v));
    return out;
  }, py::arg("source"));

  m.def("generate_corpus", [](const py::object& cfg) {
    auto c = cfg.is_none() ? harness::CorpusConfig{} : harness::CorpusConfig::from_json(from_py(cfg));
    py::list out;
    for (const auto& f : harness::generate_corpus(c)) {
      py::dict d;
      d["project"] = f.project;
      d["path"] = f.path;
      d["text"] = f.text;
      d["unseen"] = f.unseen;
      out.append(d);
    }
    return out;
  }, py::arg("config") = py::none());

  m.def("pr_auc", [](const std::vector<double>& conf, const std::vector<bool>& pos) {
    return tasks::trapezoid(tasks::pr_curve(conf, pos));
  }, py::arg("confidence"), py::arg("positive"));

  m.def("subtoken_f1", [](const std::vector<std::vector<std::string>>& pred,
                          const std::vector<std::vector<std::string>>& gold) {
    auto f = tasks::subtoken_f1(pred, gold);
    return py::make_tuple(f.precision, f.recall, f.f1);
  }, py::arg("predicted"), py::arg("gold"));
}
