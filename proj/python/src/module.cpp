#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <memory>
#include <sstream>

#include "flowgen/calendar.hpp"
#include "flowgen/dataset.hpp"
#include "flowgen/decoder.hpp"
#include "flowgen/errors.hpp"
#include "flowgen/eval.hpp"
#include "flowgen/pipeline.hpp"
#include "flowgen/remote_lm.hpp"
#include "flowgen/sexpr.hpp"

namespace py = pybind11;
using namespace flowgen;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// One registry, rule set, calendar and clock; graphs are passed as text.
class Session {
 public:
  Session(const std::string& rules, const std::string& calendar, const std::string& now,
          const std::string& prompt_parts) {
    auto reg = std::make_shared<FunctionRegistry>(calendar_registry());
    p_.registry = reg;
    if (!rules.empty()) p_.transducer = std::make_shared<Transducer>(Transducer::from_text(read_file(rules), reg));
    p_.calendar = Calendar::load(calendar);
    p_.now = DateTime::parse(now);
    p_.prompt = PromptFlags::parse(prompt_parts);
  }

  Qcfg transduce(const std::string& graph, std::size_t max_depth) const {
    if (!p_.transducer) throw Error("this session has no rules");
    ExecContext ctx = p_.fresh_context();
    const DataflowGraph g = execute(parse_graph(graph, p_.registry.get()), *p_.registry, ctx);
    TransduceOptions opts;
    opts.max_depth = max_depth;
    return flowgen::transduce(*p_.transducer, g, ctx, opts).grammar;
  }

  std::string prompt(const std::string& graph, const std::string& utterance) const {
    ExecContext ctx = p_.fresh_context();
    const DataflowGraph g = execute(parse_graph(graph, p_.registry.get()), *p_.registry, ctx);
    return build_prompt(g, p_.prompt, utterance);
  }

  std::vector<std::pair<std::string, double>> generate(const std::string& graph,
                                                       const std::string& mode,
                                                       const std::string& lm,
                                                       const std::string& vocab,
                                                       const std::string& utterance,
                                                       std::size_t beam, std::size_t max_len,
                                                       std::uint64_t seed) const {
    const auto provider = make_provider(lm, vocab);
    DecodeConfig cfg;
    cfg.beam = beam;
    cfg.max_len = max_len;
    cfg.seed = seed;
    const Example ex{"", parse_graph(graph, p_.registry.get()), utterance, ""};
    std::vector<std::pair<std::string, double>> out;
    for (const auto& c : p_.run(ex, *provider, parse_mode(mode), cfg).candidates)
      out.emplace_back(c.text, c.score);
    return out;
  }

  void train_lm(const std::string& dataset, const std::string& out, std::size_t order,
                double k) const {
    NgramModel::train(p_.lm_corpus(load_dataset(dataset, *p_.registry)), order, k).save(out);
  }

 private:
  Pipeline p_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Constrained response generation from dataflow graphs.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<SyntaxError>(m, "SyntaxError", base.ptr());
  py::register_exception<CoverageError>(m, "CoverageError", base.ptr());
  py::register_exception<ExecutionError>(m, "ExecutionError", base.ptr());
  py::register_exception<InvalidGrammar>(m, "InvalidGrammar", base.ptr());
  py::register_exception<AlignmentError>(m, "AlignmentError", base.ptr());
  py::register_exception<RemoteError>(m, "RemoteError", base.ptr());

  py::class_<Qcfg>(m, "Grammar")
      .def_static("from_json", [](const std::string& s) { return Qcfg::from_json(nlohmann::json::parse(s)); })
      .def("to_json", &Qcfg::dump)
      .def_property_readonly("size", [](const Qcfg& g) { return g.productions().size(); })
      .def_property_readonly("sigma", &Qcfg::sigma)
      .def("productions", [](const Qcfg& g) {
        std::vector<std::string> out;
        for (const auto& p : g.productions()) out.push_back(to_string(p));
        return out;
      })
      .def("contains", [](const Qcfg& g, const std::string& s) { return contains(g, std::string_view(s)); })
      .def("enumerate", [](const Qcfg& g, std::size_t limit) { return enumerate(g, limit); },
           py::arg("limit") = 1000)
      .def("sample", [](const Qcfg& g, std::uint64_t seed) { return sample(g, seed); }, py::arg("seed"))
      .def("__contains__", [](const Qcfg& g, const std::string& s) { return contains(g, std::string_view(s)); });

  py::class_<Session>(m, "Session")
      .def(py::init<const std::string&, const std::string&, const std::string&, const std::string&>(),
           py::arg("rules"), py::arg("calendar"), py::arg("now"),
           py::arg("prompt_parts") = "computation,result")
      .def("transduce", &Session::transduce, py::arg("graph"), py::arg("max_depth") = 64)
      .def("prompt", &Session::prompt, py::arg("graph"), py::arg("utterance") = "")
      .def("generate", &Session::generate, py::arg("graph"), py::arg("mode") = "constrained",
           py::arg("lm") = "uniform", py::arg("vocab") = "", py::arg("utterance") = "",
           py::arg("beam") = 5, py::arg("max_len") = 64, py::arg("seed") = 0)
      .def("train_lm", &Session::train_lm, py::arg("dataset"), py::arg("out"), py::arg("order") = 8,
           py::arg("k") = 0.1);

  m.def("normalize", &normalize);
  m.def("bleu4", [](const std::vector<std::string>& c, const std::vector<std::string>& r) { return bleu4(c, r); },
        py::arg("candidates"), py::arg("references"));
  m.def("rouge_l", [](const std::string& c, const std::string& r) { return rouge_l(c, r); },
        py::arg("candidate"), py::arg("reference"));
  m.def("recall_at_k",
        [](const std::vector<std::vector<std::string>>& candidates, const std::vector<std::string>& golds,
           std::size_t k) {
          if (candidates.size() != golds.size()) throw AlignmentError("one gold per candidate list expected");
          std::vector<RankedExample> ex;
          for (std::size_t i = 0; i < golds.size(); ++i) ex.push_back({std::to_string(i), golds[i], candidates[i]});
          return recall_at_k(ex, k);
        },
        py::arg("candidates"), py::arg("golds"), py::arg("k"));
}
