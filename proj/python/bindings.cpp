#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "postreason/client.hpp"
#include "postreason/distill.hpp"
#include "postreason/error.hpp"
#include "postreason/parse.hpp"
#include "postreason/score.hpp"
#include "postreason/sftgen.hpp"

namespace py = pybind11;
using namespace postreason;

namespace {

py::dict extraction_dict(const Extraction& ex) {
  py::dict d;
  d["answer"] = ex.answer ? py::object(py::str(*ex.answer)) : py::object(py::none());
  d["method"] = std::string(to_string(ex.method));
  if (ex.answer_span) {
    d["span"] = py::make_tuple(ex.answer_span->begin, ex.answer_span->end);
  } else {
    d["span"] = py::none();
  }
  return d;
}

std::string summarize_csv(const std::string& path, const std::string& registry_path,
                          const std::string& claims_path) {
  const auto deltas = load_reported_deltas(path);
  ReportOptions options;
  if (!registry_path.empty()) options.param_counts = ModelRegistry::load(registry_path).param_counts();
  if (!claims_path.empty()) options.stated_claims = load_json_file(claims_path);
  return summarize({}, deltas, options).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Answer extraction, delta scoring and SFT record helpers";

  // Translators are tried newest first, so the subclass is registered last.
  auto base = py::register_exception<Error>(m, "Error", PyExc_ValueError);
  py::register_exception<UndefinedDeltaError>(m, "UndefinedDeltaError", base.ptr());

  m.def("relative_delta", &relative_delta, py::arg("direct_pct"), py::arg("post_pct"));
  m.def("format_fixed2", &format_fixed2, py::arg("value"));
  m.def(
      "size_bucket", [](double b) { return std::string(to_string(size_bucket(b))); },
      py::arg("param_count_b"));

  m.def("strip_thinking", [](const std::string& t) { return strip_thinking(t); }, py::arg("text"));
  m.def(
      "extract_answer",
      [](const std::string& text, const std::string& kind, std::vector<std::string> labels,
         bool last_occurrence) {
        const auto ex = extract_answer(strip_thinking(text), parse_answer_kind(kind), labels,
                                       {.last_occurrence = last_occurrence});
        return extraction_dict(ex);
      },
      py::arg("text"), py::arg("kind"), py::arg("labels") = std::vector<std::string>{},
      py::arg("last_occurrence") = false);
  m.def(
      "answers_match",
      [](const std::string& a, const std::string& g, const std::string& kind) {
        return answers_match(a, g, parse_answer_kind(kind));
      },
      py::arg("answer"), py::arg("gold"), py::arg("kind"));
  m.def(
      "truncate_at_answer",
      [](const std::string& text, const std::string& kind, std::vector<std::string> labels) {
        return truncate_at_answer(text, parse_answer_kind(kind), labels).prefix;
      },
      py::arg("text"), py::arg("kind"), py::arg("labels") = std::vector<std::string>{});
  m.def(
      "mock_token_count", [](const std::string& t) { return mock_token_count(t); },
      py::arg("text"));

  m.def(
      "validate_trace",
      [](const std::string& text, const std::string& gold) {
        std::vector<std::string> out;
        for (auto r : validate_trace(text, gold).reasons) out.emplace_back(to_string(r));
        return out;
      },
      py::arg("text"), py::arg("gold"));

  m.def(
      "build_sft_record",
      [](const std::string& id, const std::string& question, const std::string& gold,
         const std::string& trace_text, const std::string& system_text) {
        TaskInstance inst;
        inst.id = id;
        inst.question = question;
        inst.gold = gold;
        Trace trace;
        trace.instance_id = id;
        trace.text = trace_text;
        ChatTemplateSpec spec;
        spec.system_text = system_text;
        return to_json(build_record(inst, gold, trace, spec)).dump();
      },
      py::arg("id"), py::arg("question"), py::arg("gold"), py::arg("trace"),
      py::arg("system_text") = "");

  m.def("summarize_csv", &summarize_csv, py::arg("path"), py::arg("registry") = "",
        py::arg("claims") = "");
}
