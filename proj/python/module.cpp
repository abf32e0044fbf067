#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "vatkg/cli.hpp"
#include "vatkg/embed_index.hpp"
#include "vatkg/kg.hpp"
#include "vatkg/mock_clients.hpp"
#include "vatkg/pipeline.hpp"

namespace py = pybind11;
using namespace vatkg;

namespace {

std::vector<float> to_list(const EmbeddingVector& v) { return {v.values().begin(), v.values().end()}; }

py::list hits_to_list(const std::vector<RetrievalHit>& hits) {
  py::list out;
  for (const auto& h : hits) out.append(py::make_tuple(h.entry_id, h.score));
  return out;
}

}  // namespace

PYBIND11_MODULE(_vatkg, m) {
  m.doc() = "Native core of the vatkg package.";

  static py::handle error_type =
      PyErr_NewExceptionWithDoc("vatkg.VatkgError", "Error raised by the vatkg core; .code names the cause.",
                                PyExc_RuntimeError, nullptr);
  m.attr("VatkgError") = error_type;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(e.what());
      inst.attr("code") = std::string(errc_name(e.code()));
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  m.def("mock_embed", [](const std::string& kind, const std::string& payload, std::size_t dim) {
    return to_list(mock_embed(kind, payload, dim));
  }, py::arg("kind"), py::arg("payload"), py::arg("dim"));

  py::class_<FlatIndex>(m, "FlatIndex")
      .def_property_readonly("metric", [](const FlatIndex& i) { return std::string(metric_name(i.metric())); })
      .def_property_readonly("dim", &FlatIndex::dim)
      .def("__len__", &FlatIndex::size)
      .def("ids", [](const FlatIndex& i) {
        std::vector<std::string> out;
        for (std::size_t r = 0; r < i.size(); ++r) out.push_back(i.id(r));
        return out;
      })
      .def("search", [](const FlatIndex& i, std::vector<float> query, std::size_t k, std::optional<double> threshold) {
        return hits_to_list(i.search(EmbeddingVector(std::move(query)), k, threshold));
      }, py::arg("query"), py::arg("k"), py::arg("threshold") = py::none())
      .def("save", [](const FlatIndex& i, const std::filesystem::path& p) { save_index(i, p); });

  m.def("build_index", [](const std::vector<std::pair<std::string, std::vector<float>>>& rows, const std::string& metric) {
    std::vector<IndexEntry> entries;
    for (const auto& [id, v] : rows) entries.push_back({id, EmbeddingVector(v)});
    return build_index(std::move(entries), parse_metric(metric));
  }, py::arg("entries"), py::arg("metric") = "l2");
  m.def("load_index", &load_index, py::arg("path"));

  m.def("voice_over_filter", [](const std::vector<std::string>& tags, const std::set<std::string>& labels) {
    return voice_over_filter(tags, labels) == FilterDecision::Drop;
  }, py::arg("tags"), py::arg("labels") = std::set<std::string>{"speech", "audio"},
     "True when the sample is dropped as voice-over.");
  m.def("audio_text_filter", [](std::vector<float> audio, std::vector<float> text, double min_cos) {
    return audio_text_filter(EmbeddingVector(std::move(audio)), EmbeddingVector(std::move(text)), min_cos) ==
           FilterDecision::Drop;
  }, py::arg("audio_emb"), py::arg("text_emb"), py::arg("min_cos") = 0.2,
     "True when the sample is dropped for audio-text mismatch.");
  m.def("video_text_percentile_filter", [](const std::vector<std::pair<std::string, double>>& scores, double fraction) {
    std::vector<std::pair<SampleId, double>> in;
    for (const auto& [id, s] : scores) in.emplace_back(SampleId(id), s);
    const auto r = video_text_percentile_filter(std::move(in), fraction);
    std::vector<std::string> kept, dropped;
    for (const auto& id : r.kept) kept.push_back(id.str());
    for (const auto& id : r.report.dropped_ids) dropped.push_back(id.str());
    return py::make_tuple(kept, dropped);
  }, py::arg("scores"), py::arg("drop_fraction") = 0.10, "Returns (kept_ids, dropped_ids).");
  m.def("parse_candidate_triplets", [](const std::string& text) {
    py::list out;
    for (const auto& c : parse_candidate_triplets(text).candidates) out.append(py::make_tuple(c.head, c.relation, c.tail));
    return out;
  }, py::arg("text"));
  m.def("triplet_id", [](const std::string& sample, const std::string& head, const std::string& relation,
                         const std::string& tail) { return make_triplet_id(SampleId(sample), head, relation, tail); });

  m.def("run_cli", [](const std::vector<std::string>& args, const std::string& stdin_text) {
    std::istringstream in(stdin_text);
    std::ostringstream out, err;
    int code = 0;
    {
      py::gil_scoped_release release;
      code = cli::run(args, in, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), py::arg("stdin") = "", "Runs the vatkg command line; returns (exit_code, stdout, stderr).");
}
