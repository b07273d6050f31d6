#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mpsumm/clusterer.hpp"
#include "mpsumm/corpus.hpp"
#include "mpsumm/error.hpp"
#include "mpsumm/filters.hpp"
#include "mpsumm/hash.hpp"
#include "mpsumm/losses.hpp"
#include "mpsumm/metrics.hpp"
#include "mpsumm/pipeline.hpp"
#include "mpsumm/providers.hpp"
#include "mpsumm/textproc.hpp"

namespace py = pybind11;
using namespace mpsumm;

namespace {

// Records cross the boundary as dicts; the C++ side speaks JSON lines.
std::string dumps(const py::object& obj) { return py::module_::import("json").attr("dumps")(obj).cast<std::string>(); }
py::object loads(const std::string& s) { return py::module_::import("json").attr("loads")(s); }

PipelineConfig make_config(const std::map<std::string, std::string>& settings) {
  PipelineConfig c;
  for (const auto& [k, v] : settings) apply_setting(c, k, v);
  c.validate();
  return c;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols) throw Error(ErrorCode::kShapeMismatch, "ragged matrix");
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

std::vector<std::vector<double>> from_matrix(const Matrix& m) {
  std::vector<std::vector<double>> rows(m.rows, std::vector<double>(m.cols));
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) rows[r][c] = m(r, c);
  return rows;
}

std::vector<GoldSpan> to_spans(const std::vector<std::pair<std::size_t, std::size_t>>& v) {
  std::vector<GoldSpan> out;
  for (auto [s, e] : v) out.push_back({s, e});
  return out;
}

py::dict verdict_dict(const FilterVerdict& v) {
  py::list names;
  for (auto r : v.violations) names.append(std::string(to_string(r)));
  py::dict d;
  d["accepted"] = v.accepted;
  d["violations"] = names;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mpsumm, m) {
  m.doc() = "Multi-perspective answer summarization data pipeline.";

  static py::exception<Error> error(m, "MpsummError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  py::class_<Provider, std::unique_ptr<Provider>>(m, "Provider")
      .def(py::init([](const std::string& spec, std::size_t dim) { return make_provider(spec, dim); }),
           py::arg("spec") = "lexical", py::arg("embed_dim") = 4096)
      .def("describe", &Provider::describe)
      .def("relevance", [](Provider& p, const std::string& q, const std::string& s) { return p.relevance(q, s).prob_relevant; })
      .def("nli", [](Provider& p, const std::string& premise, const std::string& hyp) {
        const auto j = p.nli(premise, hyp);
        return std::map<std::string, double>{{"entail", j.entail}, {"neutral", j.neutral}, {"contradict", j.contradict}};
      })
      .def("embed", &Provider::embed)
      .def("entities", [](Provider& p, const std::string& t) { return p.entities(t); });

  m.def("split_sentences", [](const std::string& text) { return split_sentences(text); });
  m.def("terms", &terms);
  m.def("content_key", py::overload_cast<std::string_view>(&content_key));
  m.def("bm25_scores", [](const std::string& q, const std::vector<std::string>& corpus) { return bm25_scores(q, corpus); });
  m.def("tfidf_embed", [](const std::vector<std::string>& s, std::size_t dim) { return tfidf_embed(s, dim); },
        py::arg("sentences"), py::arg("dim") = 4096);

  m.def(
      "cluster",
      [](const std::vector<EmbeddingVector>& e, double max_distance) {
        const auto c = cluster(e, {max_distance});
        py::list clusters, merges;
        for (const auto& s : c.clusters) {
          py::dict d;
          d["members"] = s.members;
          d["centroid"] = s.members[s.centroid_index];
          clusters.append(d);
        }
        for (const auto& mg : c.merges) merges.append(py::make_tuple(mg.left, mg.right, mg.distance, mg.size));
        py::dict out;
        out["clusters"] = clusters;
        out["merges"] = merges;
        return out;
      },
      py::arg("embeddings"), py::arg("max_distance") = 0.65);

  m.def("rouge_l", [](const std::string& cand, const std::string& ref) {
    const auto r = rouge_l(cand, ref);
    return std::map<std::string, double>{{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
  });
  m.def("nli_score",
        [](const std::vector<std::string>& summary, const std::vector<std::string>& source, Provider& p) {
          return nli_score(summary, source, p);
        });
  m.def("nli_aggregate", [](const std::vector<std::vector<double>>& rows) {
    const auto mat = to_matrix(rows);
    return nli_score(mat.data, mat.rows, mat.cols);
  });
  m.def("semantic_area", [](const std::vector<EmbeddingVector>& e) { return semantic_area(e); });
  m.def("normalize_area", [](const std::vector<double>& v) { return normalize_area(v); });
  m.def("novel_unigram_rate", [](const std::vector<std::string>& s, const std::vector<std::string>& src) {
    return novel_unigram_rate(s, src);
  });

  m.def("nll_loss", [](const std::vector<double>& lp) { return nll_loss(lp); });
  m.def("rl_loss", [](double g, double s, const std::vector<double>& lp) { return rl_loss(g, s, lp); });
  m.def("mixed_loss", [](double rl, double ml, double span, const std::string& preset) {
    LossWeights w;
    if (preset == "rl") {
      w = kRlPreset;
    } else if (preset == "span") {
      w = kSpanPreset;
    } else if (preset == "all") {
      w = kAllLossesPreset;
    } else if (preset != "ml") {
      throw Error(ErrorCode::kInvalidConfig, "unknown preset: " + preset);
    }
    return mixed_loss(rl, ml, span, w);
  }, py::arg("l_rl"), py::arg("l_ml"), py::arg("l_span"), py::arg("preset") = "all");
  m.def("span_loss", [](const std::vector<std::vector<double>>& start, const std::vector<std::vector<double>>& end,
                        const std::vector<std::pair<std::size_t, std::size_t>>& gold) {
    return span_loss(SpanLogits{to_matrix(start), to_matrix(end)}, to_spans(gold));
  });
  m.def("span_loss_gradient", [](const std::vector<std::vector<double>>& start, const std::vector<std::vector<double>>& end,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& gold) {
    const auto g = span_loss_gradient(SpanLogits{to_matrix(start), to_matrix(end)}, to_spans(gold));
    return py::make_tuple(from_matrix(g.start), from_matrix(g.end));
  });
  m.def("gold_spans", [](const std::vector<std::string>& t, const std::vector<std::string>& s) { return gold_spans(t, s); });

  m.def("thread_filter", [](const py::object& record) {
    const auto t = parse_thread(dumps(record));
    py::list names;
    const auto v = thread_filter(t);
    for (auto r : v.rejected_rules) names.append(std::string(to_string(r)));
    return names;
  });
  m.def("filter_example", [](const py::object& record, Provider& p) {
    return verdict_dict(filter_example(parse_example(dumps(record)), p));
  });

  m.def(
      "run_pipeline",
      [](const std::vector<py::object>& records, const std::map<std::string, std::string>& settings) {
        const auto config = make_config(settings);
        std::vector<QAThread> threads;
        for (const auto& r : records) threads.push_back(parse_thread(dumps(r)));
        auto provider = make_provider(config.provider, config.embed_dim);
        const auto res = run_pipeline(std::move(threads), config, *provider);
        py::dict out;
        const char* names[3] = {"train", "validation", "test"};
        for (int i = 0; i < 3; ++i) {
          py::list l;
          for (const auto& e : res.splits[i]) l.append(loads(example_record(e)));
          out[names[i]] = l;
        }
        out["assembled"] = res.examples.size();
        out["surviving"] = res.surviving.size();
        out["skipped"] = res.skipped;
        return out;
      },
      py::arg("threads"), py::arg("settings") = std::map<std::string, std::string>{});

  m.def(
      "run_to_directory",
      [](const std::filesystem::path& corpus, const std::filesystem::path& out_dir,
         const std::map<std::string, std::string>& settings, bool force) {
        const auto s = run_to_directory(make_config(settings), corpus, out_dir, RunOptions{force, {}});
        return py::make_tuple(s.executed, s.reused);
      },
      py::arg("corpus"), py::arg("out_dir"), py::arg("settings") = std::map<std::string, std::string>{},
      py::arg("force") = false);
}
