#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "claimrank/bm25.hpp"
#include "claimrank/embed.hpp"
#include "claimrank/engine.hpp"
#include "claimrank/error.hpp"
#include "claimrank/eval.hpp"
#include "claimrank/rerank.hpp"
#include "claimrank/textproc.hpp"

namespace py = pybind11;
using namespace claimrank;

namespace {

std::vector<std::pair<std::string, double>> as_pairs(const RankedList& list) {
    std::vector<std::pair<std::string, double>> out;
    out.reserve(list.size());
    for (const auto& d : list) out.emplace_back(d.doc_id, d.score);
    return out;
}

ApNormalizer parse_normalizer(const std::string& name) {
    if (name == "min") return ApNormalizer::MinRelevantK;
    if (name == "relevant") return ApNormalizer::Relevant;
    throw std::invalid_argument("normalizer must be 'min' or 'relevant'");
}

std::size_t cutoff_arg(const py::object& k) {
    if (k.is_none()) return kAllRanks;
    return k.cast<std::size_t>();
}

py::dict report_dict(const MetricReport& r) {
    py::dict d;
    d["name"] = r.name;
    d["queries"] = r.queries;
    d["mrr"] = r.mrr;
    py::dict map, hp;
    for (std::size_t i = 0; i < r.map.size(); ++i) map[py::str(cutoff_label(r.map_cutoffs[i]))] = r.map[i];
    for (std::size_t i = 0; i < r.has_positives.size(); ++i)
        hp[py::str(cutoff_label(r.has_positives_cutoffs[i]))] = r.has_positives[i];
    d["map"] = map;
    d["has_positives"] = hp;
    d["warnings"] = r.warnings;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Claim retrieval core: tokenizing, BM25, dense similarity, reranking and evaluation.";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<MissingArtifactError>(m, "MissingArtifactError", base.ptr());

    m.def("tokenize", [](const std::string& text) { return tokenize(text); }, py::arg("text"));
    m.def("split_sentences", [](const std::string& body) { return split_sentences(body); }, py::arg("body"));
    m.def("hash_embed", [](const std::string& text, std::size_t dim) { return hash_embed(text, dim); },
          py::arg("text"), py::arg("dim"));
    m.def(
        "cosine",
        [](const std::vector<double>& u, const std::vector<double>& v) {
            if (u.size() != v.size()) throw std::invalid_argument("vectors differ in length");
            return cosine(u, v).value;
        },
        py::arg("u"), py::arg("v"));

    m.def(
        "reciprocal_rank",
        [](const std::vector<std::string>& ranking, const std::set<std::string>& relevant) {
            return reciprocal_rank(ranking, relevant);
        },
        py::arg("ranking"), py::arg("relevant"));
    m.def(
        "average_precision",
        [](const std::vector<std::string>& ranking, const std::set<std::string>& relevant, const py::object& k,
           const std::string& normalizer) {
            return average_precision_at_k(ranking, relevant, cutoff_arg(k), parse_normalizer(normalizer));
        },
        py::arg("ranking"), py::arg("relevant"), py::arg("k") = py::none(), py::arg("normalizer") = "min");
    m.def(
        "has_positives",
        [](const std::vector<std::string>& ranking, const std::set<std::string>& relevant, std::size_t k) {
            return has_positives_at_k(ranking, relevant, k);
        },
        py::arg("ranking"), py::arg("relevant"), py::arg("k"));
    m.def(
        "evaluate_run",
        [](const std::map<std::string, std::vector<std::string>>& run,
           const std::map<std::string, std::set<std::string>>& qrels, const std::string& normalizer,
           const std::string& name) {
            Run r(run.begin(), run.end());
            Qrels q(qrels.begin(), qrels.end());
            EvalOptions opt;
            opt.normalizer = parse_normalizer(normalizer);
            return report_dict(evaluate_run(r, q, opt, name));
        },
        py::arg("run"), py::arg("qrels"), py::arg("normalizer") = "min", py::arg("name") = "run");

    py::class_<InvertedIndex>(m, "Bm25Index")
        .def(py::init([](std::vector<std::string> ids, const std::vector<std::string>& texts, double k1, double b) {
                 if (ids.size() != texts.size()) throw std::invalid_argument("ids and texts differ in length");
                 return InvertedIndex::build(std::move(ids), texts, Field::VerClaim, Bm25Params{k1, b});
             }),
             py::arg("ids"), py::arg("texts"), py::arg("k1") = 1.2, py::arg("b") = 0.75)
        .def_static("load", &InvertedIndex::load, py::arg("path"))
        .def("save", &InvertedIndex::save, py::arg("path"))
        .def("idf", &InvertedIndex::idf, py::arg("term"))
        .def(
            "score",
            [](const InvertedIndex& idx, const std::string& query, const std::string& doc_id) {
                return idx.score(tokenize(query), std::string_view(doc_id));
            },
            py::arg("query"), py::arg("doc_id"))
        .def(
            "retrieve",
            [](const InvertedIndex& idx, const std::string& query, std::size_t top_n) {
                return as_pairs(idx.retrieve(query, top_n));
            },
            py::arg("query"), py::arg("top_n") = 10)
        .def("__len__", &InvertedIndex::doc_count);

    py::class_<EmbeddingStore>(m, "VectorStore")
        .def_static(
            "load",
            [](const std::filesystem::path& path, std::optional<std::size_t> dim) { return import_vectors(path, dim); },
            py::arg("path"), py::arg("dim") = py::none())
        .def_property_readonly("dim", &EmbeddingStore::dim)
        .def_property_readonly("encoder", &EmbeddingStore::encoder_id)
        .def("__len__", &EmbeddingStore::size)
        .def(
            "keys",
            [](const EmbeddingStore& s) {
                std::vector<std::tuple<std::string, std::string, std::optional<std::uint32_t>>> out;
                for (std::size_t i = 0; i < s.size(); ++i) {
                    const auto& k = s.key(i);
                    out.emplace_back(k.doc_id, std::string(vector_field_name(k.field)), k.sentence);
                }
                return out;
            })
        .def(
            "vector",
            [](const EmbeddingStore& s, const std::string& doc_id, const std::string& field,
               std::optional<std::uint32_t> sentence) -> std::optional<std::vector<float>> {
                const auto v = s.vector({doc_id, parse_vector_field(field), sentence});
                if (!v) return std::nullopt;
                return std::vector<float>(v->begin(), v->end());
            },
            py::arg("doc_id"), py::arg("field"), py::arg("sentence") = py::none());

    m.def(
        "train_ranksvm_scores",
        [](const std::vector<std::vector<std::vector<double>>>& features, const std::vector<std::vector<int>>& labels,
           double gamma, double c) {
            if (features.size() != labels.size()) throw std::invalid_argument("features and labels differ in length");
            std::vector<RankingList> lists;
            for (std::size_t q = 0; q < features.size(); ++q) {
                RankingList l;
                l.query_id = "q" + std::to_string(q);
                for (std::size_t i = 0; i < features[q].size(); ++i) l.doc_ids.push_back("d" + std::to_string(i));
                l.features.assign(features[q].begin(), features[q].end());
                if (labels[q].size() != features[q].size())
                    throw std::invalid_argument("features and labels differ in length");
                l.labels.assign(labels[q].begin(), labels[q].end());
                lists.push_back(std::move(l));
            }
            RankSvmConfig cfg;
            cfg.gamma = gamma;
            cfg.c = c;
            const auto model = train_ranksvm(lists, cfg);
            std::vector<std::vector<double>> scores;
            for (const auto& l : lists) {
                auto& row = scores.emplace_back();
                for (const auto& x : l.features) row.push_back(model.score(x));
            }
            return scores;
        },
        py::arg("features"), py::arg("labels"), py::arg("gamma") = 0.0, py::arg("c") = 1.0,
        "Trains a kernel RankSVM on the given lists and returns its scores for every candidate.");

    py::class_<Engine>(m, "Engine")
        .def(py::init([](const std::filesystem::path& config, const std::vector<std::string>& overrides) {
                 return std::make_unique<Engine>(PipelineConfig::load(config, overrides));
             }),
             py::arg("config"), py::arg("overrides") = std::vector<std::string>{})
        .def("stages", &Engine::available_stages)
        .def_property_readonly("claim_count", [](const Engine& e) { return e.claims().size(); })
        .def(
            "rank",
            [](const Engine& e, const std::string& text, const std::string& stage, std::size_t top_k,
               std::vector<float> vector) {
                py::gil_scoped_release release;
                return as_pairs(e.rank(e.query_for_text("query", text, std::move(vector)), stage, top_k));
            },
            py::arg("text"), py::arg("stage") = "bm25", py::arg("top_k") = 10,
            py::arg("vector") = std::vector<float>{})
        .def("claim", [](const Engine& e, const std::string& id) -> py::object {
            const auto* c = e.claims().find(id);
            if (!c) return py::none();
            py::dict d;
            d["id"] = c->id;
            d["ver_claim"] = c->ver_claim;
            d["title"] = c->title;
            d["body"] = c->body;
            d["truth_value"] = c->truth_value;
            return d;
        })
        .def("train_mlp", [](Engine& e) { return e.train_mlp().rows; })
        .def("train_rerank", [](Engine& e) { return e.train_rerank().lists; });
}
