#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kgv/config.hpp"
#include "kgv/corpus.hpp"
#include "kgv/embed.hpp"
#include "kgv/errors.hpp"
#include "kgv/graph.hpp"
#include "kgv/harness.hpp"
#include "kgv/knowledge.hpp"
#include "kgv/llm.hpp"
#include "kgv/verify.hpp"

#include <memory>

namespace py = pybind11;
using namespace kgv;

namespace {

embed::StubProvider& stub_provider() {
    static embed::StubProvider provider;
    return provider;
}

PipelineConfig config_from_kwargs(double similarity_threshold, int max_hops,
                                  bool keyword_edges, int k, double score_threshold,
                                  bool use_kg, bool parallel) {
    PipelineConfig config;
    config.graph.similarity_threshold = similarity_threshold;
    config.graph.max_hops = max_hops;
    config.graph.keyword_edges_enabled = keyword_edges;
    config.k = k;
    config.score_threshold = score_threshold;
    config.use_kg = use_kg;
    config.parallel = parallel;
    return config;
}

corpus::Corpus corpus_of(const std::vector<corpus::Report>& reports) {
    corpus::Corpus corpus;
    corpus.reports = reports;
    return corpus;
}

std::vector<corpus::Report> clues_of(const std::vector<corpus::Report>& reports) {
    std::vector<corpus::Report> out;
    for (const auto& r : reports) {
        if (r.role == corpus::Role::Clue) out.push_back(r);
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_kgv, m) {
    m.doc() = "Paragraph-graph credibility assessment for threat reports";

    py::register_exception<Error>(m, "KgvError");

    py::class_<corpus::Paragraph>(m, "Paragraph")
        .def_readonly("id", &corpus::Paragraph::id)
        .def_readonly("report_id", &corpus::Paragraph::report_id)
        .def_readonly("ordinal", &corpus::Paragraph::ordinal)
        .def_readonly("text", &corpus::Paragraph::text)
        .def_readonly("tokens", &corpus::Paragraph::tokens);

    py::class_<corpus::Report>(m, "Report")
        .def_readonly("id", &corpus::Report::id)
        .def_readonly("title", &corpus::Report::title)
        .def_property_readonly("role",
                               [](const corpus::Report& r) { return corpus::to_string(r.role); })
        .def_readonly("paragraphs", &corpus::Report::paragraphs)
        .def("full_text", &corpus::Report::full_text);

    m.def("chunk", &corpus::chunk, py::arg("raw"), py::arg("max_paragraph_chars") = 2000,
          "Split raw text into ordered paragraph blocks.");
    m.def("preprocess", &corpus::preprocess, py::arg("text"),
          "Lowercase, tokenize, drop stop words, stem.");
    m.def("stem", &corpus::stem, py::arg("word"));

    m.def(
        "ingest_plain_text",
        [](const std::string& raw, const std::string& id, const std::string& role,
           const std::string& title, const std::string& source_uri, std::size_t max_chars) {
            corpus::ReportMeta meta{id, source_uri, corpus::role_from_string(role), title};
            return corpus::ingest_plain_text(raw, meta, max_chars);
        },
        py::arg("raw"), py::arg("id"), py::arg("role") = "clue", py::arg("title") = "",
        py::arg("source_uri") = "", py::arg("max_paragraph_chars") = 2000);

    m.def(
        "ingest_stix",
        [](const std::string& bundle_json, const std::string& role) {
            return corpus::ingest_stix(nlohmann::json::parse(bundle_json),
                                       corpus::role_from_string(role));
        },
        py::arg("bundle_json"), py::arg("role") = "clue");

    m.def(
        "embed_paragraph",
        [](const std::vector<std::string>& tokens) {
            return embed::embed_paragraph(tokens, stub_provider());
        },
        py::arg("tokens"), "Mean of the stub per-token vectors.");
    m.def("cosine", &embed::cosine, py::arg("a"), py::arg("b"));

    py::class_<graph::ParagraphKG>(m, "KnowledgeGraph")
        .def_property_readonly("node_count",
                               [](const graph::ParagraphKG& kg) { return kg.nodes.size(); })
        .def_property_readonly("edge_count",
                               [](const graph::ParagraphKG& kg) { return kg.edges.size(); })
        .def("density", [](const graph::ParagraphKG& kg) { return graph::density(kg); })
        .def("node_ids",
             [](const graph::ParagraphKG& kg) {
                 std::vector<std::string> ids;
                 for (const auto& n : kg.nodes) ids.push_back(n.paragraph_id);
                 return ids;
             })
        .def(
            "retrieve",
            [](const graph::ParagraphKG& kg, const std::vector<std::string>& entities,
               int max_hops) {
                graph::Config config = kg.config;
                if (max_hops >= 0) config.max_hops = max_hops;
                return graph::retrieve_subgraph(kg, entities, config).node_ids;
            },
            py::arg("entities"), py::arg("max_hops") = -1)
        .def("save", [](const graph::ParagraphKG& kg, const std::string& path) {
            graph::save_kg(kg, path);
        })
        .def("to_json", [](const graph::ParagraphKG& kg) { return graph::to_json(kg).dump(2); });

    m.def(
        "build_graph",
        [](const std::vector<corpus::Report>& reports, double similarity_threshold, int max_hops,
           bool keyword_edges) {
            graph::Config config{similarity_threshold, max_hops, keyword_edges};
            auto clues = clues_of(reports);
            graph::ParagraphKG kg = graph::build_graph(clues, stub_provider(), config);
            graph::attach_texts(kg, corpus_of(reports));
            return kg;
        },
        py::arg("reports"), py::arg("similarity_threshold") = 0.8, py::arg("max_hops") = 1,
        py::arg("keyword_edges") = true,
        "Build the paragraph knowledge graph from the clue reports (stub embeddings).");

    m.def("load_graph", [](const std::string& path) { return graph::load_kg(path); },
          py::arg("path"));

    m.def(
        "match_triples_json",
        [](const std::vector<std::string>& claim_triple, const std::string& facts_json, int k) {
            if (claim_triple.size() != 3) {
                throw Error(ErrorCode::Precondition, "claim triple wants [s, p, o]");
            }
            std::vector<knowledge::FactTriple> facts;
            for (const auto& fj : nlohmann::json::parse(facts_json)) {
                facts.push_back(knowledge::fact_from_json(fj));
            }
            knowledge::MatchResult result = knowledge::match_triples(
                extract::Triple{claim_triple[0], claim_triple[1], claim_triple[2]}, facts,
                stub_provider(), k);
            nlohmann::json out = nlohmann::json::array();
            for (const auto& match : result.matches) {
                out.push_back({{"fact", knowledge::to_json(match.fact)},
                               {"score", match.score}});
            }
            return out.dump();
        },
        py::arg("claim_triple"), py::arg("facts_json"), py::arg("k") = 5);

    m.def(
        "assess_json",
        [](const corpus::Report& pending, const graph::ParagraphKG& kg,
           const std::vector<corpus::Report>& reports, const std::string& scripted_transcript,
           double similarity_threshold, int max_hops, bool keyword_edges, int k,
           double score_threshold, bool use_kg, bool parallel) {
            PipelineConfig config = config_from_kwargs(similarity_threshold, max_hops,
                                                       keyword_edges, k, score_threshold,
                                                       use_kg, parallel);
            std::unique_ptr<llm::ScriptedProvider> scripted;
            if (!scripted_transcript.empty()) {
                scripted = std::make_unique<llm::ScriptedProvider>(
                    llm::ScriptedProvider::from_json(nlohmann::json::parse(scripted_transcript)));
            }
            graph::ParagraphKG kg_copy = kg;
            corpus::Corpus corpus = corpus_of(reports);
            graph::attach_texts(kg_copy, corpus);
            verify::Providers providers{&stub_provider(), scripted.get()};
            verify::Assessment assessment =
                verify::assess_report(pending, kg_copy, corpus, providers, config);
            return verify::to_json(assessment).dump();
        },
        py::arg("pending"), py::arg("kg"), py::arg("reports"),
        py::arg("scripted_transcript") = "", py::arg("similarity_threshold") = 0.8,
        py::arg("max_hops") = 1, py::arg("keyword_edges") = true, py::arg("k") = 5,
        py::arg("score_threshold") = 0.5, py::arg("use_kg") = true, py::arg("parallel") = true,
        "Run the full assessment pipeline; returns the assessment JSON document.");

    m.def(
        "score",
        [](const std::vector<std::pair<std::string, std::string>>& predictions,
           const std::vector<std::pair<std::string, bool>>& gold) {
            std::vector<std::pair<std::string, verify::Label>> preds;
            for (const auto& [id, label] : predictions) {
                preds.emplace_back(id, verify::label_from_string(label));
            }
            std::vector<harness::GoldLabel> gold_labels;
            for (const auto& [id, real] : gold) gold_labels.push_back({id, real});
            harness::Metrics m2 = harness::score(preds, gold_labels);
            py::dict out;
            out["precision"] = m2.precision;
            out["recall"] = m2.recall;
            out["f1"] = m2.f1;
            return out;
        },
        py::arg("predictions"), py::arg("gold"),
        "Precision/recall/F1 over the Real class; labels are "
        "supported|refuted|not_enough_info.");

    m.attr("__version__") = "0.1.0";
    m.attr("STOP_LIST_VERSION") = corpus::kStopListVersion;
    m.attr("STEMMER_VERSION") = corpus::kStemmerVersion;
}
