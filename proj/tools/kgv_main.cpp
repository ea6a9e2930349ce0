#include "kgv/config.hpp"
#include "kgv/corpus.hpp"
#include "kgv/embed.hpp"
#include "kgv/errors.hpp"
#include "kgv/graph.hpp"
#include "kgv/harness.hpp"
#include "kgv/knowledge.hpp"
#include "kgv/llm.hpp"
#include "kgv/util.hpp"
#include "kgv/verify.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

namespace fs = std::filesystem;
using namespace kgv;

namespace {

struct ProviderBundle {
    std::unique_ptr<embed::Provider> embedder;
    std::unique_ptr<llm::Provider> llm;  // may stay null (offline fallbacks)
};

ProviderBundle make_providers(const PipelineConfig& config) {
    ProviderBundle bundle;
    if (config.provider == "stub") {
        bundle.embedder = std::make_unique<embed::StubProvider>();
    } else if (config.provider == "scripted") {
        bundle.embedder = std::make_unique<embed::StubProvider>();
        if (config.scripted_path.empty()) {
            throw Error(ErrorCode::ConfigError,
                        "provider 'scripted' needs --scripted <transcript.json>");
        }
        bundle.llm = std::make_unique<llm::ScriptedProvider>(
            llm::ScriptedProvider::from_file(config.scripted_path));
    } else if (config.provider == "http") {
        if (config.embed_endpoint.empty() || config.llm_endpoint.empty()) {
            throw Error(ErrorCode::ConfigError,
                        "provider 'http' needs embed_endpoint and llm_endpoint in the config");
        }
        bundle.embedder = std::make_unique<embed::HttpProvider>(
            embed::HttpConfig{config.embed_endpoint, config.http_timeout_ms, config.http_retries});
        bundle.llm = std::make_unique<llm::HttpProvider>(
            llm::HttpConfig{config.llm_endpoint, config.http_timeout_ms, config.http_retries});
    } else {
        throw Error(ErrorCode::ConfigError, "unknown provider '" + config.provider + "'");
    }
    return bundle;
}

corpus::Corpus load_any_corpus(const std::string& path, const PipelineConfig& config) {
    if (fs::is_directory(path)) {
        return corpus::load_corpus_dir(path, config.max_paragraph_chars);
    }
    return corpus::load_corpus_file(path);
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << content;
}

std::vector<corpus::Report> clue_reports_of(const corpus::Corpus& corpus) {
    std::vector<corpus::Report> out;
    for (const auto& r : corpus.reports) {
        if (r.role == corpus::Role::Clue) out.push_back(r);
    }
    return out;
}

std::vector<corpus::Report> pending_reports_of(const corpus::Corpus& corpus,
                                               const std::string& pending_id) {
    std::vector<corpus::Report> out;
    for (const auto& r : corpus.reports) {
        if (r.role != corpus::Role::Pending) continue;
        if (pending_id.empty() || r.id == pending_id) out.push_back(r);
    }
    if (out.empty()) {
        throw Error(ErrorCode::Precondition,
                    pending_id.empty() ? "corpus has no pending report"
                                       : "pending report '" + pending_id + "' not found");
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kgv: paragraph-graph credibility assessment for threat reports"};
    app.require_subcommand(1);

    std::string config_path;
    std::string kg_path;
    std::string out_path;
    std::string provider;
    std::string scripted_path;
    std::string alias_path;
    app.add_option("--config", config_path, "TOML-style key/value config file")
        ->check(CLI::ExistingFile);
    app.add_option("--kg", kg_path, "knowledge graph JSON file");
    app.add_option("--out", out_path, "output file");
    app.add_option("--provider", provider, "stub|scripted|http");
    app.add_option("--scripted", scripted_path, "scripted LLM transcript (JSON array)");
    app.add_option("--aliases", alias_path, "alias table JSON file");

    auto* ingest = app.add_subcommand("ingest", "normalize reports into a corpus JSON file");
    std::string ingest_in, ingest_role = "clue", ingest_id, ingest_title;
    ingest->add_option("--in", ingest_in, "report directory or single file")->required();
    ingest->add_option("--role", ingest_role, "clue|pending (single-file ingestion)");
    ingest->add_option("--id", ingest_id, "report id (single-file ingestion)");
    ingest->add_option("--title", ingest_title, "report title (single-file ingestion)");

    auto* build = app.add_subcommand("build-graph", "build the paragraph KG from clue reports");
    std::string build_corpus;
    build->add_option("--corpus", build_corpus, "corpus JSON file or report directory")
        ->required();

    auto* assess = app.add_subcommand("assess", "assess the credibility of a pending report");
    std::string assess_corpus, assess_pending;
    assess->add_option("--corpus", assess_corpus, "corpus JSON file or report directory")
        ->required();
    assess->add_option("--pending", assess_pending, "pending report id (default: the only one)");

    auto* eval = app.add_subcommand("eval", "score assessments against gold labels");
    std::vector<std::string> eval_assessments;
    std::string eval_gold;
    eval->add_option("--assessment", eval_assessments, "assessment JSON file(s)")->required();
    eval->add_option("--gold", eval_gold, "gold label JSON file")->required();

    auto* sweep = app.add_subcommand("sweep", "threshold sweep: precision/latency/density table");
    std::string sweep_corpus, sweep_gold, sweep_thresholds = "0.7,0.75,0.8,0.85,0.9,0.95";
    sweep->add_option("--corpus", sweep_corpus, "corpus JSON file or report directory")
        ->required();
    sweep->add_option("--gold", sweep_gold, "gold label JSON file")->required();
    sweep->add_option("--thresholds", sweep_thresholds, "comma-separated threshold list");

    auto* nodes = app.add_subcommand("compare-nodes", "paragraph-node vs entity-node graphs");
    std::string nodes_corpus, nodes_gold;
    nodes->add_option("--corpus", nodes_corpus, "corpus JSON file or report directory")
        ->required();
    nodes->add_option("--gold", nodes_gold, "gold label JSON file");

    auto* retr = app.add_subcommand("compare-retrieval",
                                    "triple matching vs entity retrieval across k");
    std::string retr_fixture, retr_k = "1,3,5,7,10";
    retr->add_option("--fixture", retr_fixture, "retrieval fixture JSON file")->required();
    retr->add_option("--k", retr_k, "comma-separated k values");

    // allow the global flags to appear after the subcommand
    for (auto* sub : {ingest, build, assess, eval, sweep, nodes, retr}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig config =
            config_path.empty() ? PipelineConfig{} : load_config(config_path);
        if (!provider.empty()) config.provider = provider;
        if (!scripted_path.empty()) config.scripted_path = scripted_path;
        if (!alias_path.empty()) config.alias_table_path = alias_path;

        if (ingest->parsed()) {
            corpus::Corpus corpus;
            if (fs::is_directory(ingest_in)) {
                corpus = corpus::load_corpus_dir(ingest_in, config.max_paragraph_chars);
            } else {
                std::ifstream in(ingest_in, std::ios::binary);
                if (!in) throw Error(ErrorCode::IoError, "cannot read " + ingest_in);
                std::ostringstream ss;
                ss << in.rdbuf();
                const std::string name = fs::path(ingest_in).filename().string();
                if (name.size() > 10 && name.substr(name.size() - 10) == ".stix.json") {
                    corpus.reports.push_back(corpus::ingest_stix(
                        nlohmann::json::parse(ss.str()), corpus::role_from_string(ingest_role),
                        ingest_in, config.max_paragraph_chars));
                } else {
                    corpus::ReportMeta meta;
                    meta.id = ingest_id.empty() ? fs::path(ingest_in).stem().string() : ingest_id;
                    meta.role = corpus::role_from_string(ingest_role);
                    meta.title = ingest_title;
                    meta.source_uri = ingest_in;
                    corpus.reports.push_back(
                        corpus::ingest_plain_text(ss.str(), meta, config.max_paragraph_chars));
                }
            }
            const std::string out = out_path.empty() ? "corpus.json" : out_path;
            corpus::save_corpus_file(corpus, out);
            std::cout << "wrote " << out << " (" << corpus.reports.size() << " reports, "
                      << corpus.total_paragraphs() << " paragraphs)\n";
            return 0;
        }

        ProviderBundle providers = make_providers(config);

        if (build->parsed()) {
            corpus::Corpus corpus = load_any_corpus(build_corpus, config);
            graph::ParagraphKG kg = graph::build_graph(clue_reports_of(corpus),
                                                       *providers.embedder, config.graph,
                                                       providers.llm.get());
            const std::string out = out_path.empty() ? "kg.json" : out_path;
            graph::save_kg(kg, out);
            std::cout << "wrote " << out << " (" << kg.nodes.size() << " nodes, "
                      << kg.edges.size() << " edges, density "
                      << (kg.nodes.size() >= 2 ? graph::density(kg) : 0.0) << ")\n";
            return 0;
        }

        if (assess->parsed()) {
            if (kg_path.empty()) throw Error(ErrorCode::ConfigError, "assess needs --kg");
            corpus::Corpus corpus = load_any_corpus(assess_corpus, config);
            graph::ParagraphKG kg = graph::load_kg(kg_path);
            graph::attach_texts(kg, corpus);
            verify::Providers vp{providers.embedder.get(), providers.llm.get()};
            auto pendings = pending_reports_of(corpus, assess_pending);
            nlohmann::json out_json;
            for (const auto& pending : pendings) {
                verify::Assessment assessment =
                    verify::assess_report(pending, kg, corpus, vp, config);
                out_json = verify::to_json(assessment);
                const std::string out = out_path.empty()
                                            ? assessment.report_id + ".assessment.json"
                                            : out_path;
                write_text(out, out_json.dump(2) + "\n");
                std::cout << "wrote " << out << " (verified="
                          << (assessment.verified ? "true" : "false") << ", credibility="
                          << assessment.credibility_score << ")\n";
            }
            return 0;
        }

        if (eval->parsed()) {
            harness::GoldSet gold = harness::load_gold(eval_gold);
            std::vector<std::pair<std::string, verify::Label>> points;
            std::vector<std::pair<std::string, verify::Label>> claims;
            for (const auto& path : eval_assessments) {
                std::ifstream in(path, std::ios::binary);
                if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
                nlohmann::json aj = nlohmann::json::parse(in);
                const std::string report_id = aj.at("report_id").get<std::string>();
                int point_index = 0;
                for (const auto& pj : aj.at("points")) {
                    const std::string point_id =
                        report_id + "/p" + std::to_string(point_index++);
                    points.emplace_back(point_id,
                                        verify::label_from_string(pj.at("label").get<std::string>()));
                    int claim_index = 0;
                    for (const auto& cj : pj.at("claims")) {
                        claims.emplace_back(point_id + "/c" + std::to_string(claim_index++),
                                            verify::label_from_string(
                                                cj.at("label").get<std::string>()));
                    }
                }
            }
            std::ostringstream csv;
            csv << "level,precision,recall,f1,count\n";
            harness::Metrics pm = harness::score(points, gold.points);
            csv << "point," << pm.precision << "," << pm.recall << "," << pm.f1 << ","
                << points.size() << "\n";
            if (!gold.claims.empty()) {
                harness::Metrics cm = harness::score(claims, gold.claims);
                csv << "claim," << cm.precision << "," << cm.recall << "," << cm.f1 << ","
                    << claims.size() << "\n";
            }
            const std::string out = out_path.empty() ? "metrics.csv" : out_path;
            write_text(out, csv.str());
            std::cout << "wrote " << out << "\n" << csv.str();
            return 0;
        }

        if (sweep->parsed()) {
            corpus::Corpus corpus = load_any_corpus(sweep_corpus, config);
            harness::GoldSet gold = harness::load_gold(sweep_gold);
            std::vector<double> thresholds;
            for (const auto& t : util::split_list(sweep_thresholds)) {
                thresholds.push_back(std::stod(t));
            }
            verify::Providers vp{providers.embedder.get(), providers.llm.get()};
            auto rows = harness::sweep_threshold(clue_reports_of(corpus),
                                                 pending_reports_of(corpus, ""), corpus, gold,
                                                 thresholds, vp, config);
            const std::string out = out_path.empty() ? "sweep.csv" : out_path;
            write_text(out, harness::sweep_csv(rows));
            std::cout << "wrote " << out << "\n" << harness::sweep_csv(rows);
            return 0;
        }

        if (nodes->parsed()) {
            corpus::Corpus corpus = load_any_corpus(nodes_corpus, config);
            harness::GoldSet gold;
            if (!nodes_gold.empty()) gold = harness::load_gold(nodes_gold);
            verify::Providers vp{providers.embedder.get(), providers.llm.get()};
            auto report = harness::compare_node_types(clue_reports_of(corpus),
                                                      pending_reports_of(corpus, ""), corpus,
                                                      gold, vp, config);
            const std::string out = out_path.empty() ? "node_types.csv" : out_path;
            write_text(out, harness::node_type_csv(report));
            std::cout << "wrote " << out << "\n" << harness::node_type_csv(report);
            return 0;
        }

        if (retr->parsed()) {
            std::ifstream in(retr_fixture, std::ios::binary);
            if (!in) throw Error(ErrorCode::IoError, "cannot read " + retr_fixture);
            harness::RetrievalFixture fixture =
                harness::retrieval_fixture_from_json(nlohmann::json::parse(in));
            std::vector<int> ks;
            for (const auto& k : util::split_list(retr_k)) ks.push_back(std::stoi(k));
            auto rows = harness::compare_retrieval(ks, fixture, *providers.embedder, config);
            const std::string out = out_path.empty() ? "retrieval.csv" : out_path;
            write_text(out, harness::retrieval_csv(rows));
            std::cout << "wrote " << out << "\n" << harness::retrieval_csv(rows);
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error";
        if (e.stage()) std::cerr << " [stage: " << to_string(*e.stage()) << "]";
        std::cerr << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
