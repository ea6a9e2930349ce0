#include "kgv/harness.hpp"

#include "kgv/errors.hpp"
#include "kgv/util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace kgv::harness {

GoldSet gold_from_json(const nlohmann::json& j) {
    GoldSet gold;
    auto read = [](const nlohmann::json& arr) {
        std::vector<GoldLabel> out;
        for (const auto& item : arr) {
            GoldLabel g;
            g.id = item.at("id").get<std::string>();
            const std::string label = util::lower(item.at("label").get<std::string>());
            if (label == "real") g.real = true;
            else if (label == "fake") g.real = false;
            else throw Error(ErrorCode::IoError, "gold label must be real|fake, got " + label);
            out.push_back(std::move(g));
        }
        return out;
    };
    if (j.contains("points")) gold.points = read(j["points"]);
    if (j.contains("claims")) gold.claims = read(j["claims"]);
    return gold;
}

GoldSet load_gold(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read gold file " + path);
    return gold_from_json(nlohmann::json::parse(in));
}

Metrics score(const std::vector<std::pair<std::string, verify::Label>>& predictions,
              const std::vector<GoldLabel>& gold) {
    std::map<std::string, bool> gold_by_id;
    for (const auto& g : gold) gold_by_id[g.id] = g.real;
    if (gold_by_id.size() != predictions.size()) {
        throw Error(ErrorCode::IdMismatch,
                    "prediction/gold size mismatch: " + std::to_string(predictions.size()) +
                        " vs " + std::to_string(gold_by_id.size()));
    }

    long tp = 0, fp = 0, fn = 0;
    for (const auto& [id, label] : predictions) {
        auto it = gold_by_id.find(id);
        if (it == gold_by_id.end()) {
            throw Error(ErrorCode::IdMismatch, "prediction id '" + id + "' has no gold label");
        }
        const bool predicted_real = label == verify::Label::Supported;
        const bool gold_real = it->second;
        if (predicted_real && gold_real) ++tp;
        else if (predicted_real && !gold_real) ++fp;
        else if (!predicted_real && gold_real) ++fn;
    }

    Metrics m;
    m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

double exact_match(const std::vector<std::pair<std::string, std::string>>& predictions,
                   const std::vector<std::pair<std::string, std::string>>& gold) {
    std::map<std::string, std::string> gold_by_id(gold.begin(), gold.end());
    if (gold_by_id.size() != predictions.size()) {
        throw Error(ErrorCode::IdMismatch, "prediction/gold size mismatch");
    }
    if (predictions.empty()) return 0.0;
    long hits = 0;
    for (const auto& [id, answer] : predictions) {
        auto it = gold_by_id.find(id);
        if (it == gold_by_id.end()) {
            throw Error(ErrorCode::IdMismatch, "prediction id '" + id + "' has no gold answer");
        }
        if (util::trim(util::lower(answer)) == util::trim(util::lower(it->second))) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

TimeStats timeit(const std::function<void()>& op, int repetitions) {
    if (repetitions < 3) {
        throw Error(ErrorCode::Precondition,
                    "timing needs at least 3 repetitions, got " + std::to_string(repetitions));
    }
    std::vector<double> samples;
    samples.reserve(static_cast<size_t>(repetitions));
    for (int i = 0; i < repetitions; ++i) {
        auto start = std::chrono::steady_clock::now();
        op();
        auto stop = std::chrono::steady_clock::now();
        samples.push_back(std::chrono::duration<double>(stop - start).count());
    }
    TimeStats stats;
    stats.repetitions = repetitions;
    for (double s : samples) stats.mean_s += s;
    stats.mean_s /= static_cast<double>(repetitions);
    double ss = 0.0;
    for (double s : samples) ss += (s - stats.mean_s) * (s - stats.mean_s);
    stats.stddev_s = std::sqrt(ss / static_cast<double>(repetitions - 1));
    return stats;
}

std::vector<std::pair<std::string, verify::Label>> point_predictions(
    const verify::Assessment& assessment, const std::string& /*report_id_prefix*/) {
    std::vector<std::pair<std::string, verify::Label>> out;
    for (const auto& pv : assessment.point_verdicts) out.emplace_back(pv.point_id, pv.label);
    return out;
}

std::vector<std::pair<std::string, verify::Label>> claim_predictions(
    const verify::Assessment& assessment) {
    std::vector<std::pair<std::string, verify::Label>> out;
    for (const auto& pv : assessment.point_verdicts) {
        for (const auto& cv : pv.claim_verdicts) out.emplace_back(cv.claim_id, cv.label);
    }
    return out;
}

namespace {

// Claim triples for the pending report, extracted outside any timer so the
// timed section is pure retrieval + matching.
std::vector<extract::Triple> pending_claim_triples(const corpus::Report& pending,
                                                   const verify::Providers& providers,
                                                   const PipelineConfig& config,
                                                   const graph::AliasTable& aliases) {
    std::vector<extract::Triple> triples;
    extract::Options opts;
    opts.retries = config.llm_retries;
    std::vector<extract::KeyPoint> points =
        extract::extract_key_points(pending, providers.llm, aliases, opts);
    for (const auto& point : points) {
        for (const auto& claim : extract::extract_claims(point, providers.llm)) {
            try {
                for (auto& t : extract::extract_claim_triples(claim, providers.llm)) {
                    triples.push_back(std::move(t));
                }
            } catch (const Error& e) {
                if (e.code() != ErrorCode::UnparsableClaim) throw;
            }
        }
    }
    return triples;
}

} // namespace

std::vector<SweepRow> sweep_threshold(const std::vector<corpus::Report>& clue_reports,
                                      const std::vector<corpus::Report>& pendings,
                                      const corpus::Corpus& corpus, const GoldSet& gold,
                                      const std::vector<double>& thresholds,
                                      const verify::Providers& providers,
                                      const PipelineConfig& base_config) {
    std::vector<SweepRow> rows;
    graph::AliasTable aliases = base_config.alias_table_path.empty()
                                    ? graph::AliasTable::builtin()
                                    : graph::AliasTable::from_file(base_config.alias_table_path);
    for (double threshold : thresholds) {
        SweepRow row;
        row.threshold = threshold;
        try {
            PipelineConfig config = base_config;
            config.graph.similarity_threshold = threshold;

            graph::ParagraphKG kg =
                graph::build_graph(clue_reports, *providers.embedder, config.graph, providers.llm);
            row.density = kg.nodes.size() >= 2 ? graph::density(kg) : 0.0;

            std::vector<std::pair<std::string, verify::Label>> all_points;
            std::vector<std::pair<std::string, verify::Label>> all_claims;
            double timed_total = 0.0;
            int timed_runs = 0;

            for (const auto& pending : pendings) {
                verify::Assessment assessment =
                    verify::assess_report(pending, kg, corpus, providers, config);
                for (auto& p : point_predictions(assessment)) all_points.push_back(std::move(p));
                for (auto& c : claim_predictions(assessment)) all_claims.push_back(std::move(c));

                // Timed section: entity anchoring is done, facts are already
                // harvested; only sub-KG retrieval and slot matching run here.
                try {
                    std::vector<std::string> entities =
                        extract::extract_entities(pending, providers.llm, aliases);
                    std::vector<extract::Triple> triples =
                        pending_claim_triples(pending, providers, config, aliases);
                    graph::SubKG warm = graph::retrieve_subgraph(kg, entities, config.graph, aliases);
                    std::vector<knowledge::FactTriple> facts =
                        knowledge::harvest_fact_triples(warm, corpus, nullptr);
                    auto stats = timeit(
                        [&] {
                            graph::SubKG sub =
                                graph::retrieve_subgraph(kg, entities, config.graph, aliases);
                            (void)sub;
                            for (const auto& t : triples) {
                                knowledge::match_triples(t, facts, *providers.embedder, config.k);
                            }
                        },
                        3);
                    timed_total += stats.mean_s;
                    ++timed_runs;
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::NoSeedNodes &&
                        e.code() != ErrorCode::NoEntitiesFound) {
                        throw;
                    }
                }
            }

            row.mean_response_time_s = timed_runs > 0 ? timed_total / timed_runs : 0.0;
            row.precision_points = score(all_points, gold.points).precision;
            if (!gold.claims.empty()) {
                row.precision_claims = score(all_claims, gold.claims).precision;
            }
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

double EntityKG::density() const {
    const std::size_t v = nodes.size();
    if (v < 2) return 0.0;
    return 2.0 * static_cast<double>(edges.size()) /
           (static_cast<double>(v) * static_cast<double>(v - 1));
}

EntityKG build_entity_graph(const std::vector<corpus::Report>& clue_reports, llm::Provider* llm) {
    std::map<std::string, std::set<std::string>> entity_paragraphs;
    std::set<std::pair<std::string, std::string>> edges;

    for (const auto& report : clue_reports) {
        for (const auto& paragraph : report.paragraphs) {
            std::vector<std::string> entities = graph::extract_keywords(paragraph, llm);
            for (const auto& e : entities) entity_paragraphs[e].insert(paragraph.id);
            for (size_t i = 0; i < entities.size(); ++i) {
                for (size_t j = i + 1; j < entities.size(); ++j) {
                    std::string a = entities[i];
                    std::string b = entities[j];
                    if (b < a) std::swap(a, b);
                    edges.insert({a, b});
                }
            }
        }
    }

    EntityKG kg;
    for (auto& [entity, paragraphs] : entity_paragraphs) {
        kg.nodes.push_back(EntityNode{entity, {paragraphs.begin(), paragraphs.end()}});
    }
    kg.edges.assign(edges.begin(), edges.end());
    return kg;
}

std::vector<std::string> entity_retrieve(const EntityKG& kg,
                                         const std::vector<std::string>& entities, int max_hops,
                                         const graph::AliasTable& aliases) {
    std::vector<std::string> probes;
    for (const auto& e : entities) {
        for (auto& p : aliases.expand(e)) probes.push_back(std::move(p));
    }

    std::set<std::string> visited;
    for (const auto& node : kg.nodes) {
        for (const auto& probe : probes) {
            if (node.entity == probe || util::contains_word_ci(node.entity, probe)) {
                visited.insert(node.entity);
                break;
            }
        }
    }

    std::map<std::string, std::vector<std::string>> adjacency;
    for (const auto& [a, b] : kg.edges) {
        adjacency[a].push_back(b);
        adjacency[b].push_back(a);
    }
    std::vector<std::string> frontier(visited.begin(), visited.end());
    for (int hop = 0; hop < max_hops && !frontier.empty(); ++hop) {
        std::vector<std::string> next;
        for (const auto& id : frontier) {
            auto it = adjacency.find(id);
            if (it == adjacency.end()) continue;
            for (const auto& neighbor : it->second) {
                if (visited.insert(neighbor).second) next.push_back(neighbor);
            }
        }
        frontier = std::move(next);
    }

    std::set<std::string> paragraphs;
    for (const auto& node : kg.nodes) {
        if (!visited.count(node.entity)) continue;
        paragraphs.insert(node.paragraph_ids.begin(), node.paragraph_ids.end());
    }
    return {paragraphs.begin(), paragraphs.end()};
}

NodeTypeReport compare_node_types(const std::vector<corpus::Report>& clue_reports,
                                  const std::vector<corpus::Report>& pendings,
                                  const corpus::Corpus& corpus, const GoldSet& gold,
                                  const verify::Providers& providers,
                                  const PipelineConfig& config) {
    if (clue_reports.empty()) {
        throw Error(ErrorCode::EmptyCorpus, "node-type comparison needs clue reports");
    }
    graph::AliasTable aliases = config.alias_table_path.empty()
                                    ? graph::AliasTable::builtin()
                                    : graph::AliasTable::from_file(config.alias_table_path);

    NodeTypeReport report;
    report.config_hash = config.content_hash();

    graph::ParagraphKG pkg =
        graph::build_graph(clue_reports, *providers.embedder, config.graph, providers.llm);
    EntityKG ekg = build_entity_graph(clue_reports, providers.llm);

    report.paragraph.node_count = static_cast<long>(pkg.nodes.size());
    report.paragraph.density = pkg.nodes.size() >= 2 ? graph::density(pkg) : 0.0;
    report.entity.node_count = static_cast<long>(ekg.nodes.size());
    report.entity.density = ekg.density();

    std::vector<std::pair<std::string, verify::Label>> paragraph_points;
    std::vector<std::pair<std::string, verify::Label>> entity_points;
    double paragraph_time = 0.0;
    double entity_time = 0.0;
    int timed = 0;

    for (const auto& pending : pendings) {
        verify::Assessment passess = verify::assess_report(pending, pkg, corpus, providers, config);
        for (auto& p : point_predictions(passess)) paragraph_points.push_back(std::move(p));

        std::vector<std::string> entities;
        try {
            entities = extract::extract_entities(pending, providers.llm, aliases);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoEntitiesFound) throw;
        }

        std::vector<knowledge::FactTriple> entity_facts;
        if (!entities.empty()) {
            std::vector<std::string> paragraph_ids =
                entity_retrieve(ekg, entities, config.graph.max_hops, aliases);
            graph::SubKG pseudo;
            pseudo.node_ids = paragraph_ids;
            if (!paragraph_ids.empty()) {
                entity_facts = knowledge::harvest_fact_triples(pseudo, corpus, providers.llm);
            }
        }
        verify::Assessment eassess =
            verify::assess_with_facts(pending, entity_facts, providers, config);
        for (auto& p : point_predictions(eassess)) entity_points.push_back(std::move(p));

        if (!entities.empty()) {
            auto pstats = timeit(
                [&] {
                    try {
                        graph::SubKG sub =
                            graph::retrieve_subgraph(pkg, entities, config.graph, aliases);
                        (void)sub;
                    } catch (const Error& e) {
                        if (e.code() != ErrorCode::NoSeedNodes) throw;
                    }
                },
                5);
            auto estats = timeit(
                [&] {
                    auto ids = entity_retrieve(ekg, entities, config.graph.max_hops, aliases);
                    (void)ids;
                },
                5);
            paragraph_time += pstats.mean_s;
            entity_time += estats.mean_s;
            ++timed;
        }
    }

    if (timed > 0) {
        report.paragraph.mean_response_time_s = paragraph_time / timed;
        report.entity.mean_response_time_s = entity_time / timed;
    }
    if (!gold.points.empty()) {
        Metrics pm = score(paragraph_points, gold.points);
        Metrics em = score(entity_points, gold.points);
        report.paragraph.precision = pm.precision;
        report.paragraph.recall = pm.recall;
        report.paragraph.f1 = pm.f1;
        report.entity.precision = em.precision;
        report.entity.recall = em.recall;
        report.entity.f1 = em.f1;
    }
    return report;
}

RetrievalFixture retrieval_fixture_from_json(const nlohmann::json& j) {
    RetrievalFixture fixture;
    const auto& t = j.at("claim_triple");
    fixture.claim_triple =
        extract::Triple{t.at(0).get<std::string>(), t.at(1).get<std::string>(),
                        t.at(2).get<std::string>()};
    fixture.entities = j.at("entities").get<std::vector<std::string>>();
    for (const auto& fj : j.at("facts")) {
        fixture.facts.push_back(knowledge::fact_from_json(fj));
    }
    fixture.expected_supported = j.value("expected_supported", true);
    return fixture;
}

std::vector<RetrievalRow> compare_retrieval(const std::vector<int>& k_values,
                                            const RetrievalFixture& fixture,
                                            embed::Provider& provider,
                                            const PipelineConfig& config) {
    if (k_values.empty()) {
        throw Error(ErrorCode::Precondition, "k_values must be non-empty");
    }
    std::vector<RetrievalRow> rows;
    for (int k : k_values) {
        knowledge::MatchResult result =
            knowledge::match_triples(fixture.claim_triple, fixture.facts, provider, k);
        RetrievalRow triple_row;
        triple_row.k = k;
        triple_row.mode = "triple";
        triple_row.retrieved_count = static_cast<int>(
            std::count_if(result.matches.begin(), result.matches.end(),
                          [&](const knowledge::Match& m) { return m.score >= config.min_match_score; }));
        const bool triple_supported =
            !result.matches.empty() && result.matches.front().score >= config.support_threshold;
        triple_row.precision = triple_supported == fixture.expected_supported ? 1.0 : 0.0;
        rows.push_back(triple_row);

        std::vector<knowledge::FactTriple> baseline =
            knowledge::entity_retrieve_baseline(fixture.entities, fixture.facts, k);
        RetrievalRow entity_row;
        entity_row.k = k;
        entity_row.mode = "entity";
        entity_row.retrieved_count = static_cast<int>(baseline.size());
        bool entity_supported = false;
        for (const auto& fact : baseline) {
            knowledge::MatchResult one =
                knowledge::match_triples(fixture.claim_triple, {fact}, provider, 1);
            if (!one.matches.empty() && one.matches.front().score >= config.support_threshold) {
                entity_supported = true;
                break;
            }
        }
        entity_row.precision = entity_supported == fixture.expected_supported ? 1.0 : 0.0;
        rows.push_back(entity_row);
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream ss;
    ss << "threshold,precision_points,precision_claims,mean_response_time_s,density,failed,error\n";
    for (const auto& r : rows) {
        ss << r.threshold << "," << r.precision_points << ",";
        if (r.precision_claims) ss << *r.precision_claims;
        ss << "," << r.mean_response_time_s << "," << r.density << "," << (r.failed ? 1 : 0)
           << "," << util::csv_escape(r.error) << "\n";
    }
    return ss.str();
}

std::string node_type_csv(const NodeTypeReport& report) {
    std::ostringstream ss;
    ss << "node_type,precision,recall,f1,node_count,density,mean_response_time_s,config_hash\n";
    auto row = [&](const char* name, const Metrics& m) {
        ss << name << "," << m.precision << "," << m.recall << "," << m.f1 << "," << m.node_count
           << "," << m.density << "," << m.mean_response_time_s << "," << report.config_hash
           << "\n";
    };
    row("paragraph", report.paragraph);
    row("entity", report.entity);
    return ss.str();
}

std::string retrieval_csv(const std::vector<RetrievalRow>& rows) {
    std::ostringstream ss;
    ss << "k,mode,retrieved_count,precision\n";
    for (const auto& r : rows) {
        ss << r.k << "," << r.mode << "," << r.retrieved_count << "," << r.precision << "\n";
    }
    return ss.str();
}

} // namespace kgv::harness
