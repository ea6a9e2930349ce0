#include "kgv/verify.hpp"

#include "kgv/errors.hpp"
#include "kgv/util.hpp"

#include <algorithm>
#include <future>
#include <sstream>

namespace kgv::verify {

const char* to_string(Label label) {
    switch (label) {
        case Label::Supported: return "supported";
        case Label::Refuted: return "refuted";
        case Label::NotEnoughInfo: return "not_enough_info";
    }
    return "unknown";
}

Label label_from_string(std::string_view s) {
    if (s == "supported") return Label::Supported;
    if (s == "refuted") return Label::Refuted;
    if (s == "not_enough_info" || s == "nei") return Label::NotEnoughInfo;
    throw Error(ErrorCode::MalformedLlmOutput, "unknown verdict label '" + std::string(s) + "'");
}

std::string verdict_prompt(const std::string& claim_text,
                           const std::vector<knowledge::Match>& evidence) {
    std::ostringstream ss;
    ss << "You are verifying a claim from a CTI report against factual knowledge triples "
          "retrieved from verified reports. Decide whether the facts support the claim, "
          "refute it, or are insufficient. Respond with JSON "
          "{\"label\": \"supported\"|\"refuted\"|\"not_enough_info\", \"rationale\": \"...\"} "
          "and nothing else.\n\nClaim:\n"
       << claim_text << "\n\nFacts:\n";
    if (evidence.empty()) {
        ss << "(none retrieved)\n";
    }
    for (const auto& m : evidence) {
        ss << "(" << m.fact.triple.subject << " | " << m.fact.triple.predicate << " | "
           << m.fact.triple.object << ") [" << m.fact.source_paragraph_id << "]\n";
    }
    return ss.str();
}

namespace {

// Flattens per-triple match lists into one evidence list: floor applied,
// best score first, one entry per (fact, source).
std::vector<knowledge::Match> collect_evidence(const std::vector<knowledge::MatchResult>& matches,
                                               double floor) {
    std::vector<knowledge::Match> evidence;
    for (const auto& result : matches) {
        for (const auto& m : result.matches) {
            if (m.score < floor) continue;
            auto same = std::find_if(evidence.begin(), evidence.end(), [&](const knowledge::Match& e) {
                return e.fact.triple == m.fact.triple &&
                       e.fact.source_paragraph_id == m.fact.source_paragraph_id;
            });
            if (same == evidence.end()) {
                evidence.push_back(m);
            } else if (m.score > same->score) {
                *same = m;
            }
        }
    }
    std::sort(evidence.begin(), evidence.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.fact.source_paragraph_id != b.fact.source_paragraph_id) {
            return a.fact.source_paragraph_id < b.fact.source_paragraph_id;
        }
        return a.fact.triple < b.fact.triple;
    });
    return evidence;
}

bool has_any_match(const std::vector<knowledge::MatchResult>& matches) {
    return std::any_of(matches.begin(), matches.end(),
                       [](const knowledge::MatchResult& r) { return !r.matches.empty(); });
}

ClaimVerdict offline_judge(const extract::Claim& claim,
                           const std::vector<knowledge::MatchResult>& matches,
                           const PipelineConfig& config) {
    ClaimVerdict verdict;
    verdict.claim_id = claim.id;
    verdict.claim_text = claim.text;
    verdict.evidence = collect_evidence(matches, config.min_match_score);

    double best = -1.0;
    const knowledge::Match* refuting = nullptr;
    for (const auto& result : matches) {
        for (const auto& m : result.matches) {
            best = std::max(best, m.score);
            if (m.subject_score >= config.support_threshold &&
                m.predicate_score >= config.support_threshold &&
                m.object_score < config.refute_object_threshold) {
                if (refuting == nullptr || m.object_score < refuting->object_score) {
                    refuting = &m;
                }
            }
        }
    }

    if (best >= config.support_threshold) {
        verdict.label = Label::Supported;
        verdict.rationale = "top fact match reaches the support threshold";
    } else if (refuting != nullptr) {
        verdict.label = Label::Refuted;
        verdict.rationale = "a fact agrees on subject and predicate but contradicts the object";
        bool present = std::any_of(verdict.evidence.begin(), verdict.evidence.end(),
                                   [&](const knowledge::Match& e) {
                                       return e.fact.triple == refuting->fact.triple &&
                                              e.fact.source_paragraph_id ==
                                                  refuting->fact.source_paragraph_id;
                                   });
        if (!present) verdict.evidence.push_back(*refuting);
    } else {
        verdict.label = Label::NotEnoughInfo;
        verdict.rationale = "no retrieved fact is close enough to decide";
    }
    return verdict;
}

} // namespace

ClaimVerdict verify_claim(const extract::Claim& claim,
                          const std::vector<knowledge::MatchResult>& matches, llm::Provider* llm,
                          const PipelineConfig& config) {
    const bool use_llm = llm != nullptr && config.judge != "fallback";

    // No retrieved facts: decided without consulting the judge, except in the
    // no-KG ablation where the model is the only source of verdicts.
    if (!has_any_match(matches) && config.use_kg) {
        ClaimVerdict verdict;
        verdict.claim_id = claim.id;
        verdict.claim_text = claim.text;
        verdict.label = Label::NotEnoughInfo;
        verdict.rationale = "no facts retrieved for this claim";
        return verdict;
    }

    if (!use_llm) {
        return offline_judge(claim, matches, config);
    }

    ClaimVerdict verdict;
    verdict.claim_id = claim.id;
    verdict.claim_text = claim.text;
    verdict.evidence = collect_evidence(matches, config.min_match_score);

    const std::string prompt = verdict_prompt(claim.text, verdict.evidence);
    for (int attempt = 0; attempt <= config.llm_retries; ++attempt) {
        try {
            const std::string response = llm->complete(prompt, 512);
            nlohmann::json j = nlohmann::json::parse(util::trim(response));
            verdict.label = label_from_string(j.at("label").get<std::string>());
            verdict.rationale = j.value("rationale", "");
            if (verdict.evidence.empty() && verdict.label != Label::NotEnoughInfo &&
                config.use_kg) {
                // Supported/Refuted need evidence; an evidence-free verdict
                // from the model is not trustworthy under KG guidance.
                verdict.label = Label::NotEnoughInfo;
                verdict.rationale = "judge verdict discarded: no supporting evidence";
            }
            return verdict;
        } catch (const nlohmann::json::exception&) {
            continue;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::MalformedLlmOutput &&
                e.code() != ErrorCode::ProviderFailure) {
                throw;
            }
        }
    }
    util::log_warn("claim '" + claim.id + "' degraded to not_enough_info: judge kept failing");
    verdict.label = Label::NotEnoughInfo;
    verdict.rationale = "judge unavailable after retries";
    return verdict;
}

Label aggregate_labels(const std::vector<ClaimVerdict>& verdicts) {
    if (verdicts.empty()) {
        throw Error(ErrorCode::EmptyVerdictList, "a point needs at least one claim verdict");
    }
    bool all_supported = true;
    for (const auto& v : verdicts) {
        if (v.label == Label::Refuted) return Label::Refuted;
        if (v.label != Label::Supported) all_supported = false;
    }
    return all_supported ? Label::Supported : Label::NotEnoughInfo;
}

PointVerdict aggregate_point(const extract::KeyPoint& point, std::vector<ClaimVerdict> verdicts) {
    PointVerdict pv;
    pv.point_id = point.id;
    pv.dimension = point.dimension;
    pv.point_text = point.text;
    pv.label = aggregate_labels(verdicts);
    pv.claim_verdicts = std::move(verdicts);
    return pv;
}

namespace {

template <typename F>
auto run_staged(Stage stage, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (Error& e) {
        throw e.with_stage(stage);
    }
}

PointVerdict verify_point(const extract::KeyPoint& point, const std::vector<knowledge::FactTriple>& facts,
                          const Providers& providers, const PipelineConfig& config) {
    std::vector<extract::Claim> claims = run_staged(
        Stage::ClaimExtraction, [&] { return extract::extract_claims(point, providers.llm); });

    std::vector<ClaimVerdict> verdicts;
    for (const auto& claim : claims) {
        std::vector<knowledge::MatchResult> matches;
        bool unparsable = false;
        try {
            std::vector<extract::Triple> triples = extract::extract_claim_triples(claim, providers.llm);
            for (const auto& triple : triples) {
                matches.push_back(
                    knowledge::match_triples(triple, facts, *providers.embedder, config.k));
            }
        } catch (Error& e) {
            if (e.code() == ErrorCode::UnparsableClaim) {
                // Offline extractor cannot shape this claim; the verdict
                // degrades instead of sinking the whole assessment.
                util::log_warn("claim '" + claim.id + "' has no parsable triples");
                unparsable = true;
            } else {
                throw e.with_stage(Stage::TripleRetrieval);
            }
        }

        ClaimVerdict verdict;
        if (unparsable) {
            verdict.claim_id = claim.id;
            verdict.claim_text = claim.text;
            verdict.label = Label::NotEnoughInfo;
            verdict.rationale = "claim triples could not be extracted";
        } else {
            verdict = run_staged(Stage::PointVerification, [&] {
                return verify_claim(claim, matches, providers.llm, config);
            });
        }
        verdicts.push_back(std::move(verdict));
    }
    return aggregate_point(point, std::move(verdicts));
}

} // namespace

Assessment assess_report(const corpus::Report& pending, const graph::ParagraphKG& kg,
                         const corpus::Corpus& corpus, const Providers& providers,
                         const PipelineConfig& config) {
    if (pending.role != corpus::Role::Pending) {
        throw Error(ErrorCode::Precondition, "assess_report wants a pending report");
    }
    if (providers.embedder == nullptr) {
        throw Error(ErrorCode::Precondition, "an embedding provider is required");
    }

    graph::AliasTable aliases = config.alias_table_path.empty()
                                    ? graph::AliasTable::builtin()
                                    : graph::AliasTable::from_file(config.alias_table_path);

    // Cold start: anchor entities and their sub-KG. Unknown organizations are
    // a legal outcome that downgrades every verdict to NotEnoughInfo.
    std::vector<knowledge::FactTriple> facts;
    if (config.use_kg) {
        try {
            std::vector<std::string> entities =
                extract::extract_entities(pending, providers.llm, aliases);
            graph::SubKG subkg = graph::retrieve_subgraph(kg, entities, config.graph, aliases);
            if (!config.cache_dir.empty()) {
                knowledge::FactCache cache(config.cache_dir);
                const std::string provider_name =
                    providers.llm != nullptr ? providers.llm->name() : "fallback";
                const std::string key = knowledge::FactCache::key_for(subkg, provider_name);
                if (auto cached = cache.get(key)) {
                    facts = std::move(*cached);
                } else {
                    facts = knowledge::harvest_fact_triples(subkg, corpus, providers.llm);
                    cache.put(key, facts);
                }
            } else {
                facts = knowledge::harvest_fact_triples(subkg, corpus, providers.llm);
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::NoSeedNodes || e.code() == ErrorCode::NoEntitiesFound) {
                util::log_warn(std::string("no knowledge anchored for '") + pending.id +
                               "': " + e.what());
                facts.clear();
            } else {
                throw;
            }
        }
    }

    return assess_with_facts(pending, facts, providers, config);
}

Assessment assess_with_facts(const corpus::Report& pending,
                             const std::vector<knowledge::FactTriple>& facts,
                             const Providers& providers, const PipelineConfig& config) {
    if (pending.role != corpus::Role::Pending) {
        throw Error(ErrorCode::Precondition, "assessment wants a pending report");
    }
    if (providers.embedder == nullptr) {
        throw Error(ErrorCode::Precondition, "an embedding provider is required");
    }
    graph::AliasTable aliases = config.alias_table_path.empty()
                                    ? graph::AliasTable::builtin()
                                    : graph::AliasTable::from_file(config.alias_table_path);

    std::vector<extract::KeyPoint> points = run_staged(Stage::KeyPointExtraction, [&] {
        extract::Options opts;
        opts.retries = config.llm_retries;
        return extract::extract_key_points(pending, providers.llm, aliases, opts);
    });

    std::vector<PointVerdict> point_verdicts(points.size());
    if (config.parallel && points.size() > 1) {
        std::vector<std::future<PointVerdict>> futures;
        futures.reserve(points.size());
        for (const auto& point : points) {
            futures.push_back(std::async(std::launch::async, [&point, &facts, &providers, &config] {
                return verify_point(point, facts, providers, config);
            }));
        }
        for (size_t i = 0; i < futures.size(); ++i) point_verdicts[i] = futures[i].get();
    } else {
        for (size_t i = 0; i < points.size(); ++i) {
            point_verdicts[i] = verify_point(points[i], facts, providers, config);
        }
    }

    Assessment assessment;
    assessment.report_id = pending.id;
    assessment.point_verdicts = std::move(point_verdicts);

    int supported_points = 0;
    for (const auto& pv : assessment.point_verdicts) {
        if (pv.label == Label::Supported) ++supported_points;
        for (const auto& cv : pv.claim_verdicts) {
            ++assessment.total_claims;
            if (cv.label == Label::Supported) ++assessment.verification_score;
        }
    }
    const size_t total_points = assessment.point_verdicts.size();
    assessment.credibility_score =
        total_points == 0 ? 0.0
                          : static_cast<double>(supported_points) / static_cast<double>(total_points);
    assessment.verified =
        assessment.total_claims > 0 &&
        static_cast<double>(assessment.verification_score) /
                static_cast<double>(assessment.total_claims) >=
            config.score_threshold;
    return assessment;
}

nlohmann::json to_json(const Assessment& assessment) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& pv : assessment.point_verdicts) {
        nlohmann::json claims = nlohmann::json::array();
        for (const auto& cv : pv.claim_verdicts) {
            nlohmann::json evidence = nlohmann::json::array();
            for (const auto& m : cv.evidence) {
                evidence.push_back({{"triple",
                                     {{"subject", m.fact.triple.subject},
                                      {"predicate", m.fact.triple.predicate},
                                      {"object", m.fact.triple.object}}},
                                    {"source_paragraph", m.fact.source_paragraph_id},
                                    {"score", m.score}});
            }
            claims.push_back({{"text", cv.claim_text},
                              {"label", to_string(cv.label)},
                              {"evidence", evidence}});
        }
        points.push_back({{"dimension", extract::to_string(pv.dimension)},
                          {"label", to_string(pv.label)},
                          {"claims", claims}});
    }
    return {{"report_id", assessment.report_id},
            {"verified", assessment.verified},
            {"credibility_score", assessment.credibility_score},
            {"verification_score", assessment.verification_score},
            {"points", points}};
}

} // namespace kgv::verify
