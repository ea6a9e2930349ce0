#pragma once

#include "kgv/config.hpp"
#include "kgv/corpus.hpp"
#include "kgv/extract.hpp"
#include "kgv/graph.hpp"
#include "kgv/knowledge.hpp"
#include "kgv/llm.hpp"

#include <string>
#include <vector>

#include <json.hpp>

namespace kgv::verify {

enum class Label { Supported, Refuted, NotEnoughInfo };

const char* to_string(Label label);
Label label_from_string(std::string_view s);

struct ClaimVerdict {
    std::string claim_id;
    std::string claim_text;
    Label label = Label::NotEnoughInfo;
    std::vector<knowledge::Match> evidence;  // best match per claim triple, floor applied
    std::string rationale;
};

struct PointVerdict {
    std::string point_id;
    extract::Dimension dimension = extract::Dimension::AttackSource;
    std::string point_text;
    Label label = Label::NotEnoughInfo;
    std::vector<ClaimVerdict> claim_verdicts;
};

struct Assessment {
    std::string report_id;
    std::vector<PointVerdict> point_verdicts;
    int verification_score = 0;       // claims whose triples matched knowledge triples
    int total_claims = 0;
    double credibility_score = 0.0;   // supported points / total points
    bool verified = false;
};

std::string verdict_prompt(const std::string& claim_text,
                           const std::vector<knowledge::Match>& evidence);

// Supported / Refuted need at least one evidence entry; an empty match set
// yields NotEnoughInfo without consulting the judge. The offline judge calls
// a claim supported when its best slot-mean score reaches the support
// threshold, refuted when subject and predicate agree but the object clearly
// does not, NotEnoughInfo otherwise.
ClaimVerdict verify_claim(const extract::Claim& claim,
                          const std::vector<knowledge::MatchResult>& matches, llm::Provider* llm,
                          const PipelineConfig& config);

// Conjunctive: all supported -> Supported, any refuted -> Refuted, else
// NotEnoughInfo. Order-independent.
Label aggregate_labels(const std::vector<ClaimVerdict>& verdicts);
PointVerdict aggregate_point(const extract::KeyPoint& point, std::vector<ClaimVerdict> verdicts);

struct Providers {
    embed::Provider* embedder = nullptr;  // required
    llm::Provider* llm = nullptr;         // optional: offline fallbacks without it
};

// Full pipeline: entities -> sub-KG -> key points -> claims -> triples ->
// matching -> claim verdicts -> point verdicts -> report assessment. Errors
// raised by a stage carry that stage's tag. Unknown organizations are not an
// error: every point comes back NotEnoughInfo and verified stays false.
Assessment assess_report(const corpus::Report& pending, const graph::ParagraphKG& kg,
                         const corpus::Corpus& corpus, const Providers& providers,
                         const PipelineConfig& config);

// The main phase alone, against an already-harvested fact pool. Backs both
// assess_report and the node-type comparison baseline.
Assessment assess_with_facts(const corpus::Report& pending,
                             const std::vector<knowledge::FactTriple>& facts,
                             const Providers& providers, const PipelineConfig& config);

nlohmann::json to_json(const Assessment& assessment);

} // namespace kgv::verify
