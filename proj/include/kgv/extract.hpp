#pragma once

#include "kgv/corpus.hpp"
#include "kgv/graph.hpp"
#include "kgv/llm.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace kgv::extract {

enum class Dimension { AttackSource, AttackMethod, Timeliness };

const char* to_string(Dimension d);
Dimension dimension_from_string(std::string_view s);

struct KeyPoint {
    std::string id;         // "<report_id>/p<k>"
    std::string report_id;
    Dimension dimension = Dimension::AttackSource;
    std::string text;
};

struct Claim {
    std::string id;  // "<point_id>/c<k>"
    std::string point_id;
    std::string text;
};

struct Triple {
    std::string subject;
    std::string predicate;
    std::string object;

    bool operator==(const Triple& other) const = default;
    bool operator<(const Triple& other) const;
};

struct Options {
    int retries = 2;                       // re-prompts after rule violations
    bool enforce_hour_granularity = false; // when true rule 4 demands hh:mm or "N hours"
};

// Prompt builders. Scripted transcripts key on these exact strings, so they
// are part of the provider wire contract.
std::string key_point_prompt(const std::string& report_text);
std::string key_point_retry_prompt(const std::string& report_text,
                                   const std::vector<int>& failed_rules);
std::string claim_prompt(const std::string& point_text);
std::string triple_prompt(const std::string& claim_text);
std::string entity_prompt(const std::string& report_text);

// Machine checks for the six extraction rules; returns the failed rule
// numbers in ascending order (empty means compliant).
std::vector<int> validate_key_points(const std::vector<KeyPoint>& points,
                                     const std::string& report_text,
                                     const graph::AliasTable& aliases,
                                     const Options& opts = {});

// Attack-organization names only, deduplicated and alias-normalized. Without
// an LLM the report text is scanned against the alias table.
std::vector<std::string> extract_entities(const corpus::Report& report, llm::Provider* llm,
                                          const graph::AliasTable& aliases);

// At least three points covering source, method and timeliness; responses are
// validated against the six rules and re-prompted up to opts.retries times.
std::vector<KeyPoint> extract_key_points(const corpus::Report& report, llm::Provider* llm,
                                         const graph::AliasTable& aliases,
                                         const Options& opts = {});

std::vector<Claim> extract_claims(const KeyPoint& point, llm::Provider* llm);

// LLM path expects a JSON array of [subject, predicate, object] triples. The
// offline fallback parses "<X> uses <Y> to <Z>" into (x, uses, y) and
// (y, aimed at, gerund(z)), plus a few copula patterns.
std::vector<Triple> extract_claim_triples(const Claim& claim, llm::Provider* llm);

// Fallback triple patterns applied to one sentence; empty when nothing
// matches. Exposed for the knowledge harvester.
std::vector<std::pair<Triple, double>> fallback_sentence_triples(const std::string& sentence);

std::string gerundize(std::string_view verb);

} // namespace kgv::extract
