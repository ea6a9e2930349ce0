#pragma once

#include "kgv/corpus.hpp"
#include "kgv/embed.hpp"
#include "kgv/extract.hpp"
#include "kgv/graph.hpp"
#include "kgv/llm.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kgv::knowledge {

struct FactTriple {
    extract::Triple triple;
    std::string source_paragraph_id;
    double extraction_confidence = 1.0;  // in [0,1]
};

struct Match {
    FactTriple fact;
    double score = 0.0;  // mean of the three slot scores
    double subject_score = 0.0;
    double predicate_score = 0.0;
    double object_score = 0.0;
};

struct MatchResult {
    extract::Triple claim_triple;
    std::vector<Match> matches;  // scores non-increasing, |matches| <= k
    int k = 5;
};

std::string fact_prompt(const std::string& paragraph_text);

// One extraction pass per sub-KG paragraph (LLM or the fallback patterns),
// each fact carrying provenance. Malformed responses skip the paragraph and
// never abort the harvest. Exact-duplicate triples keep the highest
// confidence.
std::vector<FactTriple> harvest_fact_triples(const graph::SubKG& subkg,
                                             const corpus::Corpus& corpus, llm::Provider* llm);

// Slot-wise mean cosine between the claim triple and every fact, top-k, ties
// broken by (source paragraph, slot order). Slots embed through the corpus
// token pipeline; a slot that tokenizes to nothing scores 0 against anything.
MatchResult match_triples(const extract::Triple& claim_triple,
                          const std::vector<FactTriple>& facts, embed::Provider& provider,
                          int k = 5);

// Facts whose subject or object mentions any entity, by confidence, first k.
std::vector<FactTriple> entity_retrieve_baseline(const std::vector<std::string>& entities,
                                                 const std::vector<FactTriple>& facts, int k);

nlohmann::json to_json(const FactTriple& fact);
FactTriple fact_from_json(const nlohmann::json& j);

void save_facts_jsonl(const std::vector<FactTriple>& facts, const std::string& path);
std::vector<FactTriple> load_facts_jsonl(const std::string& path);

// Harvest results keyed by (sub-KG content hash, provider name); one JSONL
// file per key under the cache directory.
class FactCache {
public:
    explicit FactCache(std::string dir);

    static std::string key_for(const graph::SubKG& subkg, const std::string& provider_name);

    std::optional<std::vector<FactTriple>> get(const std::string& key) const;
    void put(const std::string& key, const std::vector<FactTriple>& facts);

private:
    std::string dir_;
};

} // namespace kgv::knowledge
