#include "kgv/knowledge.hpp"

#include "kgv/errors.hpp"
#include "kgv/util.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace kgv::knowledge {

std::string fact_prompt(const std::string& paragraph_text) {
    return "Extract the factual knowledge triples stated by the following paragraph from a "
           "verified threat report. Respond with a JSON array of [subject, predicate, object] "
           "string triples and nothing else.\n\nParagraph:\n" +
           paragraph_text;
}

namespace {

std::string tidy(std::string s) {
    s = util::trim(s);
    while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';')) s.pop_back();
    return util::lower(util::trim(s));
}

std::vector<std::pair<extract::Triple, double>> llm_paragraph_triples(
    const std::string& paragraph_text, llm::Provider& llm) {
    const std::string response = llm.complete(fact_prompt(paragraph_text), 512);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(util::trim(response));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedLlmOutput,
                    std::string("fact response is not valid JSON: ") + e.what());
    }
    if (!j.is_array()) {
        throw Error(ErrorCode::MalformedLlmOutput, "fact response must be a JSON array");
    }
    std::vector<std::pair<extract::Triple, double>> out;
    for (const auto& item : j) {
        extract::Triple t;
        double confidence = 0.8;
        if (item.is_array() && item.size() == 3) {
            t.subject = tidy(item[0].get<std::string>());
            t.predicate = tidy(item[1].get<std::string>());
            t.object = tidy(item[2].get<std::string>());
        } else if (item.is_object()) {
            t.subject = tidy(item.value("subject", ""));
            t.predicate = tidy(item.value("predicate", ""));
            t.object = tidy(item.value("object", ""));
            confidence = item.value("confidence", confidence);
        } else {
            throw Error(ErrorCode::MalformedLlmOutput, "facts must be [s,p,o] arrays or objects");
        }
        if (t.subject.empty() || t.predicate.empty() || t.object.empty()) {
            throw Error(ErrorCode::MalformedLlmOutput, "fact triple has an empty slot");
        }
        out.emplace_back(std::move(t), std::clamp(confidence, 0.0, 1.0));
    }
    return out;
}

} // namespace

std::vector<FactTriple> harvest_fact_triples(const graph::SubKG& subkg,
                                             const corpus::Corpus& corpus, llm::Provider* llm) {
    if (subkg.node_ids.empty()) {
        throw Error(ErrorCode::Precondition, "cannot harvest from an empty sub-KG");
    }

    // Dedup by exact slot equality, keeping the highest confidence; provenance
    // of the kept fact follows the winning confidence (first paragraph wins a
    // tie, node ids are already sorted).
    std::map<extract::Triple, FactTriple> best;
    for (const auto& paragraph_id : subkg.node_ids) {
        const corpus::Paragraph* paragraph = corpus.find_paragraph(paragraph_id);
        if (paragraph == nullptr) {
            util::log_warn("sub-KG paragraph '" + paragraph_id + "' missing from corpus; skipped");
            continue;
        }
        std::vector<std::pair<extract::Triple, double>> extracted;
        if (llm != nullptr) {
            try {
                extracted = llm_paragraph_triples(paragraph->text, *llm);
            } catch (const Error& e) {
                util::log_warn("fact extraction skipped paragraph '" + paragraph_id +
                               "': " + e.what());
                continue;
            }
        } else {
            for (const auto& sentence : util::split_sentences(paragraph->text)) {
                for (auto& [triple, confidence] : extract::fallback_sentence_triples(sentence)) {
                    extracted.emplace_back(std::move(triple), confidence);
                }
            }
        }
        for (auto& [triple, confidence] : extracted) {
            auto it = best.find(triple);
            if (it == best.end() || confidence > it->second.extraction_confidence) {
                best[triple] = FactTriple{triple, paragraph_id, confidence};
            }
        }
    }

    std::vector<FactTriple> facts;
    facts.reserve(best.size());
    for (auto& [triple, fact] : best) facts.push_back(fact);
    return facts;
}

namespace {

embed::Vector slot_vector(const std::string& slot, embed::Provider& provider, bool& empty,
                          std::map<std::string, std::pair<embed::Vector, bool>>& memo) {
    auto it = memo.find(slot);
    if (it == memo.end()) {
        std::vector<std::string> tokens = corpus::preprocess(slot);
        if (tokens.empty()) {
            it = memo.emplace(slot, std::make_pair(embed::Vector{}, true)).first;
        } else {
            it = memo.emplace(slot,
                              std::make_pair(embed::embed_paragraph(tokens, provider), false))
                     .first;
        }
    }
    empty = it->second.second;
    return it->second.first;
}

double slot_score(const std::string& a, const std::string& b, embed::Provider& provider,
                  std::map<std::string, std::pair<embed::Vector, bool>>& memo) {
    bool ea = false;
    bool eb = false;
    embed::Vector va = slot_vector(a, provider, ea, memo);
    embed::Vector vb = slot_vector(b, provider, eb, memo);
    if (ea || eb) return 0.0;
    if (embed::norm(va) < 1e-12 || embed::norm(vb) < 1e-12) return 0.0;
    return embed::cosine(va, vb);
}

} // namespace

MatchResult match_triples(const extract::Triple& claim_triple,
                          const std::vector<FactTriple>& facts, embed::Provider& provider,
                          int k) {
    if (k < 1) {
        throw Error(ErrorCode::Precondition, "k must be at least 1");
    }
    MatchResult result;
    result.claim_triple = claim_triple;
    result.k = k;

    std::map<std::string, std::pair<embed::Vector, bool>> memo;
    for (const auto& fact : facts) {
        Match m;
        m.fact = fact;
        m.subject_score = slot_score(claim_triple.subject, fact.triple.subject, provider, memo);
        m.predicate_score =
            slot_score(claim_triple.predicate, fact.triple.predicate, provider, memo);
        m.object_score = slot_score(claim_triple.object, fact.triple.object, provider, memo);
        m.score = (m.subject_score + m.predicate_score + m.object_score) / 3.0;
        result.matches.push_back(std::move(m));
    }

    std::sort(result.matches.begin(), result.matches.end(), [](const Match& a, const Match& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.fact.source_paragraph_id != b.fact.source_paragraph_id) {
            return a.fact.source_paragraph_id < b.fact.source_paragraph_id;
        }
        return a.fact.triple < b.fact.triple;
    });
    if (result.matches.size() > static_cast<size_t>(k)) {
        result.matches.resize(static_cast<size_t>(k));
    }
    return result;
}

std::vector<FactTriple> entity_retrieve_baseline(const std::vector<std::string>& entities,
                                                 const std::vector<FactTriple>& facts, int k) {
    if (entities.empty()) {
        throw Error(ErrorCode::Precondition, "entity list must be non-empty");
    }
    std::vector<FactTriple> hits;
    for (const auto& fact : facts) {
        bool hit = std::any_of(entities.begin(), entities.end(), [&](const std::string& e) {
            return util::contains_ci(fact.triple.subject, e) ||
                   util::contains_ci(fact.triple.object, e);
        });
        if (hit) hits.push_back(fact);
    }
    std::stable_sort(hits.begin(), hits.end(), [](const FactTriple& a, const FactTriple& b) {
        if (a.extraction_confidence != b.extraction_confidence) {
            return a.extraction_confidence > b.extraction_confidence;
        }
        if (a.source_paragraph_id != b.source_paragraph_id) {
            return a.source_paragraph_id < b.source_paragraph_id;
        }
        return a.triple < b.triple;
    });
    if (hits.size() > static_cast<size_t>(std::max(k, 0))) {
        hits.resize(static_cast<size_t>(std::max(k, 0)));
    }
    return hits;
}

nlohmann::json to_json(const FactTriple& fact) {
    return {{"subject", fact.triple.subject},
            {"predicate", fact.triple.predicate},
            {"object", fact.triple.object},
            {"source_paragraph_id", fact.source_paragraph_id},
            {"extraction_confidence", fact.extraction_confidence}};
}

FactTriple fact_from_json(const nlohmann::json& j) {
    FactTriple fact;
    fact.triple.subject = j.at("subject").get<std::string>();
    fact.triple.predicate = j.at("predicate").get<std::string>();
    fact.triple.object = j.at("object").get<std::string>();
    fact.source_paragraph_id = j.at("source_paragraph_id").get<std::string>();
    fact.extraction_confidence = j.at("extraction_confidence").get<double>();
    return fact;
}

void save_facts_jsonl(const std::vector<FactTriple>& facts, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    for (const auto& fact : facts) out << to_json(fact).dump() << "\n";
}

std::vector<FactTriple> load_facts_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
    std::vector<FactTriple> facts;
    std::string line;
    while (std::getline(in, line)) {
        if (util::trim(line).empty()) continue;
        facts.push_back(fact_from_json(nlohmann::json::parse(line)));
    }
    return facts;
}

FactCache::FactCache(std::string dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

std::string FactCache::key_for(const graph::SubKG& subkg, const std::string& provider_name) {
    return subkg.content_hash() + "_" + util::hex64(util::fnv1a64(provider_name));
}

std::optional<std::vector<FactTriple>> FactCache::get(const std::string& key) const {
    const fs::path path = fs::path(dir_) / (key + ".jsonl");
    if (!fs::exists(path)) return std::nullopt;
    return load_facts_jsonl(path.string());
}

void FactCache::put(const std::string& key, const std::vector<FactTriple>& facts) {
    const fs::path path = fs::path(dir_) / (key + ".jsonl");
    const fs::path tmp = fs::path(dir_) / (key + ".jsonl.tmp");
    save_facts_jsonl(facts, tmp.string());
    fs::rename(tmp, path);
}

} // namespace kgv::knowledge
