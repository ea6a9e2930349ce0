#pragma once

#include "kgv/corpus.hpp"
#include "kgv/extract.hpp"
#include "kgv/knowledge.hpp"
#include "kgv/llm.hpp"

#include <random>
#include <string>
#include <vector>

namespace kgv::testsupport {

inline corpus::Report plain_report(const std::string& id, corpus::Role role,
                                   const std::vector<std::string>& paragraphs) {
    std::string raw;
    for (const auto& p : paragraphs) {
        if (!raw.empty()) raw += "\n\n";
        raw += p;
    }
    corpus::ReportMeta meta;
    meta.id = id;
    meta.role = role;
    return corpus::ingest_plain_text(raw, meta);
}

// Clue corpora with overlapping vocabulary so cosine similarities span a wide
// range and semantic edges appear at realistic thresholds.
inline std::vector<corpus::Report> random_clue_reports(unsigned seed, int max_reports = 6,
                                                       int max_paragraphs = 8) {
    static const std::vector<std::string> vocab = {
        "apt34",   "apt28",    "phishing", "malware",  "dropper", "campaign",
        "banking", "credential", "exfiltration", "infrastructure", "lure", "backdoor"};
    std::mt19937 gen(seed);
    std::uniform_int_distribution<int> report_count(1, max_reports);
    std::uniform_int_distribution<int> paragraph_count(1, max_paragraphs);
    std::uniform_int_distribution<int> word_count(4, 9);
    std::uniform_int_distribution<size_t> word(0, vocab.size() - 1);

    std::vector<corpus::Report> reports;
    const int n = report_count(gen);
    for (int r = 0; r < n; ++r) {
        const int m = paragraph_count(gen);
        std::vector<std::string> paragraphs;
        for (int p = 0; p < m; ++p) {
            std::string text;
            const int words = word_count(gen);
            for (int w = 0; w < words; ++w) {
                if (!text.empty()) text += " ";
                text += vocab[word(gen)];
            }
            text += ".";
            paragraphs.push_back(text);
        }
        reports.push_back(
            plain_report("r" + std::to_string(seed) + "-" + std::to_string(r),
                         corpus::Role::Clue, paragraphs));
    }
    return reports;
}

// ---------------------------------------------------------------------------
// Worked example: one method point decomposes into a social-engineering claim
// and a phishing claim; the knowledge base carries only the phishing fact.

struct WorkedExample {
    corpus::Corpus corpus;               // clue reports only
    corpus::Report pending;
    llm::ScriptedProvider transcript;
    std::string social_claim;
    std::string phishing_claim;
};

inline WorkedExample worked_example() {
    WorkedExample fx;

    const std::string source_point =
        "APT28 conducted the credential theft campaign against European agencies.";
    const std::string method_point =
        "APT28 uses social engineering techniques to steal sensitive information from its "
        "targets.";
    const std::string time_point =
        "The intrusion began on 14 March 2024 at 09:00 and lasted 36 hours.";

    fx.pending = plain_report("pend-1", corpus::Role::Pending,
                              {source_point, method_point, time_point});

    const std::string clue_seed =
        "APT28 ran widespread credential phishing waves during 2024.";
    const std::string clue_fact =
        "Phishing techniques are aimed at stealing sensitive information.";
    fx.corpus.reports.push_back(
        plain_report("clue-1", corpus::Role::Clue, {clue_seed, clue_fact}));

    fx.social_claim = method_point.substr(0, method_point.size() - 1);  // no trailing dot
    fx.phishing_claim =
        "APT28 uses phishing techniques to steal sensitive information from its targets";

    const std::string report_text = fx.pending.full_text();
    fx.transcript.add(extract::entity_prompt(report_text), R"(["APT28"])");
    fx.transcript.add(
        extract::key_point_prompt(report_text),
        nlohmann::json::array({{{"dimension", "attack_source"}, {"text", source_point}},
                               {{"dimension", "attack_method"}, {"text", method_point}},
                               {{"dimension", "timeliness"}, {"text", time_point}}})
            .dump());

    fx.transcript.add(extract::claim_prompt(source_point),
                      nlohmann::json::array({source_point}).dump());
    fx.transcript.add(extract::claim_prompt(method_point),
                      nlohmann::json::array({fx.social_claim, fx.phishing_claim}).dump());
    fx.transcript.add(extract::claim_prompt(time_point),
                      nlohmann::json::array({time_point}).dump());

    fx.transcript.add(
        extract::triple_prompt(source_point),
        R"([["APT28","conducted","credential theft campaign against european agencies"]])");
    fx.transcript.add(
        extract::triple_prompt(fx.social_claim),
        R"([["APT28","uses","social engineering techniques"],)"
        R"(["social engineering techniques","aimed at","stealing sensitive information from its targets"]])");
    fx.transcript.add(
        extract::triple_prompt(fx.phishing_claim),
        R"([["APT28","uses","phishing techniques"],)"
        R"(["phishing techniques","aimed at","stealing sensitive information from its targets"]])");
    fx.transcript.add(extract::triple_prompt(time_point),
                      R"([["the intrusion","began on","14 march 2024 at 09:00"]])");

    fx.transcript.add(knowledge::fact_prompt(clue_seed), "[]");
    fx.transcript.add(knowledge::fact_prompt(clue_fact),
                      R"([["phishing techniques","aimed at","stealing sensitive information"]])");
    return fx;
}

// ---------------------------------------------------------------------------
// Gold fixture: 1 pending + 4 clue reports; hand-derived verdict tree is
// supported / refuted / not_enough_info across the three points.

struct GoldFixture {
    corpus::Corpus corpus;  // the 4 clue reports
    corpus::Report pending;
    llm::ScriptedProvider transcript;
};

inline GoldFixture gold_fixture() {
    GoldFixture fx;

    const std::string p0 = "APT34 targeted financial institutions across the Gulf region.";
    const std::string p1 = "APT34 uses malware droppers to infect banking systems.";
    const std::string p1b = "APT34 stole credentials from branch employees.";
    const std::string p2 = "The campaign unfolded over 48 hours starting on 12 May 2023.";

    fx.pending = plain_report("gold-pending", corpus::Role::Pending, {p0, p1 + " " + p1b, p2});

    const std::string c10 = "APT34 targeted financial institutions across the Gulf region.";
    const std::string c11 = "The group favors spearphishing against regional targets.";
    const std::string c20 = "APT34 uses phishing lures.";
    const std::string c30 = "OilRig infrastructure overlaps with earlier intrusions.";
    const std::string c40 = "APT34 activity increased through 2023.";
    const std::string c41 = "Analysts track APT34 tooling across incidents.";

    fx.corpus.reports.push_back(plain_report("gold-c1", corpus::Role::Clue, {c10, c11}));
    fx.corpus.reports.push_back(plain_report("gold-c2", corpus::Role::Clue, {c20}));
    fx.corpus.reports.push_back(plain_report("gold-c3", corpus::Role::Clue, {c30}));
    fx.corpus.reports.push_back(plain_report("gold-c4", corpus::Role::Clue, {c40, c41}));

    const std::string report_text = fx.pending.full_text();
    fx.transcript.add(extract::entity_prompt(report_text), R"(["APT34"])");
    fx.transcript.add(
        extract::key_point_prompt(report_text),
        nlohmann::json::array({{{"dimension", "attack_source"}, {"text", p0}},
                               {{"dimension", "attack_method"}, {"text", p1}},
                               {{"dimension", "timeliness"}, {"text", p2}}})
            .dump());

    const std::string claim0 = p0.substr(0, p0.size() - 1);
    const std::string claim1a = p1.substr(0, p1.size() - 1);
    const std::string claim1b = p1b.substr(0, p1b.size() - 1);
    const std::string claim2 = p2.substr(0, p2.size() - 1);

    fx.transcript.add(extract::claim_prompt(p0), nlohmann::json::array({claim0}).dump());
    fx.transcript.add(extract::claim_prompt(p1),
                      nlohmann::json::array({claim1a, claim1b}).dump());
    fx.transcript.add(extract::claim_prompt(p2), nlohmann::json::array({claim2}).dump());

    fx.transcript.add(
        extract::triple_prompt(claim0),
        R"([["APT34","targeted","financial institutions across the gulf region"]])");
    fx.transcript.add(extract::triple_prompt(claim1a),
                      R"([["APT34","uses","malware droppers"]])");
    fx.transcript.add(extract::triple_prompt(claim1b),
                      R"([["APT34","stole","credentials from branch employees"]])");
    fx.transcript.add(extract::triple_prompt(claim2),
                      R"([["the campaign","unfolded over","48 hours starting on 12 may 2023"]])");

    fx.transcript.add(
        knowledge::fact_prompt(c10),
        R"([["APT34","targeted","financial institutions across the gulf region"]])");
    fx.transcript.add(knowledge::fact_prompt(c11), "[]");
    fx.transcript.add(knowledge::fact_prompt(c20), R"([["APT34","uses","phishing lures"]])");
    fx.transcript.add(knowledge::fact_prompt(c30), "[]");
    fx.transcript.add(knowledge::fact_prompt(c40), "[]");
    fx.transcript.add(knowledge::fact_prompt(c41), "[]");
    return fx;
}

} // namespace kgv::testsupport
