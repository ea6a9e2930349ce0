#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kgv/embed.hpp"
#include "kgv/errors.hpp"
#include "kgv/verify.hpp"

#include "support.hpp"

#include <algorithm>

using namespace kgv;
using testsupport::plain_report;

namespace {

verify::ClaimVerdict verdict_with(verify::Label label) {
    verify::ClaimVerdict v;
    v.label = label;
    return v;
}

PipelineConfig fallback_config() {
    PipelineConfig config;
    config.judge = "fallback";
    return config;
}

graph::ParagraphKG build_fixture_graph(const corpus::Corpus& corpus, embed::Provider& provider,
                                       const graph::Config& gconfig = {}) {
    std::vector<corpus::Report> clues;
    for (const auto& r : corpus.reports) clues.push_back(r);
    graph::ParagraphKG kg = graph::build_graph(clues, provider, gconfig);
    graph::attach_texts(kg, corpus);
    return kg;
}

} // namespace

TEST_CASE("aggregate_labels rule table") {
    using verify::Label;
    CHECK(verify::aggregate_labels({verdict_with(Label::Supported),
                                    verdict_with(Label::Supported)}) == Label::Supported);
    CHECK(verify::aggregate_labels({verdict_with(Label::Supported),
                                    verdict_with(Label::Refuted)}) == Label::Refuted);
    CHECK(verify::aggregate_labels({verdict_with(Label::Supported),
                                    verdict_with(Label::NotEnoughInfo)}) ==
          Label::NotEnoughInfo);
    CHECK(verify::aggregate_labels({verdict_with(Label::NotEnoughInfo)}) ==
          Label::NotEnoughInfo);
    CHECK(verify::aggregate_labels({verdict_with(Label::Refuted),
                                    verdict_with(Label::NotEnoughInfo)}) == Label::Refuted);

    try {
        verify::aggregate_labels({});
        FAIL("expected EmptyVerdictList");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyVerdictList);
    }
}

TEST_CASE("aggregation is order independent") {
    using verify::Label;
    std::vector<verify::ClaimVerdict> verdicts = {
        verdict_with(Label::Supported), verdict_with(Label::NotEnoughInfo),
        verdict_with(Label::Supported)};
    std::sort(verdicts.begin(), verdicts.end(),
              [](const auto& a, const auto& b) { return a.label < b.label; });
    Label reference = verify::aggregate_labels(verdicts);
    std::vector<size_t> order = {2, 0, 1};
    std::vector<verify::ClaimVerdict> shuffled;
    for (size_t i : order) shuffled.push_back(verdicts[i]);
    CHECK(verify::aggregate_labels(shuffled) == reference);
}

TEST_CASE("verify_claim offline judge") {
    embed::StubProvider provider;
    PipelineConfig config = fallback_config();
    extract::Claim claim;
    claim.id = "c0";
    claim.text = "APT34 uses malware droppers to infect banking systems";

    auto match_for = [&](const extract::Triple& t,
                         const std::vector<knowledge::FactTriple>& facts) {
        return knowledge::match_triples(t, facts, provider, config.k);
    };

    SUBCASE("empty match set is NotEnoughInfo without a judge call") {
        knowledge::MatchResult empty;
        empty.claim_triple = {"apt34", "uses", "malware droppers"};
        auto v = verify::verify_claim(claim, {empty}, nullptr, config);
        CHECK(v.label == verify::Label::NotEnoughInfo);
        CHECK(v.evidence.empty());
    }
    SUBCASE("exact fact support") {
        knowledge::FactTriple f{{"apt34", "uses", "malware droppers"}, "p#0", 0.9};
        auto v = verify::verify_claim(claim, {match_for({"apt34", "uses", "malware droppers"}, {f})},
                                      nullptr, config);
        CHECK(v.label == verify::Label::Supported);
        REQUIRE(!v.evidence.empty());
        CHECK(v.evidence[0].score == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("subject+predicate agreement with object disagreement refutes") {
        knowledge::FactTriple f{{"apt34", "uses", "phishing lures"}, "p#0", 0.9};
        auto v = verify::verify_claim(claim, {match_for({"apt34", "uses", "malware droppers"}, {f})},
                                      nullptr, config);
        CHECK(v.label == verify::Label::Refuted);
        CHECK(!v.evidence.empty());
    }
    SUBCASE("weak overlap is NotEnoughInfo") {
        knowledge::FactTriple f{{"lazarus group", "targets", "exchanges"}, "p#0", 0.9};
        auto v = verify::verify_claim(claim, {match_for({"apt34", "uses", "malware droppers"}, {f})},
                                      nullptr, config);
        CHECK(v.label == verify::Label::NotEnoughInfo);
    }
}

TEST_CASE("verify_claim llm judge") {
    embed::StubProvider provider;
    PipelineConfig config;  // judge auto -> llm when provided
    extract::Claim claim;
    claim.id = "c0";
    claim.text = "APT34 uses malware droppers";
    knowledge::FactTriple f{{"apt34", "uses", "malware droppers"}, "p#0", 0.9};
    auto matches = knowledge::match_triples({"apt34", "uses", "malware droppers"}, {f}, provider,
                                            config.k);

    SUBCASE("label passthrough") {
        verify::ClaimVerdict probe;
        probe.evidence = matches.matches;
        llm::ScriptedProvider llm;
        llm.add(verify::verdict_prompt(claim.text, probe.evidence),
                R"({"label":"refuted","rationale":"facts contradict"})");
        auto v = verify::verify_claim(claim, {matches}, &llm, config);
        CHECK(v.label == verify::Label::Refuted);
        CHECK(v.rationale == "facts contradict");
    }
    SUBCASE("malformed responses degrade to NotEnoughInfo after retries") {
        verify::ClaimVerdict probe;
        probe.evidence = matches.matches;
        llm::ScriptedProvider llm;
        llm.add(verify::verdict_prompt(claim.text, probe.evidence), "gibberish");
        auto v = verify::verify_claim(claim, {matches}, &llm, config);
        CHECK(v.label == verify::Label::NotEnoughInfo);
    }
}

TEST_CASE("worked example end-to-end: phishing supported, social engineering not") {
    auto fx = testsupport::worked_example();
    embed::StubProvider provider;
    graph::ParagraphKG kg = build_fixture_graph(fx.corpus, provider);

    PipelineConfig config = fallback_config();
    verify::Providers providers{&provider, &fx.transcript};
    verify::Assessment assessment =
        verify::assess_report(fx.pending, kg, fx.corpus, providers, config);

    REQUIRE(assessment.point_verdicts.size() == 3);
    const verify::PointVerdict& method = assessment.point_verdicts[1];
    CHECK(method.dimension == extract::Dimension::AttackMethod);
    REQUIRE(method.claim_verdicts.size() == 2);

    const verify::ClaimVerdict& social = method.claim_verdicts[0];
    const verify::ClaimVerdict& phishing = method.claim_verdicts[1];
    CHECK(social.claim_text == fx.social_claim);
    CHECK(phishing.claim_text == fx.phishing_claim);

    CHECK(phishing.label == verify::Label::Supported);
    CHECK(social.label != verify::Label::Supported);
    CHECK(method.label != verify::Label::Supported);
    CHECK(method.label == verify::Label::NotEnoughInfo);

    REQUIRE(!phishing.evidence.empty());
    CHECK(phishing.evidence[0].fact.triple ==
          extract::Triple{"phishing techniques", "aimed at", "stealing sensitive information"});

    CHECK(assessment.verification_score == 1);
    CHECK(assessment.total_claims == 4);
    CHECK_FALSE(assessment.verified);
}

TEST_CASE("gold fixture: hand-derived verdict tree") {
    auto fx = testsupport::gold_fixture();
    embed::StubProvider provider;
    graph::ParagraphKG kg = build_fixture_graph(fx.corpus, provider);

    PipelineConfig config = fallback_config();
    verify::Providers providers{&provider, &fx.transcript};
    verify::Assessment assessment =
        verify::assess_report(fx.pending, kg, fx.corpus, providers, config);

    REQUIRE(assessment.point_verdicts.size() == 3);
    CHECK(assessment.point_verdicts[0].label == verify::Label::Supported);
    CHECK(assessment.point_verdicts[1].label == verify::Label::Refuted);
    CHECK(assessment.point_verdicts[2].label == verify::Label::NotEnoughInfo);

    REQUIRE(assessment.point_verdicts[1].claim_verdicts.size() == 2);
    CHECK(assessment.point_verdicts[1].claim_verdicts[0].label == verify::Label::Refuted);
    CHECK(assessment.point_verdicts[1].claim_verdicts[1].label ==
          verify::Label::NotEnoughInfo);

    CHECK(assessment.verification_score == 1);
    CHECK(assessment.total_claims == 4);
    CHECK(assessment.credibility_score == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK_FALSE(assessment.verified);
}

TEST_CASE("gold fixture is byte-identical across runs and serial vs parallel") {
    embed::StubProvider provider;
    std::string first;
    for (int run = 0; run < 3; ++run) {
        auto fx = testsupport::gold_fixture();
        graph::ParagraphKG kg = build_fixture_graph(fx.corpus, provider);
        PipelineConfig config = fallback_config();
        config.parallel = (run == 2);
        verify::Providers providers{&provider, &fx.transcript};
        verify::Assessment assessment =
            verify::assess_report(fx.pending, kg, fx.corpus, providers, config);
        const std::string dumped = verify::to_json(assessment).dump(2);
        if (run == 0) first = dumped;
        else CHECK(dumped == first);
    }
    CHECK(!first.empty());
}

TEST_CASE("unknown organization: every point NotEnoughInfo, not verified") {
    auto fx = testsupport::gold_fixture();
    embed::StubProvider provider;
    graph::ParagraphKG kg = build_fixture_graph(fx.corpus, provider);

    // Pending report names an organization absent from every clue.
    corpus::Report pending = plain_report(
        "stranger", corpus::Role::Pending,
        {"Turla compromised diplomatic mail servers.",
         "Turla uses satellite links to exfiltrate data.",
         "The operation ran for 12 hours on 1 June 2022."});
    llm::ScriptedProvider transcript;
    const std::string text = pending.full_text();
    transcript.add(extract::entity_prompt(text), R"(["Turla"])");
    transcript.add(
        extract::key_point_prompt(text),
        nlohmann::json::array(
            {{{"dimension", "attack_source"},
              {"text", "Turla compromised diplomatic mail servers."}},
             {{"dimension", "attack_method"},
              {"text", "Turla uses satellite links to exfiltrate data."}},
             {{"dimension", "timeliness"},
              {"text", "The operation ran for 12 hours on 1 June 2022."}}})
            .dump());
    transcript.add(extract::claim_prompt("Turla compromised diplomatic mail servers."),
                   R"(["Turla compromised diplomatic mail servers"])");
    transcript.add(extract::claim_prompt("Turla uses satellite links to exfiltrate data."),
                   R"(["Turla uses satellite links to exfiltrate data"])");
    transcript.add(extract::claim_prompt("The operation ran for 12 hours on 1 June 2022."),
                   R"(["The operation ran for 12 hours on 1 June 2022"])");
    transcript.add(extract::triple_prompt("Turla compromised diplomatic mail servers"),
                   R"([["turla","compromised","diplomatic mail servers"]])");
    transcript.add(extract::triple_prompt("Turla uses satellite links to exfiltrate data"),
                   R"([["turla","uses","satellite links"]])");
    transcript.add(extract::triple_prompt("The operation ran for 12 hours on 1 June 2022"),
                   R"([["the operation","ran for","12 hours"]])");

    PipelineConfig config = fallback_config();
    verify::Providers providers{&provider, &transcript};
    verify::Assessment assessment =
        verify::assess_report(pending, kg, fx.corpus, providers, config);

    CHECK_FALSE(assessment.verified);
    REQUIRE(assessment.point_verdicts.size() == 3);
    for (const auto& pv : assessment.point_verdicts) {
        CHECK(pv.label == verify::Label::NotEnoughInfo);
        for (const auto& cv : pv.claim_verdicts) {
            CHECK(cv.label == verify::Label::NotEnoughInfo);
            CHECK(cv.evidence.empty());
        }
    }
}

TEST_CASE("all claims matching exact facts reach the upper bound") {
    embed::StubProvider provider;
    corpus::Corpus corpus;
    corpus.reports.push_back(plain_report("c", corpus::Role::Clue,
                                          {"APT34 uses custom droppers.",
                                           "APT34 targeted regional banks."}));
    graph::ParagraphKG kg = build_fixture_graph(corpus, provider);

    corpus::Report pending =
        plain_report("p", corpus::Role::Pending,
                     {"APT34 uses custom droppers.", "APT34 targeted regional banks.",
                      "Activity spanned 6 hours on 2 May 2023."});
    llm::ScriptedProvider transcript;
    const std::string text = pending.full_text();
    transcript.add(extract::entity_prompt(text), R"(["APT34"])");
    transcript.add(
        extract::key_point_prompt(text),
        nlohmann::json::array(
            {{{"dimension", "attack_source"}, {"text", "APT34 targeted regional banks."}},
             {{"dimension", "attack_method"}, {"text", "APT34 uses custom droppers."}},
             {{"dimension", "timeliness"},
              {"text", "Activity spanned 6 hours on 2 May 2023."}}})
            .dump());
    transcript.add(extract::claim_prompt("APT34 targeted regional banks."),
                   R"(["APT34 targeted regional banks"])");
    transcript.add(extract::claim_prompt("APT34 uses custom droppers."),
                   R"(["APT34 uses custom droppers"])");
    transcript.add(extract::claim_prompt("Activity spanned 6 hours on 2 May 2023."),
                   R"(["APT34 targeted regional banks"])");  // reuse a verifiable claim
    transcript.add(extract::triple_prompt("APT34 targeted regional banks"),
                   R"([["apt34","targeted","regional banks"]])");
    transcript.add(extract::triple_prompt("APT34 uses custom droppers"),
                   R"([["apt34","uses","custom droppers"]])");
    transcript.add(knowledge::fact_prompt("APT34 uses custom droppers."),
                   R"([["apt34","uses","custom droppers"]])");
    transcript.add(knowledge::fact_prompt("APT34 targeted regional banks."),
                   R"([["apt34","targeted","regional banks"]])");

    PipelineConfig config = fallback_config();
    verify::Providers providers{&provider, &transcript};
    verify::Assessment assessment =
        verify::assess_report(pending, kg, corpus, providers, config);

    CHECK(assessment.verification_score == assessment.total_claims);
    CHECK(assessment.credibility_score == doctest::Approx(1.0));
    CHECK(assessment.verified);
}

TEST_CASE("without-KG mode still returns a complete assessment") {
    auto fx = testsupport::gold_fixture();
    embed::StubProvider provider;
    graph::ParagraphKG kg;  // never consulted

    PipelineConfig config = fallback_config();
    config.use_kg = false;
    verify::Providers providers{&provider, &fx.transcript};
    verify::Assessment assessment =
        verify::assess_report(fx.pending, kg, fx.corpus, providers, config);
    REQUIRE(assessment.point_verdicts.size() == 3);
    for (const auto& pv : assessment.point_verdicts) {
        CHECK(pv.label == verify::Label::NotEnoughInfo);  // offline judge has no facts
    }
    CHECK(assessment.total_claims == 4);
}

TEST_CASE("stage tags: key point failures carry stage 1") {
    embed::StubProvider provider;
    corpus::Corpus corpus;
    corpus.reports.push_back(plain_report("c", corpus::Role::Clue, {"APT34 background."}));
    graph::ParagraphKG kg = build_fixture_graph(corpus, provider);

    corpus::Report pending = plain_report("p", corpus::Role::Pending, {"APT34 notes."});
    llm::ScriptedProvider transcript;
    transcript.add(extract::entity_prompt(pending.full_text()), R"(["APT34"])");
    transcript.add(knowledge::fact_prompt("APT34 background."), "[]");
    transcript.add(extract::key_point_prompt(pending.full_text()), "not json");

    PipelineConfig config = fallback_config();
    verify::Providers providers{&provider, &transcript};
    try {
        verify::assess_report(pending, kg, corpus, providers, config);
        FAIL("expected MalformedLlmOutput");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedLlmOutput);
        REQUIRE(e.stage().has_value());
        CHECK(*e.stage() == Stage::KeyPointExtraction);
    }
}

TEST_CASE("stage tags: claim and triple failures carry stages 2 and 3") {
    embed::StubProvider provider;
    corpus::Corpus corpus;
    corpus.reports.push_back(plain_report("c", corpus::Role::Clue, {"APT34 background."}));
    graph::ParagraphKG kg = build_fixture_graph(corpus, provider);

    corpus::Report pending = plain_report(
        "p", corpus::Role::Pending,
        {"APT34 struck overnight.", "APT34 uses droppers to spread.",
         "It took 3 hours on 1 May 2023."});
    const std::string text = pending.full_text();
    nlohmann::json points = nlohmann::json::array(
        {{{"dimension", "attack_source"}, {"text", "APT34 struck overnight."}},
         {{"dimension", "attack_method"}, {"text", "APT34 uses droppers to spread."}},
         {{"dimension", "timeliness"}, {"text", "The attack took 3 hours on 1 May 2023."}}});

    PipelineConfig config = fallback_config();
    config.parallel = false;

    SUBCASE("claim extraction failure tags stage 2") {
        llm::ScriptedProvider transcript;
        transcript.add(extract::entity_prompt(text), R"(["APT34"])");
        transcript.add(knowledge::fact_prompt("APT34 background."), "[]");
        transcript.add(extract::key_point_prompt(text), points.dump());
        transcript.add(extract::claim_prompt("APT34 struck overnight."), "no json here");
        verify::Providers providers{&provider, &transcript};
        try {
            verify::assess_report(pending, kg, corpus, providers, config);
            FAIL("expected MalformedLlmOutput");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MalformedLlmOutput);
            REQUIRE(e.stage().has_value());
            CHECK(*e.stage() == Stage::ClaimExtraction);
        }
    }

    SUBCASE("triple extraction failure tags stage 3") {
        llm::ScriptedProvider transcript;
        transcript.add(extract::entity_prompt(text), R"(["APT34"])");
        transcript.add(knowledge::fact_prompt("APT34 background."), "[]");
        transcript.add(extract::key_point_prompt(text), points.dump());
        transcript.add(extract::claim_prompt("APT34 struck overnight."),
                       R"(["APT34 struck overnight"])");
        transcript.add(extract::triple_prompt("APT34 struck overnight"), "[]");  // empty: malformed
        verify::Providers providers{&provider, &transcript};
        try {
            verify::assess_report(pending, kg, corpus, providers, config);
            FAIL("expected MalformedLlmOutput");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MalformedLlmOutput);
            REQUIRE(e.stage().has_value());
            CHECK(*e.stage() == Stage::TripleRetrieval);
        }
    }
}

TEST_CASE("assessment json carries the documented shape") {
    auto fx = testsupport::gold_fixture();
    embed::StubProvider provider;
    graph::ParagraphKG kg = build_fixture_graph(fx.corpus, provider);
    PipelineConfig config = fallback_config();
    verify::Providers providers{&provider, &fx.transcript};
    nlohmann::json j =
        verify::to_json(verify::assess_report(fx.pending, kg, fx.corpus, providers, config));

    CHECK(j.contains("report_id"));
    CHECK(j.contains("verified"));
    CHECK(j.contains("credibility_score"));
    CHECK(j.contains("verification_score"));
    REQUIRE(j.contains("points"));
    const auto& p0 = j["points"][0];
    CHECK(p0.contains("dimension"));
    CHECK(p0.contains("label"));
    REQUIRE(p0.contains("claims"));
    const auto& c0 = p0["claims"][0];
    CHECK(c0.contains("text"));
    CHECK(c0.contains("label"));
    REQUIRE(c0.contains("evidence"));
    REQUIRE(!c0["evidence"].empty());
    CHECK(c0["evidence"][0].contains("triple"));
    CHECK(c0["evidence"][0].contains("source_paragraph"));
    CHECK(c0["evidence"][0].contains("score"));
}
