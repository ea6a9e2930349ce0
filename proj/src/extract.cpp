#include "kgv/extract.hpp"

#include "kgv/errors.hpp"
#include "kgv/util.hpp"

#include <algorithm>
#include <cstring>
#include <regex>
#include <set>

namespace kgv::extract {

const char* to_string(Dimension d) {
    switch (d) {
        case Dimension::AttackSource: return "attack_source";
        case Dimension::AttackMethod: return "attack_method";
        case Dimension::Timeliness: return "timeliness";
    }
    return "unknown";
}

Dimension dimension_from_string(std::string_view s) {
    if (s == "attack_source") return Dimension::AttackSource;
    if (s == "attack_method") return Dimension::AttackMethod;
    if (s == "timeliness") return Dimension::Timeliness;
    throw Error(ErrorCode::MalformedLlmOutput, "unknown dimension '" + std::string(s) + "'");
}

bool Triple::operator<(const Triple& other) const {
    return std::tie(subject, predicate, object) <
           std::tie(other.subject, other.predicate, other.object);
}

namespace {

// The six extraction rules sent to the model. The validator mirrors them
// one-for-one, so treat this text as frozen.
const char* const kKeyPointRules =
    "(1) No less than three key points should be extracted. "
    "(2) At a minimum, it should include the name of the event mentioned and the relevant "
    "claim of the organizer of the event, which should not be overlooked. "
    "(3) At least one point contains the attack pattern of the event in question. If there is "
    "a subject pronoun in the description, replace it with the name of the attacking "
    "organization of the incident. "
    "(4) At least one point contains the time (in hours) at which the above event occurred. "
    "(5) Please answer along with the description in the original text, and do not change the "
    "original meaning or ignore the information. "
    "(6) Do not use the words \"The document\", \"The report\", etc.";

const char* const kKeyPointJsonInstruction =
    "Respond with a JSON array of objects, each {\"dimension\": "
    "\"attack_source\"|\"attack_method\"|\"timeliness\", \"text\": \"...\"}, and nothing else.";

} // namespace

std::string key_point_prompt(const std::string& report_text) {
    return std::string(
               "You are an advanced cybersecurity analysis tool that specializes in extracting "
               "important claims from CTI. Your task is to identify and extract key claims in "
               "the CTI report, but be aware of the following rules during the extraction "
               "process: ") +
           kKeyPointRules + "\n" + kKeyPointJsonInstruction + "\n\nCTI report:\n" + report_text;
}

std::string key_point_retry_prompt(const std::string& report_text,
                                   const std::vector<int>& failed_rules) {
    std::string rules;
    for (size_t i = 0; i < failed_rules.size(); ++i) {
        if (i) rules += ", ";
        rules += std::to_string(failed_rules[i]);
    }
    return key_point_prompt(report_text) +
           "\n\nYour previous response violated rule(s): " + rules +
           ". Produce a corrected response that observes every rule.";
}

std::string claim_prompt(const std::string& point_text) {
    return "Decompose the following key point from a CTI report into the distinct factual "
           "claims it contains. Every claim must be a single verifiable proposition and must "
           "name the attacking organization explicitly instead of using pronouns. Respond "
           "with a JSON array of claim strings and nothing else.\n\nKey point:\n" +
           point_text;
}

std::string triple_prompt(const std::string& claim_text) {
    return "Extract the entity tuples asserted by the following claim. Respond with a JSON "
           "array of [subject, predicate, object] string triples and nothing else.\n\n"
           "Claim:\n" +
           claim_text;
}

std::string entity_prompt(const std::string& report_text) {
    return "List the attack organizations (APT groups) that the following CTI report "
           "attributes the described activity to. Respond with a JSON array of organization "
           "names and nothing else.\n\nCTI report:\n" +
           report_text;
}

namespace {

bool has_temporal_expression(const std::string& text, bool hour_granularity) {
    static const std::regex clock(R"(\b\d{1,2}:\d{2}\b)");
    static const std::regex hours(R"(\b\d+\s*(hour|hours)\b)", std::regex::icase);
    if (std::regex_search(text, clock) || std::regex_search(text, hours)) return true;
    if (hour_granularity) return false;
    static const std::regex year(R"(\b(19|20)\d{2}\b)");
    static const std::regex month(
        R"(\b(january|february|march|april|may|june|july|august|september|october|november|december)\b)",
        std::regex::icase);
    static const std::regex daypart(R"(\b\d{1,2}\s*(am|pm)\b)", std::regex::icase);
    return std::regex_search(text, year) || std::regex_search(text, month) ||
           std::regex_search(text, daypart);
}

bool has_subject_pronoun(const std::string& text) {
    static const char* const pronouns[] = {"he", "she", "it", "they"};
    for (const char* p : pronouns) {
        if (util::contains_word_ci(text, p)) return true;
    }
    return false;
}

bool mentions_organization(const std::string& text, const graph::AliasTable& aliases) {
    for (const auto& [canonical, cluster] : aliases.clusters()) {
        if (util::contains_word_ci(text, canonical)) return true;
        for (const auto& alias : cluster) {
            if (util::contains_word_ci(text, alias)) return true;
        }
    }
    return false;
}

double report_overlap(const std::string& point_text, const std::set<std::string>& report_tokens) {
    std::vector<std::string> tokens = corpus::preprocess(point_text);
    if (tokens.empty()) return 0.0;
    size_t hits = 0;
    for (const auto& t : tokens) {
        if (report_tokens.count(t)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(tokens.size());
}

} // namespace

std::vector<int> validate_key_points(const std::vector<KeyPoint>& points,
                                     const std::string& report_text,
                                     const graph::AliasTable& aliases, const Options& opts) {
    std::vector<int> failed;

    if (points.size() < 3) failed.push_back(1);

    bool source_with_org = false;
    bool method_present = false;
    bool pronoun_found = false;
    bool time_present = false;
    for (const auto& p : points) {
        if (p.dimension == Dimension::AttackSource && mentions_organization(p.text, aliases)) {
            source_with_org = true;
        }
        if (p.dimension == Dimension::AttackMethod) method_present = true;
        if (has_subject_pronoun(p.text)) pronoun_found = true;
        if (p.dimension == Dimension::Timeliness &&
            has_temporal_expression(p.text, opts.enforce_hour_granularity)) {
            time_present = true;
        }
    }
    if (!source_with_org) failed.push_back(2);
    if (!method_present || pronoun_found) failed.push_back(3);
    if (!time_present) failed.push_back(4);

    std::set<std::string> report_tokens;
    for (const auto& t : corpus::preprocess(report_text)) report_tokens.insert(t);
    bool grounded = !points.empty();
    for (const auto& p : points) {
        if (report_overlap(p.text, report_tokens) < 0.5) grounded = false;
    }
    if (!grounded) failed.push_back(5);

    for (const auto& p : points) {
        if (util::contains_ci(p.text, "the document") || util::contains_ci(p.text, "the report")) {
            failed.push_back(6);
            break;
        }
    }
    return failed;
}

namespace {

std::string strip_code_fence(const std::string& text) {
    std::string t = util::trim(text);
    if (t.rfind("```", 0) == 0) {
        if (auto nl = t.find('\n'); nl != std::string::npos) t = t.substr(nl + 1);
        if (auto fence = t.rfind("```"); fence != std::string::npos) t = t.substr(0, fence);
    }
    return util::trim(t);
}

nlohmann::json parse_llm_json(const std::string& response, const char* what) {
    try {
        return nlohmann::json::parse(strip_code_fence(response));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedLlmOutput,
                    std::string(what) + " response is not valid JSON: " + e.what());
    }
}

std::vector<KeyPoint> parse_key_points(const std::string& response, const std::string& report_id) {
    nlohmann::json j = parse_llm_json(response, "key point");
    if (!j.is_array()) {
        throw Error(ErrorCode::MalformedLlmOutput, "key point response must be a JSON array");
    }
    std::vector<KeyPoint> points;
    int index = 0;
    for (const auto& item : j) {
        if (!item.is_object() || !item.contains("dimension") || !item.contains("text")) {
            throw Error(ErrorCode::MalformedLlmOutput,
                        "key point entries need {dimension, text}");
        }
        KeyPoint p;
        p.report_id = report_id;
        p.id = report_id + "/p" + std::to_string(index++);
        p.dimension = dimension_from_string(item["dimension"].get<std::string>());
        p.text = util::trim(item["text"].get<std::string>());
        if (p.text.empty()) {
            throw Error(ErrorCode::MalformedLlmOutput, "key point text is empty");
        }
        points.push_back(std::move(p));
    }
    return points;
}

// Label sanity check: points that look temporal should be labeled so; the
// model's label wins, mismatches are only logged.
void warn_on_dimension_mismatch(const std::vector<KeyPoint>& points) {
    for (const auto& p : points) {
        if (p.dimension != Dimension::Timeliness && has_temporal_expression(p.text, false) &&
            p.text.size() < 80) {
            util::log_warn("point '" + p.id + "' carries a time expression but is labeled " +
                           to_string(p.dimension));
        }
    }
}

std::vector<std::string> heuristic_method_verbs() {
    return {"uses",      "used",     "deploys",  "deployed", "exploits", "exploited",
            "attacks",   "attacked", "targets",  "targeted", "phishing", "spearphishing",
            "malware",   "ransomware", "backdoor", "dropper", "compromised", "lure"};
}

// Offline key points: pick sentences that cover the three dimensions,
// replacing leading subject pronouns with the organization name.
std::vector<KeyPoint> heuristic_key_points(const corpus::Report& report,
                                           const graph::AliasTable& aliases) {
    const std::string text = report.full_text();
    std::vector<std::string> sentences = util::split_sentences(text);

    std::string org;
    for (const auto& [canonical, cluster] : aliases.clusters()) {
        if (util::contains_word_ci(text, canonical)) {
            org = canonical;
            break;
        }
        for (const auto& alias : cluster) {
            if (util::contains_word_ci(text, alias)) {
                org = canonical;
                break;
            }
        }
        if (!org.empty()) break;
    }

    auto depronoun = [&](std::string s) {
        if (org.empty()) return s;
        for (const char* pronoun : {"It", "They", "it", "they"}) {
            const std::string prefix = std::string(pronoun) + " ";
            if (s.rfind(prefix, 0) == 0) {
                s = org + s.substr(std::string(pronoun).size());
                break;
            }
        }
        return s;
    };

    std::vector<KeyPoint> points;
    int index = 0;
    auto push = [&](Dimension d, const std::string& s) {
        KeyPoint p;
        p.report_id = report.id;
        p.id = report.id + "/p" + std::to_string(index++);
        p.dimension = d;
        p.text = s;
        points.push_back(std::move(p));
    };

    const std::vector<std::string> verbs = heuristic_method_verbs();
    std::set<size_t> used;
    if (!org.empty()) {
        const std::vector<std::string> probes = aliases.expand(org);
        for (size_t i = 0; i < sentences.size(); ++i) {
            bool hit = std::any_of(probes.begin(), probes.end(), [&](const std::string& a) {
                return util::contains_word_ci(sentences[i], a);
            });
            if (hit) {
                push(Dimension::AttackSource, depronoun(sentences[i]));
                used.insert(i);
                break;
            }
        }
    }
    for (size_t i = 0; i < sentences.size(); ++i) {
        if (used.count(i)) continue;
        bool methodish = std::any_of(verbs.begin(), verbs.end(), [&](const std::string& v) {
            return util::contains_word_ci(sentences[i], v);
        });
        if (methodish) {
            push(Dimension::AttackMethod, depronoun(sentences[i]));
            used.insert(i);
            break;
        }
    }
    for (size_t i = 0; i < sentences.size(); ++i) {
        if (used.count(i)) continue;
        if (has_temporal_expression(sentences[i], false)) {
            push(Dimension::Timeliness, depronoun(sentences[i]));
            used.insert(i);
            break;
        }
    }
    return points;
}

} // namespace

std::vector<KeyPoint> extract_key_points(const corpus::Report& report, llm::Provider* llm,
                                         const graph::AliasTable& aliases, const Options& opts) {
    if (report.role != corpus::Role::Pending) {
        throw Error(ErrorCode::Precondition, "key points are extracted from pending reports only");
    }
    const std::string text = report.full_text();

    if (llm == nullptr) {
        std::vector<KeyPoint> points = heuristic_key_points(report, aliases);
        std::vector<int> failed = validate_key_points(points, text, aliases, opts);
        if (!failed.empty()) {
            throw Error(ErrorCode::ConstraintViolation,
                        "offline key point extraction cannot satisfy the extraction rules")
                .with_rules(failed);
        }
        return points;
    }

    std::vector<int> failed;
    for (int attempt = 0; attempt <= opts.retries; ++attempt) {
        const std::string prompt = attempt == 0 ? key_point_prompt(text)
                                                : key_point_retry_prompt(text, failed);
        std::vector<KeyPoint> points = parse_key_points(llm->complete(prompt, 1024), report.id);
        failed = validate_key_points(points, text, aliases, opts);
        if (failed.empty()) {
            warn_on_dimension_mismatch(points);
            return points;
        }
    }
    throw Error(ErrorCode::ConstraintViolation,
                "key point response still violates extraction rules after " +
                    std::to_string(opts.retries) + " retries")
        .with_rules(failed);
}

std::vector<std::string> extract_entities(const corpus::Report& report, llm::Provider* llm,
                                          const graph::AliasTable& aliases) {
    if (report.role != corpus::Role::Pending) {
        throw Error(ErrorCode::Precondition, "entities are extracted from the pending report");
    }
    std::vector<std::string> entities;
    std::set<std::string> seen;
    auto add = [&](const std::string& raw) {
        const std::string canon = aliases.normalize(raw);
        if (!canon.empty() && seen.insert(canon).second) entities.push_back(canon);
    };

    if (llm != nullptr) {
        nlohmann::json j = parse_llm_json(llm->complete(entity_prompt(report.full_text()), 256),
                                          "entity");
        if (!j.is_array()) {
            throw Error(ErrorCode::MalformedLlmOutput, "entity response must be a JSON array");
        }
        for (const auto& item : j) {
            if (!item.is_string()) {
                throw Error(ErrorCode::MalformedLlmOutput, "entity entries must be strings");
            }
            add(item.get<std::string>());
        }
    } else {
        const std::string text = report.full_text();
        for (const auto& [canonical, cluster] : aliases.clusters()) {
            if (util::contains_word_ci(text, canonical)) {
                add(canonical);
                continue;
            }
            for (const auto& alias : cluster) {
                if (util::contains_word_ci(text, alias)) {
                    add(canonical);
                    break;
                }
            }
        }
    }
    if (entities.empty()) {
        throw Error(ErrorCode::NoEntitiesFound,
                    "report '" + report.id + "' names no known attack organization");
    }
    return entities;
}

std::vector<Claim> extract_claims(const KeyPoint& point, llm::Provider* llm) {
    if (util::trim(point.text).empty()) {
        throw Error(ErrorCode::Precondition, "key point text is empty");
    }
    std::vector<Claim> claims;
    int index = 0;
    auto push = [&](const std::string& text) {
        const std::string t = util::trim(text);
        if (t.empty()) return;
        Claim c;
        c.point_id = point.id;
        c.id = point.id + "/c" + std::to_string(index++);
        c.text = t;
        claims.push_back(std::move(c));
    };

    if (llm != nullptr) {
        nlohmann::json j = parse_llm_json(llm->complete(claim_prompt(point.text), 512), "claim");
        if (!j.is_array()) {
            throw Error(ErrorCode::MalformedLlmOutput, "claim response must be a JSON array");
        }
        for (const auto& item : j) {
            if (!item.is_string()) {
                throw Error(ErrorCode::MalformedLlmOutput, "claim entries must be strings");
            }
            push(item.get<std::string>());
        }
        if (claims.empty()) {
            throw Error(ErrorCode::MalformedLlmOutput, "claim response decomposed to nothing");
        }
        return claims;
    }

    // Offline: semicolons separate independent propositions.
    for (auto& piece : util::split_list(point.text, ';')) {
        if (piece.rfind("and ", 0) == 0) piece = piece.substr(4);
        push(piece);
    }
    if (claims.empty()) push(point.text);
    return claims;
}

std::string gerundize(std::string_view verb) {
    std::string v(verb);
    if (v.size() > 4 && v.substr(v.size() - 3) == "ing") return v;
    if (v.size() > 2 && v.back() == 'e' && v[v.size() - 2] != 'e') {
        v.pop_back();
        return v + "ing";
    }
    auto is_vowel = [](char c) {
        return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
    };
    if (v.size() == 3 && !is_vowel(v[0]) && is_vowel(v[1]) && !is_vowel(v[2]) &&
        v[2] != 'w' && v[2] != 'x' && v[2] != 'y') {
        v.push_back(v.back());
    }
    return v + "ing";
}

namespace {

std::string tidy_slot(std::string_view raw) {
    std::string s = util::trim(raw);
    while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ';')) s.pop_back();
    return util::lower(util::trim(s));
}

} // namespace

std::vector<std::pair<Triple, double>> fallback_sentence_triples(const std::string& sentence) {
    std::vector<std::pair<Triple, double>> out;
    const std::string lower = util::lower(util::trim(sentence));
    if (lower.empty()) return out;

    auto emit = [&](std::string_view s, std::string_view p, std::string_view o, double conf) {
        Triple t{tidy_slot(s), std::string(p), tidy_slot(o)};
        if (!t.subject.empty() && !t.predicate.empty() && !t.object.empty()) {
            out.emplace_back(std::move(t), conf);
        }
    };

    for (const char* verb : {" uses ", " used ", " use "}) {
        auto pos = lower.find(verb);
        if (pos == std::string::npos || pos == 0) continue;
        const std::string subject = lower.substr(0, pos);
        const std::string rest = lower.substr(pos + std::strlen(verb));
        auto to_pos = rest.find(" to ");
        if (to_pos != std::string::npos) {
            const std::string object = rest.substr(0, to_pos);
            std::string purpose = tidy_slot(rest.substr(to_pos + 4));
            if (auto space = purpose.find(' '); space != std::string::npos) {
                purpose = gerundize(purpose.substr(0, space)) + purpose.substr(space);
            } else if (!purpose.empty()) {
                purpose = gerundize(purpose);
            }
            emit(subject, "uses", object, 0.9);
            emit(object, "aimed at", purpose, 0.9);
        } else {
            emit(subject, "uses", rest, 0.8);
        }
        return out;
    }

    for (const char* copula : {" are aimed at ", " is aimed at ", " aims at ", " aim at "}) {
        auto pos = lower.find(copula);
        if (pos == std::string::npos || pos == 0) continue;
        emit(lower.substr(0, pos), "aimed at", lower.substr(pos + std::strlen(copula)), 0.9);
        return out;
    }

    static const char* const verbs[] = {"operates from", "attacked", "attacks", "targeted",
                                        "targets",       "compromised", "compromises",
                                        "breached",      "exploited",   "exploits",
                                        "deployed",      "deploys",     "stole", "steals"};
    for (const char* verb : verbs) {
        const std::string needle = std::string(" ") + verb + " ";
        auto pos = lower.find(needle);
        if (pos == std::string::npos || pos == 0) continue;
        emit(lower.substr(0, pos), verb, lower.substr(pos + needle.size()), 0.6);
        return out;
    }
    return out;
}

std::vector<Triple> extract_claim_triples(const Claim& claim, llm::Provider* llm) {
    if (util::trim(claim.text).empty()) {
        throw Error(ErrorCode::Precondition, "claim text is empty");
    }

    if (llm != nullptr) {
        nlohmann::json j = parse_llm_json(llm->complete(triple_prompt(claim.text), 512), "triple");
        if (!j.is_array() || j.empty()) {
            throw Error(ErrorCode::MalformedLlmOutput,
                        "triple response must be a non-empty JSON array");
        }
        std::vector<Triple> triples;
        for (const auto& item : j) {
            Triple t;
            if (item.is_array() && item.size() == 3) {
                t.subject = tidy_slot(item[0].get<std::string>());
                t.predicate = tidy_slot(item[1].get<std::string>());
                t.object = tidy_slot(item[2].get<std::string>());
            } else if (item.is_object()) {
                t.subject = tidy_slot(item.value("subject", ""));
                t.predicate = tidy_slot(item.value("predicate", ""));
                t.object = tidy_slot(item.value("object", ""));
            } else {
                throw Error(ErrorCode::MalformedLlmOutput,
                            "triples must be [s,p,o] arrays or objects");
            }
            if (t.subject.empty() || t.predicate.empty() || t.object.empty()) {
                throw Error(ErrorCode::MalformedLlmOutput, "triple has an empty slot");
            }
            triples.push_back(std::move(t));
        }
        return triples;
    }

    std::vector<Triple> triples;
    for (const auto& [t, conf] : fallback_sentence_triples(claim.text)) {
        (void)conf;
        triples.push_back(t);
    }
    if (triples.empty()) {
        throw Error(ErrorCode::UnparsableClaim,
                    "no fallback pattern matches claim '" + claim.text + "'");
    }
    return triples;
}

} // namespace kgv::extract
