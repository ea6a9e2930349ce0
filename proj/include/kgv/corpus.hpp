#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace kgv::corpus {

enum class Role { Clue, Pending };

const char* to_string(Role role);
Role role_from_string(std::string_view s);

struct Paragraph {
    std::string id;        // "<report_id>#<ordinal>"
    std::string report_id;
    int ordinal = 0;
    std::string text;
    std::vector<std::string> tokens;  // deterministic output of preprocess(text)
};

struct ReportMeta {
    std::string id;
    std::string source_uri;
    Role role = Role::Clue;
    std::string title;
};

struct Report {
    std::string id;
    std::string source_uri;
    Role role = Role::Clue;
    std::string title;
    std::vector<Paragraph> paragraphs;  // ordinals contiguous 0..M-1

    std::string full_text() const;
};

// Token pipeline assets are frozen constants; bumping a version string is the
// only sanctioned way to change token streams.
extern const char* const kStopListVersion;
extern const char* const kStemmerVersion;

bool is_stop_word(std::string_view word);

// Fixpoint suffix stripper: repeatedly removes inflectional endings
// (s/es/ies, ing, ed, er, ly) until no rule applies. Running it on its own
// output is the identity.
std::string stem(std::string_view word);

// lowercase -> split on non-alphanumeric -> drop stop words -> stem
std::vector<std::string> preprocess(std::string_view text);

// Blank-line separated blocks, trimmed, empties dropped. Blocks longer than
// max_paragraph_chars are re-split at sentence boundaries.
std::vector<std::string> chunk(std::string_view raw, std::size_t max_paragraph_chars = 2000);

Report ingest_plain_text(std::string_view raw, const ReportMeta& meta,
                         std::size_t max_paragraph_chars = 2000);

// STIX 2.1 bundle: every object's `description` contributes paragraphs in
// objects-array order; the report id is the bundle id.
Report ingest_stix(const nlohmann::json& bundle, Role role, std::string source_uri = {},
                   std::size_t max_paragraph_chars = 2000);

struct Corpus {
    std::vector<Report> reports;

    const Report* find_report(std::string_view report_id) const;
    const Paragraph* find_paragraph(std::string_view paragraph_id) const;
    std::size_t total_paragraphs() const;
    std::vector<const Report*> by_role(Role role) const;
};

nlohmann::json to_json(const Corpus& corpus);
Corpus corpus_from_json(const nlohmann::json& j);

// Directory layout: <name>.txt with <name>.meta.json sidecar
// ({id, role, title, source_uri}), or <name>.stix.json STIX bundles
// (role from optional sidecar, default clue).
Corpus load_corpus_dir(const std::string& dir, std::size_t max_paragraph_chars = 2000);

Corpus load_corpus_file(const std::string& path);
void save_corpus_file(const Corpus& corpus, const std::string& path);

} // namespace kgv::corpus
