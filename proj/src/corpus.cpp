#include "kgv/corpus.hpp"

#include "kgv/errors.hpp"
#include "kgv/util.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace kgv::corpus {

const char* const kStopListVersion = "stop-en-1";
const char* const kStemmerVersion = "stem-en-1";

const char* to_string(Role role) {
    return role == Role::Clue ? "clue" : "pending";
}

Role role_from_string(std::string_view s) {
    std::string v = util::lower(s);
    if (v == "clue") return Role::Clue;
    if (v == "pending") return Role::Pending;
    throw Error(ErrorCode::ConfigError, "unknown role '" + std::string(s) + "'");
}

std::string Report::full_text() const {
    std::string out;
    for (const auto& p : paragraphs) {
        if (!out.empty()) out += "\n\n";
        out += p.text;
    }
    return out;
}

namespace {

const std::set<std::string>& stop_words() {
    static const std::set<std::string> words = {
        "a",       "about",   "above",    "after",   "again",      "against", "all",
        "am",      "an",      "and",      "any",     "are",        "as",      "at",
        "be",      "because", "been",     "before",  "being",      "below",   "between",
        "both",    "but",     "by",       "can",     "cannot",     "could",   "did",
        "do",      "does",    "doing",    "down",    "during",     "each",    "few",
        "for",     "from",    "further",  "had",     "has",        "have",    "having",
        "he",      "her",     "here",     "hers",    "herself",    "him",     "himself",
        "his",     "how",     "i",        "if",      "in",         "into",    "is",
        "it",      "its",     "itself",   "just",    "me",         "more",    "most",
        "my",      "myself",  "no",       "nor",     "not",        "now",     "of",
        "off",     "on",      "once",     "only",    "or",         "other",   "our",
        "ours",    "out",     "over",     "own",     "same",       "she",     "should",
        "so",      "some",    "such",     "than",    "that",       "the",     "their",
        "theirs",  "them",    "themselves", "then",  "there",      "these",   "they",
        "this",    "those",   "through",  "to",      "too",        "under",   "until",
        "up",      "very",    "was",      "we",      "were",       "what",    "when",
        "where",   "which",   "while",    "who",     "whom",       "why",     "will",
        "with",    "would",   "you",      "your",    "yours",      "yourself",
        "yourselves",
    };
    return words;
}

bool is_vowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

bool has_vowel(std::string_view s) {
    return std::any_of(s.begin(), s.end(), is_vowel);
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Drop one of a doubled final consonant, except l/s/z.
void undouble(std::string& s) {
    if (s.size() < 2) return;
    char a = s[s.size() - 2];
    char b = s[s.size() - 1];
    if (a == b && !is_vowel(b) && b != 'l' && b != 's' && b != 'z') s.pop_back();
}

// One rewrite pass; returns false when no rule matched.
bool stem_step(std::string& w) {
    if (ends_with(w, "sses") && w.size() >= 5) {
        w.resize(w.size() - 2);
        return true;
    }
    if (ends_with(w, "ies") && w.size() >= 5) {
        w.resize(w.size() - 3);
        w.push_back('y');
        return true;
    }
    if (ends_with(w, "s") && !ends_with(w, "ss") && w.size() >= 4) {
        w.pop_back();
        return true;
    }
    if (ends_with(w, "ing") && w.size() >= 6 && has_vowel(std::string_view(w).substr(0, w.size() - 3))) {
        w.resize(w.size() - 3);
        undouble(w);
        return true;
    }
    if (ends_with(w, "ed") && w.size() >= 5 && has_vowel(std::string_view(w).substr(0, w.size() - 2))) {
        w.resize(w.size() - 2);
        undouble(w);
        return true;
    }
    if (ends_with(w, "er") && w.size() >= 6) {
        w.resize(w.size() - 2);
        undouble(w);
        return true;
    }
    if (ends_with(w, "ly") && w.size() >= 5) {
        w.resize(w.size() - 2);
        return true;
    }
    return false;
}

} // namespace

bool is_stop_word(std::string_view word) {
    return stop_words().count(std::string(word)) > 0;
}

std::string stem(std::string_view word) {
    std::string w(word);
    while (stem_step(w)) {
    }
    return w;
}

std::vector<std::string> preprocess(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&]() {
        if (current.empty()) return;
        if (!is_stop_word(current)) tokens.push_back(stem(current));
        current.clear();
    };
    for (char c : text) {
        if (util::is_word_char(c)) {
            current.push_back(util::to_lower(c));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

namespace {

// Greedy sentence packing for over-long blocks; a single over-long sentence
// is hard-split.
void split_long_block(const std::string& block, std::size_t max_chars,
                      std::vector<std::string>& out) {
    if (block.size() <= max_chars) {
        out.push_back(block);
        return;
    }
    std::vector<std::string> sentences = util::split_sentences(block);
    std::string piece;
    auto flush_piece = [&]() {
        if (!piece.empty()) {
            out.push_back(piece);
            piece.clear();
        }
    };
    for (auto& sentence : sentences) {
        while (sentence.size() > max_chars) {
            flush_piece();
            out.push_back(sentence.substr(0, max_chars));
            sentence = util::trim(sentence.substr(max_chars));
        }
        if (sentence.empty()) continue;
        if (piece.empty()) {
            piece = sentence;
        } else if (piece.size() + 1 + sentence.size() <= max_chars) {
            piece += " " + sentence;
        } else {
            flush_piece();
            piece = sentence;
        }
    }
    flush_piece();
}

bool blank_line(std::string_view line) {
    return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

} // namespace

std::vector<std::string> chunk(std::string_view raw, std::size_t max_paragraph_chars) {
    std::vector<std::string> blocks;
    std::string current;
    std::istringstream in{std::string(raw)};
    std::string line;
    auto flush = [&]() {
        std::string t = util::trim(current);
        if (!t.empty()) split_long_block(t, max_paragraph_chars, blocks);
        current.clear();
    };
    while (std::getline(in, line)) {
        if (blank_line(line)) {
            flush();
        } else {
            if (!current.empty()) current += "\n";
            current += line;
        }
    }
    flush();
    return blocks;
}

namespace {

Report make_report(const ReportMeta& meta, const std::vector<std::string>& blocks) {
    Report report;
    report.id = meta.id;
    report.source_uri = meta.source_uri;
    report.role = meta.role;
    report.title = meta.title;
    int ordinal = 0;
    for (const auto& text : blocks) {
        Paragraph p;
        p.report_id = report.id;
        p.ordinal = ordinal;
        p.id = report.id + "#" + std::to_string(ordinal);
        p.text = text;
        p.tokens = preprocess(text);
        report.paragraphs.push_back(std::move(p));
        ++ordinal;
    }
    return report;
}

} // namespace

Report ingest_plain_text(std::string_view raw, const ReportMeta& meta,
                         std::size_t max_paragraph_chars) {
    std::vector<std::string> blocks = chunk(raw, max_paragraph_chars);
    if (blocks.empty()) {
        throw Error(ErrorCode::EmptyDocument, "no non-blank content in report '" + meta.id + "'");
    }
    return make_report(meta, blocks);
}

Report ingest_stix(const nlohmann::json& bundle, Role role, std::string source_uri,
                   std::size_t max_paragraph_chars) {
    if (!bundle.is_object() || bundle.value("type", "") != "bundle") {
        throw Error(ErrorCode::MalformedStix, "document is not a STIX bundle object");
    }
    ReportMeta meta;
    meta.id = bundle.value("id", "");
    if (meta.id.empty()) {
        throw Error(ErrorCode::MalformedStix, "bundle has no id");
    }
    meta.role = role;
    meta.source_uri = std::move(source_uri);

    std::vector<std::string> blocks;
    if (bundle.contains("objects") && bundle["objects"].is_array()) {
        for (const auto& obj : bundle["objects"]) {
            if (!obj.is_object()) continue;
            if (meta.title.empty() && obj.contains("name") && obj["name"].is_string()) {
                meta.title = obj["name"].get<std::string>();
            }
            if (obj.contains("description") && obj["description"].is_string()) {
                for (auto& piece : chunk(obj["description"].get<std::string>(), max_paragraph_chars)) {
                    blocks.push_back(std::move(piece));
                }
            }
        }
    }
    if (blocks.empty()) {
        throw Error(ErrorCode::EmptyDocument, "bundle '" + meta.id + "' carries no descriptions");
    }
    return make_report(meta, blocks);
}

const Report* Corpus::find_report(std::string_view report_id) const {
    for (const auto& r : reports) {
        if (r.id == report_id) return &r;
    }
    return nullptr;
}

const Paragraph* Corpus::find_paragraph(std::string_view paragraph_id) const {
    for (const auto& r : reports) {
        for (const auto& p : r.paragraphs) {
            if (p.id == paragraph_id) return &p;
        }
    }
    return nullptr;
}

std::size_t Corpus::total_paragraphs() const {
    std::size_t n = 0;
    for (const auto& r : reports) n += r.paragraphs.size();
    return n;
}

std::vector<const Report*> Corpus::by_role(Role role) const {
    std::vector<const Report*> out;
    for (const auto& r : reports) {
        if (r.role == role) out.push_back(&r);
    }
    return out;
}

nlohmann::json to_json(const Corpus& corpus) {
    nlohmann::json reports = nlohmann::json::array();
    for (const auto& r : corpus.reports) {
        nlohmann::json paragraphs = nlohmann::json::array();
        for (const auto& p : r.paragraphs) {
            paragraphs.push_back({{"id", p.id},
                                  {"ordinal", p.ordinal},
                                  {"text", p.text},
                                  {"tokens", p.tokens}});
        }
        reports.push_back({{"id", r.id},
                           {"source_uri", r.source_uri},
                           {"role", to_string(r.role)},
                           {"title", r.title},
                           {"paragraphs", paragraphs}});
    }
    return {{"reports", reports}};
}

Corpus corpus_from_json(const nlohmann::json& j) {
    Corpus corpus;
    if (!j.is_object() || !j.contains("reports")) {
        throw Error(ErrorCode::IoError, "corpus json must carry a 'reports' array");
    }
    for (const auto& rj : j["reports"]) {
        Report r;
        r.id = rj.value("id", "");
        r.source_uri = rj.value("source_uri", "");
        r.role = role_from_string(rj.value("role", "clue"));
        r.title = rj.value("title", "");
        for (const auto& pj : rj["paragraphs"]) {
            Paragraph p;
            p.id = pj.value("id", "");
            p.report_id = r.id;
            p.ordinal = pj.value("ordinal", 0);
            p.text = pj.value("text", "");
            p.tokens = pj.contains("tokens")
                           ? pj["tokens"].get<std::vector<std::string>>()
                           : preprocess(p.text);
            r.paragraphs.push_back(std::move(p));
        }
        corpus.reports.push_back(std::move(r));
    }
    return corpus;
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

Corpus load_corpus_dir(const std::string& dir, std::size_t max_paragraph_chars) {
    Corpus corpus;
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());

    for (const auto& path : paths) {
        const std::string name = path.filename().string();
        if (ends_with(name, ".meta.json")) continue;

        fs::path meta_path = path;
        std::string base = name;
        if (auto pos = base.find('.'); pos != std::string::npos) base = base.substr(0, pos);
        meta_path.replace_filename(base + ".meta.json");

        ReportMeta meta;
        meta.id = base;
        meta.source_uri = path.string();
        if (fs::exists(meta_path)) {
            auto mj = nlohmann::json::parse(read_file(meta_path));
            meta.id = mj.value("id", meta.id);
            meta.role = role_from_string(mj.value("role", "clue"));
            meta.title = mj.value("title", "");
            meta.source_uri = mj.value("source_uri", meta.source_uri);
        }

        if (ends_with(name, ".stix.json")) {
            auto bundle = nlohmann::json::parse(read_file(path));
            corpus.reports.push_back(
                ingest_stix(bundle, meta.role, meta.source_uri, max_paragraph_chars));
        } else if (ends_with(name, ".txt")) {
            corpus.reports.push_back(
                ingest_plain_text(read_file(path), meta, max_paragraph_chars));
        }
    }
    if (corpus.reports.empty()) {
        throw Error(ErrorCode::EmptyCorpus, "no reports found under " + dir);
    }
    return corpus;
}

Corpus load_corpus_file(const std::string& path) {
    return corpus_from_json(nlohmann::json::parse(read_file(path)));
}

void save_corpus_file(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << to_json(corpus).dump(2) << "\n";
}

} // namespace kgv::corpus
