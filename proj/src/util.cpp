#include "kgv/util.hpp"

#include "kgv/errors.hpp"

#include <algorithm>
#include <iostream>
#include <mutex>

namespace kgv {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyDocument: return "EmptyDocument";
        case ErrorCode::MalformedStix: return "MalformedStix";
        case ErrorCode::EmptyParagraph: return "EmptyParagraph";
        case ErrorCode::ProviderFailure: return "ProviderFailure";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::DegenerateGraph: return "DegenerateGraph";
        case ErrorCode::NoSeedNodes: return "NoSeedNodes";
        case ErrorCode::NoEntitiesFound: return "NoEntitiesFound";
        case ErrorCode::MalformedLlmOutput: return "MalformedLlmOutput";
        case ErrorCode::ConstraintViolation: return "ConstraintViolation";
        case ErrorCode::UnparsableClaim: return "UnparsableClaim";
        case ErrorCode::EmptyVerdictList: return "EmptyVerdictList";
        case ErrorCode::IdMismatch: return "IdMismatch";
        case ErrorCode::Precondition: return "Precondition";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

const char* to_string(Stage stage) {
    switch (stage) {
        case Stage::KeyPointExtraction: return "key_point_extraction";
        case Stage::ClaimExtraction: return "claim_extraction";
        case Stage::TripleRetrieval: return "triple_extraction_and_retrieval";
        case Stage::PointVerification: return "point_verification";
    }
    return "unknown_stage";
}

} // namespace kgv

namespace kgv::util {

char to_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](char c) { return to_lower(c); });
    return out;
}

std::string trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    if (needle.size() > haystack.size()) return false;
    auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                          [](char a, char b) { return to_lower(a) == to_lower(b); });
    return it != haystack.end();
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        current.push_back(c);
        if (c == '.' || c == '!' || c == '?') {
            bool boundary = (i + 1 == text.size()) ||
                            std::isspace(static_cast<unsigned char>(text[i + 1]));
            if (boundary) {
                std::string s = trim(current);
                if (!s.empty()) out.push_back(std::move(s));
                current.clear();
            }
        }
    }
    std::string tail = trim(current);
    if (!tail.empty()) out.push_back(std::move(tail));
    return out;
}

std::vector<std::string> split_list(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (start <= s.size()) {
        size_t end = s.find(sep, start);
        if (end == std::string_view::npos) end = s.size();
        std::string piece = trim(s.substr(start, end - start));
        if (!piece.empty()) out.push_back(std::move(piece));
        start = end + 1;
    }
    return out;
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

bool contains_word_ci(std::string_view text, std::string_view word) {
    if (word.empty()) return false;
    const std::string t = lower(text);
    const std::string w = lower(word);
    size_t pos = 0;
    while ((pos = t.find(w, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !is_word_char(t[pos - 1]);
        size_t after = pos + w.size();
        bool right_ok = after >= t.size() || !is_word_char(t[after]);
        if (left_ok && right_ok) return true;
        pos += 1;
    }
    return false;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

void log_warn(const std::string& message) {
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    std::cerr << "[kgv] warning: " << message << "\n";
}

} // namespace kgv::util
