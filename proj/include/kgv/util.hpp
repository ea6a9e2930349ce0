#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kgv::util {

// ASCII-only case folding; keeps token streams bit-stable across locales.
char to_lower(char c);
std::string lower(std::string_view s);

std::string trim(std::string_view s);

bool contains_ci(std::string_view haystack, std::string_view needle);

// FNV-1a over the raw bytes; used for stub embeddings and transcript keys.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

// Splits prose into sentences on ./!/? followed by whitespace or end.
std::vector<std::string> split_sentences(std::string_view text);

// Comma-separated values, trimmed, empties dropped.
std::vector<std::string> split_list(std::string_view s, char sep = ',');

bool is_word_char(char c);

// Whole-word, case-insensitive search ("it" does not match "its").
bool contains_word_ci(std::string_view text, std::string_view word);

std::string csv_escape(std::string_view field);

void log_warn(const std::string& message);

} // namespace kgv::util
