#pragma once

#include "kgv/graph.hpp"

#include <cstddef>
#include <string>

namespace kgv {

struct PipelineConfig {
    graph::Config graph;

    int k = 5;                            // fact triples retrieved per claim triple
    double score_threshold = 0.5;         // verified when s / claims reaches this
    double support_threshold = 0.9;       // offline judge: supported at this match score
    double refute_object_threshold = 0.5; // offline judge: object disagreement bound
    double min_match_score = 0.5;         // evidence floor for retrieval counting
    std::size_t max_paragraph_chars = 2000;
    int llm_retries = 2;
    bool use_kg = true;
    bool parallel = true;

    // "fallback" forces the offline judge even when an LLM is configured.
    std::string judge = "auto";  // auto | fallback | llm

    std::string provider = "stub";  // stub | scripted | http
    std::string scripted_path;
    std::string alias_table_path;
    std::string embed_endpoint;
    std::string llm_endpoint;
    int http_timeout_ms = 5000;
    int http_retries = 2;
    std::string cache_dir;

    std::string content_hash() const;
};

// Flat TOML-style `key = value` file; '#' starts a comment, strings may be
// quoted. Unknown keys are rejected.
PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config(const std::string& text);

} // namespace kgv
