#include "kgv/config.hpp"

#include "kgv/errors.hpp"
#include "kgv/util.hpp"

#include <fstream>
#include <sstream>

namespace kgv {

std::string PipelineConfig::content_hash() const {
    std::ostringstream ss;
    ss << graph.similarity_threshold << "|" << graph.max_hops << "|"
       << graph.keyword_edges_enabled << "|" << k << "|" << score_threshold << "|"
       << support_threshold << "|" << refute_object_threshold << "|" << min_match_score << "|"
       << max_paragraph_chars << "|" << llm_retries << "|" << use_kg << "|" << judge << "|"
       << provider;
    return util::hex64(util::fnv1a64(ss.str()));
}

namespace {

std::string unquote(std::string value) {
    if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                              (value.front() == '\'' && value.back() == '\''))) {
        return value.substr(1, value.size() - 2);
    }
    return value;
}

bool parse_bool(const std::string& key, const std::string& value) {
    const std::string v = util::lower(value);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorCode::ConfigError, "key '" + key + "' wants a boolean, got '" + value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        double d = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return d;
    } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError, "key '" + key + "' wants a number, got '" + value + "'");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    double d = parse_double(key, value);
    return static_cast<int>(d);
}

} // namespace

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig config;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
        line = util::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::ConfigError,
                        "line " + std::to_string(line_no) + " is not 'key = value'");
        }
        const std::string key = util::trim(line.substr(0, eq));
        const std::string value = unquote(util::trim(line.substr(eq + 1)));

        if (key == "similarity_threshold") {
            config.graph.similarity_threshold = parse_double(key, value);
        } else if (key == "max_hops") {
            config.graph.max_hops = parse_int(key, value);
        } else if (key == "keyword_edges_enabled") {
            config.graph.keyword_edges_enabled = parse_bool(key, value);
        } else if (key == "k") {
            config.k = parse_int(key, value);
        } else if (key == "score_threshold") {
            config.score_threshold = parse_double(key, value);
        } else if (key == "support_threshold") {
            config.support_threshold = parse_double(key, value);
        } else if (key == "refute_object_threshold") {
            config.refute_object_threshold = parse_double(key, value);
        } else if (key == "min_match_score") {
            config.min_match_score = parse_double(key, value);
        } else if (key == "max_paragraph_chars") {
            config.max_paragraph_chars = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "llm_retries") {
            config.llm_retries = parse_int(key, value);
        } else if (key == "use_kg") {
            config.use_kg = parse_bool(key, value);
        } else if (key == "parallel") {
            config.parallel = parse_bool(key, value);
        } else if (key == "judge") {
            config.judge = value;
        } else if (key == "provider") {
            config.provider = value;
        } else if (key == "scripted_path") {
            config.scripted_path = value;
        } else if (key == "alias_table_path") {
            config.alias_table_path = value;
        } else if (key == "embed_endpoint") {
            config.embed_endpoint = value;
        } else if (key == "llm_endpoint") {
            config.llm_endpoint = value;
        } else if (key == "http_timeout_ms") {
            config.http_timeout_ms = parse_int(key, value);
        } else if (key == "http_retries") {
            config.http_retries = parse_int(key, value);
        } else if (key == "cache_dir") {
            config.cache_dir = value;
        } else {
            throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
        }
    }
    return config;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace kgv
