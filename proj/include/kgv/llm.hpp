#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace kgv::llm {

class Provider {
public:
    virtual ~Provider() = default;
    virtual const std::string& name() const = 0;
    virtual std::string complete(const std::string& prompt, int max_tokens) = 0;
};

// Replays canned request->response transcripts. A transcript is a JSON array
// of {"request_hash": <16-hex fnv1a64 of the prompt>, "response_text": "..."}.
// Repeated entries for one hash are consumed in order; the last one is sticky
// so retries stay deterministic.
class ScriptedProvider final : public Provider {
public:
    ScriptedProvider() = default;

    static ScriptedProvider from_file(const std::string& path);
    static ScriptedProvider from_json(const nlohmann::json& transcript);

    // Registers a response for the given prompt (test fixture building).
    void add(const std::string& prompt, const std::string& response);
    void add_hashed(const std::string& request_hash, const std::string& response);

    static std::string hash_prompt(const std::string& prompt);

    nlohmann::json to_json() const;

    const std::string& name() const override { return name_; }
    std::string complete(const std::string& prompt, int max_tokens) override;

private:
    struct Entry {
        std::vector<std::string> responses;
        size_t next = 0;
    };
    std::string name_ = "scripted";
    std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
    std::map<std::string, Entry> entries_;
    std::vector<std::pair<std::string, std::string>> order_;  // for to_json
};

struct HttpConfig {
    std::string base_url;
    int timeout_ms = 10000;
    int retries = 2;
};

// POST /complete {"prompt": "...", "max_tokens": N} -> {"text": "..."}
class HttpProvider final : public Provider {
public:
    explicit HttpProvider(HttpConfig config);
    const std::string& name() const override { return name_; }
    std::string complete(const std::string& prompt, int max_tokens) override;

private:
    HttpConfig config_;
    std::string name_;
};

} // namespace kgv::llm
