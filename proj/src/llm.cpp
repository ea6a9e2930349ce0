#include "kgv/llm.hpp"

#include "kgv/errors.hpp"
#include "kgv/util.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>

namespace kgv::llm {

std::string ScriptedProvider::hash_prompt(const std::string& prompt) {
    return util::hex64(util::fnv1a64(prompt));
}

ScriptedProvider ScriptedProvider::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read transcript " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(nlohmann::json::parse(ss.str()));
}

ScriptedProvider ScriptedProvider::from_json(const nlohmann::json& transcript) {
    if (!transcript.is_array()) {
        throw Error(ErrorCode::IoError, "transcript must be a JSON array");
    }
    ScriptedProvider provider;
    for (const auto& item : transcript) {
        provider.add_hashed(item.at("request_hash").get<std::string>(),
                            item.at("response_text").get<std::string>());
    }
    return provider;
}

void ScriptedProvider::add(const std::string& prompt, const std::string& response) {
    add_hashed(hash_prompt(prompt), response);
}

void ScriptedProvider::add_hashed(const std::string& request_hash, const std::string& response) {
    std::lock_guard<std::mutex> lock(*mutex_);
    entries_[request_hash].responses.push_back(response);
    order_.emplace_back(request_hash, response);
}

nlohmann::json ScriptedProvider::to_json() const {
    std::lock_guard<std::mutex> lock(*mutex_);
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [hash, response] : order_) {
        out.push_back({{"request_hash", hash}, {"response_text", response}});
    }
    return out;
}

std::string ScriptedProvider::complete(const std::string& prompt, int /*max_tokens*/) {
    const std::string key = hash_prompt(prompt);
    std::lock_guard<std::mutex> lock(*mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw Error(ErrorCode::ProviderFailure,
                    "no scripted response for request " + key + " (prompt starts: '" +
                        prompt.substr(0, 60) + "...')");
    }
    Entry& entry = it->second;
    const std::string& response = entry.responses[entry.next];
    if (entry.next + 1 < entry.responses.size()) ++entry.next;
    return response;
}

HttpProvider::HttpProvider(HttpConfig config) : config_(std::move(config)) {
    name_ = "http:" + config_.base_url;
}

std::string HttpProvider::complete(const std::string& prompt, int max_tokens) {
    nlohmann::json body = {{"prompt", prompt}, {"max_tokens", max_tokens}};
    const std::string payload = body.dump();

    int attempts = 0;
    std::string last_error;
    for (; attempts <= config_.retries; ++attempts) {
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(0, config_.timeout_ms * 1000);
        client.set_read_timeout(0, config_.timeout_ms * 1000);
        auto res = client.Post("/complete", payload, "application/json");
        if (!res || res->status != 200) {
            last_error = res ? "http status " + std::to_string(res->status)
                             : "transport error";
            continue;
        }
        try {
            auto j = nlohmann::json::parse(res->body);
            return j.at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("bad response: ") + e.what();
        }
    }
    throw Error(ErrorCode::ProviderFailure,
                "completion endpoint " + config_.base_url + " failed after " +
                    std::to_string(attempts) + " attempts (" + last_error + ")")
        .with_attempts(attempts);
}

} // namespace kgv::llm
