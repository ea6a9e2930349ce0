#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kgv/embed.hpp"
#include "kgv/errors.hpp"
#include "kgv/llm.hpp"

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

using namespace kgv;

namespace {

struct TestServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    explicit TestServer() {
        server.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
            auto body = nlohmann::json::parse(req.body);
            nlohmann::json vectors = nlohmann::json::array();
            for (const auto& token : body.at("tokens")) {
                const std::string t = token.get<std::string>();
                // 4-dim toy embedding derived from the token bytes
                double a = 0;
                for (unsigned char c : t) a += c;
                vectors.push_back({a, 1.0, 0.0, static_cast<double>(t.size())});
            }
            res.set_content(
                nlohmann::json{{"dims", 4}, {"vectors", vectors}}.dump(), "application/json");
        });
        server.Post("/complete", [](const httplib::Request& req, httplib::Response& res) {
            auto body = nlohmann::json::parse(req.body);
            const std::string prompt = body.at("prompt").get<std::string>();
            res.set_content(
                nlohmann::json{{"text", "echo:" + prompt.substr(0, 10)}}.dump(),
                "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~TestServer() {
        server.stop();
        thread.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

} // namespace

TEST_CASE("http embedding provider speaks the wire contract") {
    TestServer ts;
    embed::HttpProvider provider(embed::HttpConfig{ts.url(), 2000, 1});
    auto vectors = provider.embed_tokens({"alpha", "be"});
    REQUIRE(vectors.size() == 2);
    CHECK(vectors[0].size() == 4);
    CHECK(vectors[1][3] == doctest::Approx(2.0));
    CHECK(provider.dims() == 4);

    auto mean = embed::embed_paragraph({"alpha", "be"}, provider);
    CHECK(mean[3] == doctest::Approx((5.0 + 2.0) / 2.0));
}

TEST_CASE("http llm provider speaks the wire contract") {
    TestServer ts;
    llm::HttpProvider provider(llm::HttpConfig{ts.url(), 2000, 1});
    CHECK(provider.complete("hello world prompt", 64) == "echo:hello worl");
}

TEST_CASE("provider failure carries the attempt count") {
    // nothing listens on this port
    embed::HttpProvider provider(embed::HttpConfig{"http://127.0.0.1:1", 200, 2});
    try {
        provider.embed_tokens({"alpha"});
        FAIL("expected ProviderFailure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ProviderFailure);
        CHECK(e.attempts() == 3);  // first try + 2 retries
    }
}
