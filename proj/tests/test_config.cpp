#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kgv/config.hpp"
#include "kgv/errors.hpp"

using namespace kgv;

TEST_CASE("defaults match the documented values") {
    PipelineConfig config;
    CHECK(config.graph.similarity_threshold == doctest::Approx(0.8));
    CHECK(config.graph.max_hops == 1);
    CHECK(config.graph.keyword_edges_enabled);
    CHECK(config.k == 5);
    CHECK(config.score_threshold == doctest::Approx(0.5));
    CHECK(config.max_paragraph_chars == 2000);
    CHECK(config.llm_retries == 2);
    CHECK(config.use_kg);
}

TEST_CASE("key = value parsing with comments and quotes") {
    const char* text = R"(
# pipeline settings
similarity_threshold = 0.85
max_hops = 2
keyword_edges_enabled = false
k = 7
score_threshold = 0.6   # inline comment
judge = "fallback"
alias_table_path = '/tmp/aliases.json'
embed_endpoint = "http://127.0.0.1:9000"
use_kg = true
parallel = no
)";
    PipelineConfig config = parse_config(text);
    CHECK(config.graph.similarity_threshold == doctest::Approx(0.85));
    CHECK(config.graph.max_hops == 2);
    CHECK_FALSE(config.graph.keyword_edges_enabled);
    CHECK(config.k == 7);
    CHECK(config.score_threshold == doctest::Approx(0.6));
    CHECK(config.judge == "fallback");
    CHECK(config.alias_table_path == "/tmp/aliases.json");
    CHECK(config.embed_endpoint == "http://127.0.0.1:9000");
    CHECK(config.use_kg);
    CHECK_FALSE(config.parallel);
}

TEST_CASE("bad config input is rejected") {
    try {
        parse_config("unknown_key = 3\n");
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
    }
    CHECK_THROWS_AS(parse_config("k heavy line without equals\n"), Error);
    CHECK_THROWS_AS(parse_config("k = not_a_number\n"), Error);
    CHECK_THROWS_AS(parse_config("use_kg = maybe\n"), Error);
}

TEST_CASE("config hash tracks semantic fields") {
    PipelineConfig a;
    PipelineConfig b;
    CHECK(a.content_hash() == b.content_hash());
    b.graph.similarity_threshold = 0.9;
    CHECK(a.content_hash() != b.content_hash());
}
