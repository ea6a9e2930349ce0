#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kgv/embed.hpp"
#include "kgv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace kgv;

TEST_CASE("stub provider is deterministic and unit-norm") {
    embed::StubProvider a;
    embed::StubProvider b;
    auto va = a.embed_tokens({"alpha"});
    auto vb = b.embed_tokens({"alpha"});
    REQUIRE(va.size() == 1);
    CHECK(va[0] == vb[0]);
    CHECK(va[0].size() == 64);
    CHECK(embed::norm(va[0]) == doctest::Approx(1.0).epsilon(1e-12));

    // Frozen components pin the hash -> PRNG -> unit vector construction.
    CHECK(va[0][0] == doctest::Approx(-0.1325637148514369).epsilon(1e-12));
    CHECK(va[0][1] == doctest::Approx(-0.16409294762788276).epsilon(1e-12));
    CHECK(va[0][2] == doctest::Approx(-0.08613962416610536).epsilon(1e-12));
}

TEST_CASE("embed_paragraph is the token mean") {
    embed::StubProvider provider;
    SUBCASE("mean of one token is that token's vector") {
        auto v = embed::embed_paragraph({"alpha"}, provider);
        CHECK(v == embed::StubProvider::token_vector("alpha"));
    }
    SUBCASE("mean of a repeated token is the token's vector") {
        auto v = embed::embed_paragraph({"alpha", "alpha"}, provider);
        CHECK(v == embed::StubProvider::token_vector("alpha"));
    }
    SUBCASE("two-token mean equals the component-wise average") {
        auto v = embed::embed_paragraph({"alpha", "beta"}, provider);
        auto a = embed::StubProvider::token_vector("alpha");
        auto b = embed::StubProvider::token_vector("beta");
        for (size_t d = 0; d < v.size(); ++d) {
            CHECK(v[d] == doctest::Approx((a[d] + b[d]) / 2.0).epsilon(1e-12));
        }
    }
    SUBCASE("empty token list") {
        try {
            embed::embed_paragraph({}, provider);
            FAIL("expected EmptyParagraph");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EmptyParagraph);
        }
    }
}

TEST_CASE("embed_paragraph is permutation invariant") {
    embed::StubProvider provider;
    std::vector<std::string> tokens = {"apt34", "phishing", "lure", "bank", "dropper",
                                       "credential", "wave", "infrastructure"};
    auto base = embed::embed_paragraph(tokens, provider);
    std::mt19937 gen(3);
    for (int round = 0; round < 20; ++round) {
        std::shuffle(tokens.begin(), tokens.end(), gen);
        auto shuffled = embed::embed_paragraph(tokens, provider);
        for (size_t d = 0; d < base.size(); ++d) {
            CHECK(std::abs(base[d] - shuffled[d]) < 1e-12);
        }
    }
}

TEST_CASE("cosine examples") {
    CHECK(embed::cosine({1, 0, 0}, {0, 1, 0}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(embed::cosine({1, 1, 0}, {1, 0, 0}) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    embed::Vector v = embed::StubProvider::token_vector("anything");
    CHECK(embed::cosine(v, v) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cosine errors") {
    try {
        embed::cosine({0, 0}, {1, 0});
        FAIL("expected ZeroVector");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ZeroVector);
    }
    try {
        embed::cosine({1, 0}, {1, 0, 0});
        FAIL("expected DimMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimMismatch);
    }
}

TEST_CASE("cosine symmetry is exact and scale invariance holds") {
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    std::uniform_real_distribution<double> scale(0.1, 50.0);
    for (int round = 0; round < 200; ++round) {
        embed::Vector a(16), b(16);
        for (auto& x : a) x = coord(gen);
        for (auto& x : b) x = coord(gen);
        if (embed::norm(a) == 0.0 || embed::norm(b) == 0.0) continue;

        CHECK(embed::cosine(a, b) == embed::cosine(b, a));  // bitwise equal

        const double lambda = scale(gen);
        embed::Vector scaled = a;
        for (auto& x : scaled) x *= lambda;
        CHECK(std::abs(embed::cosine(scaled, b) - embed::cosine(a, b)) < 1e-9);

        CHECK(embed::cosine(a, b) >= -1.0);
        CHECK(embed::cosine(a, b) <= 1.0);
    }
}
