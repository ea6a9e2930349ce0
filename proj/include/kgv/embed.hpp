#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace kgv::embed {

using Vector = std::vector<double>;

// Per-token vector source. Implementations must be deterministic (same token
// list, same vectors) and safe to share across threads.
class Provider {
public:
    virtual ~Provider() = default;
    virtual const std::string& name() const = 0;
    virtual int dims() const = 0;
    // One vector per token, same order, each of size dims().
    virtual std::vector<Vector> embed_tokens(const std::vector<std::string>& tokens) = 0;
};

// Offline provider: token -> FNV-1a hash -> seeded PRNG -> unit vector.
// Dependency-free and bit-stable, the backbone of every property test.
class StubProvider final : public Provider {
public:
    static constexpr int kDims = 64;

    const std::string& name() const override { return name_; }
    int dims() const override { return kDims; }
    std::vector<Vector> embed_tokens(const std::vector<std::string>& tokens) override;

    static Vector token_vector(const std::string& token);

private:
    std::string name_ = "stub-64";
    std::mutex mutex_;
    std::unordered_map<std::string, Vector> cache_;
};

struct HttpConfig {
    std::string base_url;   // e.g. "http://127.0.0.1:8089"
    int timeout_ms = 5000;
    int retries = 2;        // additional attempts after the first
};

// POST /embed {"tokens": [...]} -> {"dims": N, "vectors": [[...], ...]}
class HttpProvider final : public Provider {
public:
    explicit HttpProvider(HttpConfig config);
    const std::string& name() const override { return name_; }
    int dims() const override { return dims_; }
    std::vector<Vector> embed_tokens(const std::vector<std::string>& tokens) override;

private:
    HttpConfig config_;
    std::string name_;
    int dims_ = 0;  // learned from the first response
};

// Mean of the per-token vectors, accumulated in token order with compensated
// summation so batching cannot change the result.
Vector embed_paragraph(const std::vector<std::string>& tokens, Provider& provider);

double cosine(const Vector& a, const Vector& b);

double norm(const Vector& a);

} // namespace kgv::embed
