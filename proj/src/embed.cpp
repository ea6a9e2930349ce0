#include "kgv/embed.hpp"

#include "kgv/errors.hpp"
#include "kgv/util.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <httplib.h>
#include <json.hpp>

namespace kgv::embed {

namespace {

// Uniform in [0,1) from the top 53 bits; avoids the implementation-defined
// std::uniform_real_distribution so vectors are identical everywhere.
double next_unit(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * (1.0 / 9007199254740992.0);
}

} // namespace

Vector StubProvider::token_vector(const std::string& token) {
    std::mt19937_64 gen(util::fnv1a64(token));
    Vector v(kDims);
    for (int i = 0; i < kDims; i += 2) {
        double u1 = next_unit(gen);
        double u2 = next_unit(gen);
        double r = std::sqrt(-2.0 * std::log(std::max(u1, 1e-300)));
        v[static_cast<size_t>(i)] = r * std::cos(2.0 * M_PI * u2);
        v[static_cast<size_t>(i + 1)] = r * std::sin(2.0 * M_PI * u2);
    }
    double n = norm(v);
    if (n < 1e-12) {
        std::fill(v.begin(), v.end(), 0.0);
        v[0] = 1.0;
        return v;
    }
    for (auto& x : v) x /= n;
    return v;
}

std::vector<Vector> StubProvider::embed_tokens(const std::vector<std::string>& tokens) {
    std::vector<Vector> out;
    out.reserve(tokens.size());
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& token : tokens) {
        auto it = cache_.find(token);
        if (it == cache_.end()) {
            it = cache_.emplace(token, token_vector(token)).first;
        }
        out.push_back(it->second);
    }
    return out;
}

HttpProvider::HttpProvider(HttpConfig config) : config_(std::move(config)) {
    name_ = "http:" + config_.base_url;
}

std::vector<Vector> HttpProvider::embed_tokens(const std::vector<std::string>& tokens) {
    nlohmann::json body = {{"tokens", tokens}};
    const std::string payload = body.dump();

    int attempts = 0;
    std::string last_error;
    for (; attempts <= config_.retries; ++attempts) {
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(0, config_.timeout_ms * 1000);
        client.set_read_timeout(0, config_.timeout_ms * 1000);
        auto res = client.Post("/embed", payload, "application/json");
        if (!res || res->status != 200) {
            last_error = res ? "http status " + std::to_string(res->status)
                             : "transport error";
            continue;
        }
        try {
            auto j = nlohmann::json::parse(res->body);
            int dims = j.at("dims").get<int>();
            std::vector<Vector> vectors;
            for (const auto& vj : j.at("vectors")) {
                Vector v = vj.get<Vector>();
                if (static_cast<int>(v.size()) != dims) {
                    throw Error(ErrorCode::ProviderFailure, "vector size != dims");
                }
                vectors.push_back(std::move(v));
            }
            if (vectors.size() != tokens.size()) {
                throw Error(ErrorCode::ProviderFailure, "vector count != token count");
            }
            if (dims_ == 0) dims_ = dims;
            if (dims != dims_) {
                throw Error(ErrorCode::DimMismatch, "provider changed dims mid-corpus");
            }
            return vectors;
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("bad response: ") + e.what();
        }
    }
    throw Error(ErrorCode::ProviderFailure,
                "embed endpoint " + config_.base_url + " failed after " +
                    std::to_string(attempts) + " attempts (" + last_error + ")")
        .with_attempts(attempts);
}

Vector embed_paragraph(const std::vector<std::string>& tokens, Provider& provider) {
    if (tokens.empty()) {
        throw Error(ErrorCode::EmptyParagraph, "cannot embed an empty token list");
    }
    std::vector<Vector> vectors = provider.embed_tokens(tokens);
    const size_t dims = vectors.front().size();

    Vector sum(dims, 0.0);
    Vector compensation(dims, 0.0);
    for (const auto& v : vectors) {
        if (v.size() != dims) {
            throw Error(ErrorCode::DimMismatch, "provider returned mixed dims");
        }
        for (size_t d = 0; d < dims; ++d) {
            double y = v[d] - compensation[d];
            double t = sum[d] + y;
            compensation[d] = (t - sum[d]) - y;
            sum[d] = t;
        }
    }
    const double inv = 1.0 / static_cast<double>(vectors.size());
    for (auto& x : sum) x *= inv;
    return sum;
}

double norm(const Vector& a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return std::sqrt(s);
}

double cosine(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimMismatch,
                    std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw Error(ErrorCode::ZeroVector, "cosine undefined for zero-norm vector");
    }
    double value = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(value, -1.0, 1.0);
}

} // namespace kgv::embed
