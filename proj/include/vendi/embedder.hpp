// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vendi/embedding_vector.hpp"
#include "vendi/error.hpp"
#include "vendi/hash.hpp"
#include "vendi/http.hpp"

namespace vendi {

enum class EmbeddingProviderKind { deterministic_test, remote_http };

inline std::string to_string(EmbeddingProviderKind k) {
    return k == EmbeddingProviderKind::deterministic_test ? "deterministic-test" : "remote-http";
}

inline EmbeddingProviderKind parse_embedding_kind(std::string_view s) {
    if (s == "deterministic-test" || s == "hash") return EmbeddingProviderKind::deterministic_test;
    if (s == "remote-http" || s == "remote") return EmbeddingProviderKind::remote_http;
    throw ConfigError("unknown embedding provider kind '" + std::string(s) + "'");
}

struct EmbeddingProviderSpec {
    EmbeddingProviderKind kind = EmbeddingProviderKind::deterministic_test;
    std::string model_name = "hash-v1";
    std::size_t dim = 256;
    std::optional<std::string> endpoint;
    std::size_t batch_size = 64;
    int max_in_flight = 4;
    std::chrono::milliseconds timeout{30000};

    /// Identity of the embedding space. Indexes remember it so queries are
    /// embedded by a compatible provider.
    std::string fingerprint() const {
        return to_string(kind) + ":" + model_name + ":" + std::to_string(dim);
    }
};

inline constexpr std::string_view default_remote_embedding_model = "all-mpnet-base-v2";

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual const EmbeddingProviderSpec& spec() const = 0;
    /// One vector per text, same order. Implementations may return
    /// unnormalized vectors; embed_batch normalizes.
    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
};

/// Offline embedder: each normalized word is hashed to a pseudo-random
/// direction, the directions are averaged and L2-normalized. Texts sharing
/// words get high cosine similarity.
class HashEmbedder final : public EmbeddingProvider {
public:
    explicit HashEmbedder(EmbeddingProviderSpec spec) : spec_(std::move(spec)) {
        spec_.kind = EmbeddingProviderKind::deterministic_test;
        if (spec_.dim == 0) throw ConfigError("embedding dim must be >= 1");
    }

    explicit HashEmbedder(std::size_t dim = 256) : HashEmbedder(make_spec(dim)) {}

    const EmbeddingProviderSpec& spec() const override { return spec_; }

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(embed_one(t));
        return out;
    }

    EmbeddingVector embed_one(std::string_view text) const {
        std::vector<double> acc(spec_.dim, 0.0);
        const auto words = features(text);
        if (words.empty()) {
            add_direction(acc, std::string("\x01raw:") + std::string(text));
        } else {
            for (const auto& w : words) add_direction(acc, w);
        }
        return EmbeddingVector(std::move(acc)).normalized();
    }

    /// Lowercased alphanumeric runs; non-ASCII bytes count as word characters.
    static std::vector<std::string> features(std::string_view text) {
        std::vector<std::string> words;
        std::string cur;
        for (unsigned char c : text) {
            if (std::isalnum(c) || c >= 0x80) {
                cur.push_back(static_cast<char>(std::tolower(c)));
            } else if (!cur.empty()) {
                words.push_back(std::move(cur));
                cur.clear();
            }
        }
        if (!cur.empty()) words.push_back(std::move(cur));
        return words;
    }

private:
    static EmbeddingProviderSpec make_spec(std::size_t dim) {
        EmbeddingProviderSpec s;
        s.dim = dim;
        return s;
    }

    void add_direction(std::vector<double>& acc, std::string_view word) const {
        std::uint64_t state = fnv1a64(word) ^ fnv1a64(spec_.model_name);
        for (double& a : acc) {
            const std::uint64_t r = splitmix64(state);
            a += static_cast<double>(r >> 11) * 0x1.0p-52 - 1.0;
        }
    }

    EmbeddingProviderSpec spec_;
};

/// OpenAI-compatible embeddings client: POST {"model", "input": [...]},
/// response {"data": [{"index", "embedding"}]}.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    RemoteEmbedder(EmbeddingProviderSpec spec, std::shared_ptr<HttpTransport> transport,
                   std::optional<std::string> api_key = env_var("VENDI_EMBED_API_KEY"),
                   RetryPolicy retry = {})
        : spec_(std::move(spec)),
          transport_(std::move(transport)),
          api_key_(std::move(api_key)),
          retry_(retry),
          limiter_(spec_.max_in_flight) {
        spec_.kind = EmbeddingProviderKind::remote_http;
        if (!spec_.endpoint) throw ConfigError("remote embedding provider requires an endpoint");
        if (!transport_) throw ConfigError("remote embedding provider requires a transport");
    }

    const EmbeddingProviderSpec& spec() const override { return spec_; }

    std::string request_body(std::span<const std::string> texts) const {
        nlohmann::json body = {{"model", spec_.model_name},
                               {"input", std::vector<std::string>(texts.begin(), texts.end())}};
        return body.dump();
    }

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
        HttpHeaders headers;
        if (api_key_) headers.emplace_back("Authorization", "Bearer " + *api_key_);
        HttpResponse res;
        {
            auto permit = limiter_.acquire();
            res = post_with_retry(*transport_, *spec_.endpoint, request_body(texts), headers,
                                  spec_.timeout, retry_, "embedding request");
        }
        return parse_response(res.body, texts.size());
    }

    std::vector<EmbeddingVector> parse_response(const std::string& body, std::size_t expected) const {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw ProviderContractError(std::string("embedding response is not JSON: ") + e.what());
        }
        if (!j.contains("data") || !j["data"].is_array()) {
            throw ProviderContractError("embedding response has no 'data' array");
        }
        const auto& data = j["data"];
        if (data.size() != expected) {
            throw ProviderContractError("embedding response has " + std::to_string(data.size()) +
                                        " vectors for " + std::to_string(expected) + " inputs");
        }
        std::vector<std::optional<EmbeddingVector>> slots(expected);
        for (std::size_t pos = 0; pos < data.size(); ++pos) {
            const auto& item = data[pos];
            const std::size_t idx = item.contains("index") ? item["index"].get<std::size_t>() : pos;
            if (idx >= expected || slots[idx]) {
                throw ProviderContractError("embedding response has bad or repeated index " +
                                            std::to_string(idx));
            }
            std::vector<double> values;
            try {
                values = item.at("embedding").get<std::vector<double>>();
            } catch (const nlohmann::json::exception& e) {
                throw ProviderContractError(std::string("malformed embedding: ") + e.what());
            }
            if (values.size() != spec_.dim) {
                throw ProviderContractError("provider returned dim " + std::to_string(values.size()) +
                                            ", expected " + std::to_string(spec_.dim));
            }
            slots[idx] = EmbeddingVector(std::move(values));
        }
        std::vector<EmbeddingVector> out;
        out.reserve(expected);
        for (auto& s : slots) out.push_back(std::move(*s));
        return out;
    }

private:
    EmbeddingProviderSpec spec_;
    std::shared_ptr<HttpTransport> transport_;
    std::optional<std::string> api_key_;
    RetryPolicy retry_;
    InFlightLimiter limiter_;
};

/// Embeds `texts` in provider-sized batches and enforces the provider
/// contract: one unit-normalized vector of dim spec().dim per input, in order.
inline std::vector<EmbeddingVector> embed_batch(EmbeddingProvider& provider,
                                                std::span<const std::string> texts) {
    if (texts.empty()) throw InsufficientInputError("embed_batch needs at least one text");
    const auto& spec = provider.spec();
    const std::size_t batch = std::max<std::size_t>(1, spec.batch_size);
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t begin = 0; begin < texts.size(); begin += batch) {
        const auto part = texts.subspan(begin, std::min(batch, texts.size() - begin));
        auto vecs = provider.embed(part);
        if (vecs.size() != part.size()) {
            throw ProviderContractError("provider returned " + std::to_string(vecs.size()) +
                                        " vectors for " + std::to_string(part.size()) + " texts");
        }
        for (auto& v : vecs) {
            if (v.dim() != spec.dim) {
                throw ProviderContractError("provider returned dim " + std::to_string(v.dim()) +
                                            ", expected " + std::to_string(spec.dim));
            }
            try {
                out.push_back(v.is_unit() ? std::move(v) : v.normalized());
            } catch (const DegenerateEmbeddingError&) {
                throw ProviderContractError("provider returned a zero vector");
            }
        }
    }
    return out;
}

inline EmbeddingVector embed_text(EmbeddingProvider& provider, const std::string& text) {
    return std::move(embed_batch(provider, std::span<const std::string>(&text, 1)).front());
}

}  // namespace vendi
