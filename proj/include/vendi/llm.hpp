// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vendi/chunking.hpp"
#include "vendi/error.hpp"
#include "vendi/hash.hpp"
#include "vendi/http.hpp"
#include "vendi/log.hpp"
#include "vendi/prompts.hpp"

namespace vendi {

enum class PromptRole { reasoning, answer, judge, rewrite };

inline constexpr std::array<PromptRole, 4> all_prompt_roles = {
    PromptRole::reasoning, PromptRole::answer, PromptRole::judge, PromptRole::rewrite};

inline std::string to_string(PromptRole r) {
    switch (r) {
        case PromptRole::reasoning: return "reasoning";
        case PromptRole::answer: return "answer";
        case PromptRole::judge: return "judge";
        case PromptRole::rewrite: return "rewrite";
    }
    return "?";
}

inline PromptRole parse_prompt_role(std::string_view s) {
    for (auto r : all_prompt_roles)
        if (to_string(r) == s) return r;
    throw ConfigError("unknown prompt role '" + std::string(s) + "'");
}

struct ChatMessage {
    std::string role;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
    PromptRole role = PromptRole::reasoning;
    std::vector<ChatMessage> messages;

    /// Stable hash of role and message contents; scenario files key on it.
    std::string fingerprint() const {
        std::string buf = to_string(role);
        for (const auto& m : messages) {
            buf.push_back('\0');
            buf += m.role;
            buf.push_back('\0');
            buf += m.content;
        }
        return hex64(fnv1a64(buf));
    }

    std::string text() const {
        std::string out;
        for (const auto& m : messages) {
            if (!out.empty()) out += "\n\n";
            out += m.content;
        }
        return out;
    }
};

enum class LlmProviderKind { scripted, remote_chat };

struct LlmProviderSpec {
    LlmProviderKind kind = LlmProviderKind::scripted;
    std::string model_name = "scripted";
    std::optional<std::string> endpoint;
    double temperature = 0.0;
    int max_in_flight = 4;
    std::chrono::milliseconds timeout{60000};
    /// Upper bound on whitespace tokens per request.
    std::size_t context_budget_tokens = 16384;
};

class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    virtual const LlmProviderSpec& spec() const = 0;
    virtual std::string complete(const ChatRequest& request) = 0;
};

// --- scripted provider ------------------------------------------------------

/// One scripted response. A rule applies to a request when every condition it
/// sets holds; the first applicable rule in file order wins.
struct ScriptRule {
    PromptRole role = PromptRole::reasoning;
    /// 0-based count of earlier requests with the same role.
    std::optional<std::size_t> ordinal;
    std::optional<std::string> fingerprint;
    /// Substring of the concatenated message contents.
    std::optional<std::string> contains;
    std::string response;
};

struct Scenario {
    std::vector<ScriptRule> rules;

    static Scenario from_json(const nlohmann::json& j) {
        if (!j.is_object() || !j.contains("responses") || !j["responses"].is_array()) {
            throw FormatError("scenario must be an object with a 'responses' array");
        }
        Scenario sc;
        std::uint64_t n = 0;
        for (const auto& r : j["responses"]) {
            ++n;
            try {
                ScriptRule rule;
                rule.role = parse_prompt_role(r.at("role").get<std::string>());
                if (r.contains("ordinal")) rule.ordinal = r["ordinal"].get<std::size_t>();
                if (r.contains("fingerprint")) rule.fingerprint = r["fingerprint"].get<std::string>();
                if (r.contains("contains")) rule.contains = r["contains"].get<std::string>();
                const auto& resp = r.at("response");
                rule.response = resp.is_string() ? resp.get<std::string>() : resp.dump();
                sc.rules.push_back(std::move(rule));
            } catch (const nlohmann::json::exception& e) {
                throw FormatError("scenario rule " + std::to_string(n) + ": " + e.what(), n);
            } catch (const ConfigError& e) {
                throw FormatError("scenario rule " + std::to_string(n) + ": " + e.what(), n);
            }
        }
        return sc;
    }

    static Scenario load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open scenario file '" + path.string() + "'");
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError("scenario '" + path.string() + "' is not valid JSON: " + e.what(),
                              e.byte);
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : rules) {
            nlohmann::json o = {{"role", to_string(r.role)}, {"response", r.response}};
            if (r.ordinal) o["ordinal"] = *r.ordinal;
            if (r.fingerprint) o["fingerprint"] = *r.fingerprint;
            if (r.contains) o["contains"] = *r.contains;
            arr.push_back(std::move(o));
        }
        return {{"responses", arr}};
    }
};

/// Deterministic offline provider replaying a Scenario. Calls are serialized
/// so per-role ordinals are well defined; every request is recorded.
class ScriptedProvider final : public LlmProvider {
public:
    explicit ScriptedProvider(Scenario scenario, LlmProviderSpec spec = {})
        : scenario_(std::move(scenario)), spec_(std::move(spec)) {
        spec_.kind = LlmProviderKind::scripted;
    }

    const LlmProviderSpec& spec() const override { return spec_; }

    std::string complete(const ChatRequest& request) override {
        std::lock_guard lock(mutex_);
        const std::size_t ordinal = counters_[static_cast<std::size_t>(request.role)]++;
        history_.push_back(request);
        const std::string fp = request.fingerprint();
        const std::string text = request.text();
        for (const auto& rule : scenario_.rules) {
            if (rule.role != request.role) continue;
            if (rule.ordinal && *rule.ordinal != ordinal) continue;
            if (rule.fingerprint && *rule.fingerprint != fp) continue;
            if (rule.contains && text.find(*rule.contains) == std::string::npos) continue;
            return rule.response;
        }
        throw ProviderError("scripted provider has no response for role '" + to_string(request.role) +
                            "' ordinal " + std::to_string(ordinal) + " (fingerprint " + fp + ")");
    }

    std::vector<ChatRequest> history() const {
        std::lock_guard lock(mutex_);
        return history_;
    }

    void reset() {
        std::lock_guard lock(mutex_);
        counters_ = {};
        history_.clear();
    }

private:
    Scenario scenario_;
    LlmProviderSpec spec_;
    mutable std::mutex mutex_;
    std::array<std::size_t, all_prompt_roles.size()> counters_{};
    std::vector<ChatRequest> history_;
};

// --- remote chat provider ---------------------------------------------------

/// OpenAI-compatible chat completions client.
class RemoteChatProvider final : public LlmProvider {
public:
    RemoteChatProvider(LlmProviderSpec spec, std::shared_ptr<HttpTransport> transport,
                       std::optional<std::string> api_key = env_var("VENDI_LLM_API_KEY"),
                       RetryPolicy retry = {})
        : spec_(std::move(spec)),
          transport_(std::move(transport)),
          api_key_(std::move(api_key)),
          retry_(retry),
          limiter_(spec_.max_in_flight) {
        spec_.kind = LlmProviderKind::remote_chat;
        if (!spec_.endpoint) spec_.endpoint = env_var("VENDI_LLM_ENDPOINT");
        if (!spec_.endpoint) throw ConfigError("remote LLM provider requires an endpoint (VENDI_LLM_ENDPOINT)");
        if (!transport_) throw ConfigError("remote LLM provider requires a transport");
        if (spec_.temperature < 0.0) throw ConfigError("temperature must be >= 0");
    }

    const LlmProviderSpec& spec() const override { return spec_; }

    std::string request_body(const ChatRequest& request) const {
        nlohmann::json messages = nlohmann::json::array();
        for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
        nlohmann::json body = {
            {"model", spec_.model_name}, {"messages", messages}, {"temperature", spec_.temperature}};
        return body.dump();
    }

    std::string complete(const ChatRequest& request) override {
        HttpHeaders headers;
        if (api_key_) headers.emplace_back("Authorization", "Bearer " + *api_key_);
        HttpResponse res;
        {
            auto permit = limiter_.acquire();
            res = post_with_retry(*transport_, *spec_.endpoint, request_body(request), headers,
                                  spec_.timeout, retry_, to_string(request.role) + " completion");
        }
        try {
            const auto j = nlohmann::json::parse(res.body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(std::string("malformed chat completion response: ") + e.what());
        }
    }

private:
    LlmProviderSpec spec_;
    std::shared_ptr<HttpTransport> transport_;
    std::optional<std::string> api_key_;
    RetryPolicy retry_;
    InFlightLimiter limiter_;
};

// --- prompt roles -----------------------------------------------------------

struct JudgeVerdict {
    double coherence = 0.0;
    double relevance = 0.0;
    double alignment = 0.0;
    /// mean(coherence, relevance, alignment), on the 1-10 scale.
    double quality = 0.0;
    std::string raw_response;
};

inline std::size_t count_tokens(std::string_view text) {
    std::size_t n = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        const bool space = std::isspace(c) != 0;
        if (!space && !in_token) ++n;
        in_token = !space;
    }
    return n;
}

inline void check_context_budget(const ChatRequest& req, const LlmProviderSpec& spec) {
    std::size_t tokens = 0;
    for (const auto& m : req.messages) tokens += count_tokens(m.content);
    if (tokens > spec.context_budget_tokens) {
        throw ContextOverflowError(to_string(req.role) + " prompt has " + std::to_string(tokens) +
                                   " tokens, over the context budget of " +
                                   std::to_string(spec.context_budget_tokens) +
                                   "; select fewer or shorter documents, or raise the budget");
    }
}

inline std::string send(LlmProvider& provider, const ChatRequest& req) {
    check_context_budget(req, provider.spec());
    return provider.complete(req);
}

inline ChatRequest build_reasoning_request(const std::string& query, std::span<const Chunk> documents,
                                           const PromptTemplates& t = {}) {
    if (documents.empty()) throw InsufficientInputError("reasoning requires at least one document");
    return {PromptRole::reasoning,
            {{"user", render_template(t.reasoning, {{"query", query},
                                                    {"documents", format_documents(documents)}})}}};
}

inline ChatRequest build_answer_request(const std::string& query, std::span<const Chunk> documents,
                                        std::span<const std::string> reasoning_history,
                                        const PromptTemplates& t = {}) {
    if (documents.empty()) throw InsufficientInputError("answer generation requires at least one document");
    return {PromptRole::answer,
            {{"user", render_template(t.answer,
                                      {{"query", query},
                                       {"documents", format_documents(documents)},
                                       {"reasoning", format_reasoning_history(reasoning_history)}})}}};
}

/// System message: the judge prompt with the query filled in, followed by the
/// JSON response-format line. User message: documents and the answer.
inline ChatRequest build_judge_request(const std::string& query, const std::string& answer,
                                       std::span<const Chunk> documents, const PromptTemplates& t = {}) {
    if (trim(answer).empty()) throw InsufficientInputError("cannot judge an empty answer");
    std::string system = render_template(t.judge, {{"query", query}});
    if (!system.empty() && system.back() != '\n') system.push_back('\n');
    system += t.judge_format;
    return {PromptRole::judge,
            {{"system", system},
             {"user", render_template(t.judge_input, {{"documents", format_documents(documents)},
                                                      {"answer", answer}})}}};
}

inline ChatRequest build_rewrite_request(const std::string& query, const std::string& answer,
                                         const std::string& reasoning, const PromptTemplates& t = {}) {
    if (trim(query).empty() || trim(answer).empty() || trim(reasoning).empty()) {
        throw InsufficientInputError("query rewrite needs a query, an answer and reasoning");
    }
    return {PromptRole::rewrite,
            {{"user", render_template(t.rewrite_query,
                                      {{"query", query}, {"answer", answer}, {"reasoning", reasoning}})}}};
}

inline std::string generate_reasoning(LlmProvider& provider, const std::string& query,
                                      std::span<const Chunk> documents, const PromptTemplates& t = {}) {
    return send(provider, build_reasoning_request(query, documents, t));
}

inline std::string generate_answer(LlmProvider& provider, const std::string& query,
                                   std::span<const Chunk> documents,
                                   std::span<const std::string> reasoning_history,
                                   const PromptTemplates& t = {}) {
    return trim(send(provider, build_answer_request(query, documents, reasoning_history, t)));
}

namespace detail {

/// First balanced {...} in text, honoring JSON string quoting.
inline std::optional<std::string> extract_json_object(std::string_view text) {
    const auto start = text.find('{');
    if (start == std::string_view::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    bool escape = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escape) escape = false;
            else if (c == '\\') escape = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return std::string(text.substr(start, i - start + 1));
    }
    return std::nullopt;
}

}  // namespace detail

/// Parses {"C": .., "R": .., "Q": ..}; surrounding prose or code fences are
/// tolerated, missing or non-numeric scores are not.
inline JudgeVerdict parse_judge_response(const std::string& raw) {
    const auto obj = detail::extract_json_object(raw);
    if (!obj) throw JudgeParseError("judge response contains no JSON object", raw);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(*obj);
    } catch (const nlohmann::json::exception&) {
        throw JudgeParseError("judge response JSON is malformed", raw);
    }
    auto score = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number()) {
            throw JudgeParseError(std::string("judge response lacks numeric score '") + key + "'", raw);
        }
        const double v = j[key].get<double>();
        if (!(v >= 1.0 && v <= 10.0)) {
            throw JudgeRangeError(std::string("judge score ") + key + "=" + std::to_string(v) +
                                  " outside [1, 10]");
        }
        return v;
    };
    JudgeVerdict v;
    v.coherence = score("C");
    v.relevance = score("R");
    v.alignment = score("Q");
    v.quality = (v.coherence + v.relevance + v.alignment) / 3.0;
    v.raw_response = raw;
    return v;
}

inline JudgeVerdict judge_answer(LlmProvider& provider, const std::string& query,
                                 const std::string& answer, std::span<const Chunk> documents,
                                 const PromptTemplates& t = {}) {
    return parse_judge_response(send(provider, build_judge_request(query, answer, documents, t)));
}

/// Never returns an empty query: an empty completion falls back to `query`.
inline std::string rewrite_query(LlmProvider& provider, const std::string& query,
                                 const std::string& answer, const std::string& reasoning,
                                 const PromptTemplates& t = {}) {
    std::string out = trim(send(provider, build_rewrite_request(query, answer, reasoning, t)));
    if (out.empty()) {
        log_warn("query rewrite returned nothing; keeping the previous query");
        return query;
    }
    return out;
}

}  // namespace vendi
