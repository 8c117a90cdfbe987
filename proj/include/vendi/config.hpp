// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "vendi/embedder.hpp"
#include "vendi/error.hpp"
#include "vendi/llm.hpp"
#include "vendi/pipeline.hpp"
#include "vendi/retrieval.hpp"

namespace vendi {

/// Flat `section.key` -> string configuration merged in the order
/// defaults <- config file <- environment <- command-line flags.
class CliConfig {
public:
    struct Key {
        const char* name;
        const char* default_value;
        bool secret = false;
    };

    static const std::vector<Key>& known_keys() {
        static const std::vector<Key> keys = {
            {"retrieval.strategy", "vendi"},
            {"retrieval.k", "10"},
            {"retrieval.pool", "50"},
            {"retrieval.mmr_lambda", "0.5"},
            {"retrieval.raw_vs", "false"},
            {"retrieval.s", "0.8"},
            {"pipeline.s1", "0.8"},
            {"pipeline.tau", "0.85"},
            {"pipeline.max_iters", "3"},
            {"pipeline.schedule", "dynamic"},
            {"pipeline.judge", "true"},
            {"pipeline.strict_alg1", "false"},
            {"pipeline.exclude_seen", "false"},
            {"chunking.max_tokens", "512"},
            {"chunking.overlap", "50"},
            {"ingest.batch_size", "10000"},
            {"ingest.corpus_name", ""},
            {"ingest.format", "corpus"},
            {"embedding.kind", "deterministic-test"},
            {"embedding.model", ""},
            {"embedding.dim", ""},
            {"embedding.endpoint", ""},
            {"embedding.batch_size", "64"},
            {"embedding.max_in_flight", "4"},
            {"embedding.timeout_ms", "30000"},
            {"embedding.api_key", "", true},
            {"llm.kind", "scripted"},
            {"llm.model", "gpt-4o-mini"},
            {"llm.endpoint", ""},
            {"llm.temperature", "0"},
            {"llm.scenario", ""},
            {"llm.prompts_dir", ""},
            {"llm.max_in_flight", "4"},
            {"llm.timeout_ms", "60000"},
            {"llm.context_budget", "16384"},
            {"llm.api_key", "", true},
            {"query.question", ""},
            {"eval.sample", "0"},
            {"eval.seed", "7"},
            {"eval.jobs", "1"},
            {"eval.strict_acc", "false"},
            {"sensitivity.s", "0.0,0.2,0.4,0.6,0.8,1.0"},
            {"sensitivity.pool", "20"},
            {"paths.corpus", ""},
            {"paths.index", ""},
            {"paths.dataset", ""},
            {"paths.queries", ""},
            {"paths.out", ""},
            {"paths.csv_out", ""},
            {"paths.trace_out", ""},
        };
        return keys;
    }

    static const Key* find_key(const std::string& name) {
        for (const auto& k : known_keys())
            if (name == k.name) return &k;
        return nullptr;
    }

    void set(const std::string& key, std::string value) {
        if (!find_key(key)) throw ConfigError("unknown configuration key '" + key + "'");
        values_[key] = std::move(value);
    }

    bool is_set(const std::string& key) const { return values_.count(key) > 0; }

    /// INI file: `[section]` headers with `key = value` lines.
    void merge_file(const std::filesystem::path& path) {
        boost::property_tree::ptree tree;
        try {
            boost::property_tree::read_ini(path.string(), tree);
        } catch (const boost::property_tree::ini_parser_error& e) {
            if (!std::filesystem::exists(path)) throw IoError("config file '" + path.string() + "' not found");
            throw ConfigError(std::string("config file: ") + e.what());
        }
        for (const auto& [section, body] : tree) {
            if (body.empty()) throw ConfigError("config key '" + section + "' must be inside a [section]");
            for (const auto& [key, value] : body) set(section + "." + key, value.data());
        }
    }

    using EnvLookup = std::function<std::optional<std::string>(const char*)>;

    void merge_env(const EnvLookup& lookup = [](const char* n) { return env_var(n); }) {
        static const std::pair<const char*, const char*> map[] = {
            {"VENDI_LLM_ENDPOINT", "llm.endpoint"},
            {"VENDI_LLM_API_KEY", "llm.api_key"},
            {"VENDI_EMBED_API_KEY", "embedding.api_key"},
            {"VENDI_EMBED_ENDPOINT", "embedding.endpoint"},
        };
        for (const auto& [env, key] : map)
            if (auto v = lookup(env)) set(key, *v);
    }

    std::string get(const std::string& key) const {
        auto it = values_.find(key);
        if (it != values_.end()) return it->second;
        const Key* k = find_key(key);
        if (!k) throw ConfigError("unknown configuration key '" + key + "'");
        return k->default_value;
    }

    double get_double(const std::string& key) const {
        const std::string v = get(key);
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw ConfigError("'" + key + "' must be a number, got '" + v + "'");
        }
    }

    std::size_t get_size(const std::string& key) const {
        const std::string v = get(key);
        try {
            std::size_t used = 0;
            if (v.empty() || v[0] == '-') throw std::invalid_argument(v);
            const auto n = std::stoull(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return static_cast<std::size_t>(n);
        } catch (const std::exception&) {
            throw ConfigError("'" + key + "' must be a non-negative integer, got '" + v + "'");
        }
    }

    bool get_bool(const std::string& key) const {
        std::string v = get(key);
        std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw ConfigError("'" + key + "' must be a boolean, got '" + v + "'");
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(get(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                out.push_back(std::stod(item, &used));
                if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw ConfigError("'" + key + "' must be a comma-separated list of numbers");
            }
        }
        if (out.empty()) throw ConfigError("'" + key + "' is empty");
        return out;
    }

    /// Effective configuration with secrets redacted.
    nlohmann::json echo() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& k : known_keys()) {
            if (k.secret) {
                j[k.name] = get(k.name).empty() ? "" : "<redacted>";
            } else {
                j[k.name] = get(k.name);
            }
        }
        return j;
    }

    RetrievalConfig retrieval() const {
        RetrievalConfig r;
        r.strategy = parse_strategy(get("retrieval.strategy"));
        r.select_k = get_size("retrieval.k");
        r.pool_size = get_size("retrieval.pool");
        r.mmr_lambda = get_double("retrieval.mmr_lambda");
        r.raw_vs = get_bool("retrieval.raw_vs");
        r.s = get_double("retrieval.s");
        r.validate();
        return r;
    }

    PipelineConfig pipeline() const {
        PipelineConfig p;
        p.s1 = get_double("pipeline.s1");
        p.tau = get_double("pipeline.tau");
        p.max_iterations = get_size("pipeline.max_iters");
        p.schedule = parse_schedule(get("pipeline.schedule"));
        p.judge_enabled = get_bool("pipeline.judge");
        p.strict_alg1 = get_bool("pipeline.strict_alg1");
        p.exclude_seen = get_bool("pipeline.exclude_seen");
        p.retrieval = retrieval();
        p.validate();
        return p;
    }

    /// Provider spec for building a new index. Remote providers default to
    /// all-mpnet-base-v2 (768-d).
    EmbeddingProviderSpec embedding() const {
        EmbeddingProviderSpec e;
        e.kind = parse_embedding_kind(get("embedding.kind"));
        const bool remote = e.kind == EmbeddingProviderKind::remote_http;
        e.model_name = get("embedding.model");
        if (e.model_name.empty()) e.model_name = remote ? std::string(default_remote_embedding_model) : "hash-v1";
        e.dim = get("embedding.dim").empty() ? (remote ? 768 : 256) : get_size("embedding.dim");
        if (e.dim == 0) throw ConfigError("embedding.dim must be >= 1");
        if (!get("embedding.endpoint").empty()) e.endpoint = get("embedding.endpoint");
        e.batch_size = get_size("embedding.batch_size");
        e.max_in_flight = static_cast<int>(get_size("embedding.max_in_flight"));
        e.timeout = std::chrono::milliseconds(get_size("embedding.timeout_ms"));
        return e;
    }

    LlmProviderSpec llm() const {
        LlmProviderSpec l;
        const std::string kind = get("llm.kind");
        if (kind == "scripted") l.kind = LlmProviderKind::scripted;
        else if (kind == "remote" || kind == "remote-chat") l.kind = LlmProviderKind::remote_chat;
        else throw ConfigError("unknown llm.kind '" + kind + "' (expected scripted|remote)");
        l.model_name = l.kind == LlmProviderKind::scripted ? "scripted" : get("llm.model");
        if (!get("llm.endpoint").empty()) l.endpoint = get("llm.endpoint");
        l.temperature = get_double("llm.temperature");
        if (l.temperature < 0.0) throw ConfigError("llm.temperature must be >= 0");
        l.max_in_flight = static_cast<int>(get_size("llm.max_in_flight"));
        l.timeout = std::chrono::milliseconds(get_size("llm.timeout_ms"));
        l.context_budget_tokens = get_size("llm.context_budget");
        return l;
    }

    std::optional<std::string> secret(const std::string& key) const {
        const std::string v = get(key);
        if (v.empty()) return std::nullopt;
        return v;
    }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace vendi
