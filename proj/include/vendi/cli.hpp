// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vendi/chunking.hpp"
#include "vendi/config.hpp"
#include "vendi/dataset.hpp"
#include "vendi/embedder.hpp"
#include "vendi/error.hpp"
#include "vendi/evaluation.hpp"
#include "vendi/httplib_transport.hpp"
#include "vendi/index.hpp"
#include "vendi/llm.hpp"
#include "vendi/log.hpp"
#include "vendi/pipeline.hpp"
#include "vendi/prompts.hpp"
#include "vendi/retrieval.hpp"

namespace vendi::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_error = 1;
inline constexpr int exit_usage = 2;

/// Process surroundings, injectable for tests.
struct Context {
    std::ostream& out = std::cout;
    std::ostream& err = std::cerr;
    std::function<std::shared_ptr<HttpTransport>()> transport = make_default_transport;
    CliConfig::EnvLookup env = [](const char* n) { return env_var(n); };
    /// Returns the `generated_at` stamp for output artifacts.
    std::function<std::string()> clock = [] {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return std::string(buf);
    };
};

/// Bad flag values or inconsistent settings.
class UsageError : public Error {
public:
    using Error::Error;
};

namespace detail {

/// Maps parsed CLI11 options onto configuration keys.
class Bindings {
public:
    CLI::Option* value(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        auto storage = std::make_shared<std::string>();
        const CliConfig::Key* k = CliConfig::find_key(key);
        std::string text = help;
        if (k && !k->secret && std::string(k->default_value).size() > 0)
            text += " (default: " + std::string(k->default_value) + ")";
        auto* opt = app->add_option(flag, *storage, text);
        values_.push_back({opt, key, storage});
        return opt;
    }

    CLI::Option* flag(CLI::App* app, const std::string& flag, const std::string& key, std::string when_set,
                      const std::string& help) {
        auto* opt = app->add_flag(flag, help);
        flags_.push_back({opt, key, std::move(when_set)});
        return opt;
    }

    void apply(CliConfig& config) const {
        for (const auto& v : values_)
            if (v.option->count() > 0) config.set(v.key, *v.storage);
        for (const auto& f : flags_)
            if (f.option->count() > 0) config.set(f.key, f.value);
    }

private:
    struct ValueBinding {
        CLI::Option* option;
        std::string key;
        std::shared_ptr<std::string> storage;
    };
    struct FlagBinding {
        CLI::Option* option;
        std::string key;
        std::string value;
    };
    std::vector<ValueBinding> values_;
    std::vector<FlagBinding> flags_;
};

inline void add_retrieval_options(CLI::App* app, Bindings& b) {
    b.value(app, "--strategy", "retrieval.strategy", "Selection strategy: ss|mmr|vendi");
    b.value(app, "--k", "retrieval.k", "Documents selected per retrieval");
    b.value(app, "--pool", "retrieval.pool", "Candidate pool size");
    b.value(app, "--mmr-lambda", "retrieval.mmr_lambda", "MMR relevance weight");
    b.flag(app, "--raw-vs", "retrieval.raw_vs", "true", "Mix the raw Vendi Score instead of the normalized one");
}

inline void add_pipeline_options(CLI::App* app, Bindings& b) {
    b.value(app, "--s1", "pipeline.s1", "Initial diversity weight");
    b.value(app, "--tau", "pipeline.tau", "Quality threshold on the normalized judge score");
    b.value(app, "--max-iters", "pipeline.max_iters", "Iteration budget");
    b.value(app, "--schedule", "pipeline.schedule", "Diversity schedule: dynamic|fixed");
    b.flag(app, "--no-judge", "pipeline.judge", "false", "Run a single iteration without the judge");
    b.flag(app, "--strict-alg1", "pipeline.strict_alg1", "true",
           "On budget exhaustion return the last answer instead of the best-judged one");
    b.flag(app, "--exclude-seen", "pipeline.exclude_seen", "true",
           "Skip chunks selected in earlier iterations");
    add_retrieval_options(app, b);
}

inline void add_llm_options(CLI::App* app, Bindings& b) {
    b.value(app, "--llm", "llm.kind", "LLM provider: scripted|remote");
    b.value(app, "--scenario", "llm.scenario", "Scenario file for the scripted provider");
    b.value(app, "--llm-model", "llm.model", "Chat model name for the remote provider");
    b.value(app, "--llm-endpoint", "llm.endpoint", "Chat completions URL (env VENDI_LLM_ENDPOINT)");
    b.value(app, "--temperature", "llm.temperature", "Sampling temperature");
    b.value(app, "--context-budget", "llm.context_budget", "Maximum whitespace tokens per request");
    b.value(app, "--prompts-dir", "llm.prompts_dir", "Directory overriding the built-in prompt templates");
}

inline void add_embedding_endpoint_option(CLI::App* app, Bindings& b) {
    b.value(app, "--embed-endpoint", "embedding.endpoint",
            "Embeddings URL for remote providers (env VENDI_EMBED_ENDPOINT)");
}

template <typename Fn>
auto usage_phase(Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& data) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << data;
    out.close();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::unique_ptr<EmbeddingProvider> make_embedder(const EmbeddingProviderSpec& spec, const CliConfig& config,
                                                        const Context& ctx) {
    if (spec.kind == EmbeddingProviderKind::deterministic_test) return std::make_unique<HashEmbedder>(spec);
    return std::make_unique<RemoteEmbedder>(spec, ctx.transport(), config.secret("embedding.api_key"));
}

/// Embedder for an existing index: the space comes from the index, transport
/// settings from the configuration.
inline std::unique_ptr<EmbeddingProvider> query_embedder(const VectorIndex& index, const CliConfig& config,
                                                         const Context& ctx) {
    const auto& fp = index.metadata().provider_fingerprint;
    if (fp.empty()) throw FormatError("index has no provider fingerprint");
    auto spec = spec_from_fingerprint(fp);
    const auto configured = usage_phase([&] { return config.embedding(); });
    spec.endpoint = configured.endpoint;
    spec.batch_size = configured.batch_size;
    spec.max_in_flight = configured.max_in_flight;
    spec.timeout = configured.timeout;
    return make_embedder(spec, config, ctx);
}

inline std::unique_ptr<LlmProvider> make_llm(const CliConfig& config, const Context& ctx) {
    const auto spec = usage_phase([&] { return config.llm(); });
    if (spec.kind == LlmProviderKind::scripted) {
        const std::string path = config.get("llm.scenario");
        if (path.empty()) throw UsageError("the scripted LLM provider needs --scenario <file>");
        return std::make_unique<ScriptedProvider>(Scenario::load(path), spec);
    }
    return std::make_unique<RemoteChatProvider>(spec, ctx.transport(), config.secret("llm.api_key"));
}

inline PromptTemplates load_prompts(const CliConfig& config) {
    const std::string dir = config.get("llm.prompts_dir");
    return dir.empty() ? PromptTemplates{} : PromptTemplates::load_dir(dir);
}

inline VectorIndex open_index(const CliConfig& config) {
    const std::string path = config.get("paths.index");
    if (path.empty()) throw UsageError("--index is required");
    if (!std::filesystem::exists(path)) throw IoError("index file '" + path + "' not found");
    return load_index(path);
}

inline std::string required_path(const CliConfig& config, const std::string& key, const std::string& flag) {
    std::string p = config.get(key);
    if (p.empty()) throw UsageError(flag + " is required");
    return p;
}

inline std::vector<std::string> read_queries(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("queries file '" + path.string() + "' not found");
    std::istringstream in(read_text(path));
    std::vector<std::string> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '{') {
            try {
                out.push_back(nlohmann::json::parse(t).at("question").get<std::string>());
            } catch (const nlohmann::json::exception& e) {
                throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what(), n);
            }
        } else {
            out.push_back(t);
        }
    }
    return out;
}

// --- commands -----------------------------------------------------------------

inline int cmd_ingest(const CliConfig& config, const Context& ctx) {
    const auto corpus = required_path(config, "paths.corpus", "--corpus");
    const auto out_path = required_path(config, "paths.out", "--out");
    const auto [spec, opts, batch, format] = usage_phase([&] {
        ChunkOptions o{config.get_size("chunking.max_tokens"), config.get_size("chunking.overlap")};
        if (o.max_tokens == 0 || o.overlap >= o.max_tokens)
            throw ConfigError("chunking requires max-tokens > overlap");
        const std::size_t b = config.get_size("ingest.batch_size");
        if (b == 0) throw ConfigError("batch size must be >= 1");
        const std::string f = config.get("ingest.format");
        if (f != "corpus") parse_dataset_format(f);
        return std::tuple{config.embedding(), o, b, f};
    });
    if (!std::filesystem::exists(corpus)) throw IoError("corpus file '" + corpus + "' not found");

    const auto documents =
        format == "corpus" ? load_corpus(corpus) : documents_from_dataset(load_dataset(corpus, parse_dataset_format(format)));
    std::vector<Chunk> chunks;
    std::size_t skipped = 0;
    for (const auto& d : documents) {
        try {
            auto cs = chunk_document(d.doc_id, d.title, d.text, opts);
            chunks.insert(chunks.end(), std::make_move_iterator(cs.begin()), std::make_move_iterator(cs.end()));
        } catch (const EmptyDocumentError& e) {
            ++skipped;
            log_warn(e.what());
        }
    }

    std::string name = config.get("ingest.corpus_name");
    if (name.empty()) name = std::filesystem::path(corpus).stem().string();
    VectorIndex index(IndexMetadata{name, spec.fingerprint()}, spec.dim);
    auto embedder = make_embedder(spec, config, ctx);
    const auto report = ingest(index, chunks, *embedder, batch);

    ctx.out << "documents: " << documents.size() << "\n"
            << "skipped_empty: " << skipped << "\n"
            << "chunks: " << chunks.size() << "\n"
            << "processed: " << report.processed << "\n"
            << "batches: " << report.batches << "\n"
            << "overwrites: " << report.overwrites << "\n"
            << "failed: " << report.failed_ids.size() << "\n"
            << "total: " << report.total << "\n";
    if (!report.complete()) {
        for (const auto& e : report.errors) ctx.err << "error: " << e << "\n";
        ctx.err << "error: " << report.failed_ids.size() << " chunks were not embedded; index not written\n";
        return exit_error;
    }
    save_index(index, out_path);
    ctx.out << "index: " << out_path << "\n";
    return exit_ok;
}

inline int cmd_retrieve(const CliConfig& config, const Context& ctx) {
    const std::string question = config.get("query.question");
    if (trim(question).empty()) throw UsageError("--question is required");
    const auto rc = usage_phase([&] { return config.retrieval(); });
    const auto index = open_index(config);
    auto embedder = query_embedder(index, config, ctx);
    const auto sel = select_documents(index, embed_text(*embedder, question), rc);
    nlohmann::json j = selection_to_json(sel);
    j["config"] = config.echo();
    ctx.out << j.dump(2) << "\n";
    return exit_ok;
}

inline int cmd_query(const CliConfig& config, const Context& ctx, bool verbose_trace) {
    const std::string question = config.get("query.question");
    if (trim(question).empty()) throw UsageError("--question is required");
    const auto pc = usage_phase([&] { return config.pipeline(); });
    const auto index = open_index(config);
    auto embedder = query_embedder(index, config, ctx);
    auto llm = make_llm(config, ctx);
    const auto prompts = load_prompts(config);
    const std::string trace_path = config.get("paths.trace_out");
    try {
        const auto result = run_pipeline(question, index, *embedder, *llm, pc, prompts);
        if (!trace_path.empty()) write_text(trace_path, trace_to_json(result, verbose_trace).dump(2) + "\n");
        ctx.out << result.final_answer << "\n";
        ctx.err << "iterations=" << result.trace.size() << " best_iteration=" << result.best_iteration
                << " terminated_by=" << to_string(result.terminated_by) << "\n";
    } catch (const PipelineError& e) {
        if (!trace_path.empty()) write_text(trace_path, trace_to_json(e.partial(), verbose_trace).dump(2) + "\n");
        throw;
    }
    return exit_ok;
}

inline int cmd_eval(const CliConfig& config, const Context& ctx) {
    const auto dataset_path = required_path(config, "paths.dataset", "--dataset");
    const auto out_path = required_path(config, "paths.out", "--out");
    const auto [pc, format, sample, seed, jobs, strict] = usage_phase([&] {
        const std::string f = config.get("ingest.format");
        const auto fmt = f == "corpus" ? DatasetFormat::generic_jsonl : parse_dataset_format(f);
        const std::size_t j = config.get_size("eval.jobs");
        if (j == 0) throw ConfigError("--jobs must be >= 1");
        return std::tuple{config.pipeline(), fmt, config.get_size("eval.sample"),
                          static_cast<std::uint64_t>(config.get_size("eval.seed")), j,
                          config.get_bool("eval.strict_acc")};
    });
    if (!std::filesystem::exists(dataset_path)) throw IoError("dataset file '" + dataset_path + "' not found");
    auto dataset = load_dataset(dataset_path, format);
    if (sample > 0) dataset = sample_items(std::move(dataset), sample, seed);
    const auto index = open_index(config);
    auto embedder = query_embedder(index, config, ctx);
    auto llm = make_llm(config, ctx);

    EvalOptions opts;
    opts.jobs = jobs;
    opts.strict_accuracy = strict;
    opts.prompts = load_prompts(config);
    const auto report = evaluate_dataset(dataset, index, *embedder, *llm, pc, opts);

    const auto echo = config.echo();
    const std::string stamp = ctx.clock();
    write_text(out_path, report_to_json(report, echo, stamp).dump(2) + "\n");
    const std::string csv = config.get("paths.csv_out");
    if (!csv.empty()) write_text(csv, aggregates_to_csv(report, echo, stamp));

    const auto& a = report.aggregates;
    ctx.out << "examples: " << a.total << " scored: " << a.scored << " failed: " << a.failed << "\n"
            << "EM: " << format_fixed(a.em_pct, 2) << "% F1: " << format_fixed(a.f1_mean, 4)
            << " Acc: " << format_fixed(a.acc_pct, 2) << "%\n"
            << "VS: " << format_fixed(a.vs_mean, 4) << " MPD: " << format_fixed(a.mpd_mean, 4) << "\n";
    return exit_ok;
}

inline int cmd_sensitivity(const CliConfig& config, const Context& ctx) {
    const auto queries_path = required_path(config, "paths.queries", "--queries");
    const auto [s_values, sc, sample, seed] = usage_phase([&] {
        SensitivityConfig c;
        c.pool_size = config.get_size("sensitivity.pool");
        c.raw_vs = config.get_bool("retrieval.raw_vs");
        c.jobs = config.get_size("eval.jobs");
        if (c.jobs == 0) throw ConfigError("--jobs must be >= 1");
        return std::tuple{config.get_double_list("sensitivity.s"), c, config.get_size("eval.sample"),
                          static_cast<std::uint64_t>(config.get_size("eval.seed"))};
    });
    auto queries = read_queries(queries_path);
    if (sample > 0) queries = sample_items(std::move(queries), sample, seed);
    const auto index = open_index(config);
    auto embedder = query_embedder(index, config, ctx);
    const auto rows = sensitivity_analysis(index, *embedder, queries, s_values, sc);
    const std::string csv = sensitivity_to_csv(rows, config.echo(), ctx.clock());
    const std::string out_path = config.get("paths.out");
    if (out_path.empty()) {
        ctx.out << csv;
    } else {
        write_text(out_path, csv);
        ctx.out << "s,tau,rho\n";
        for (const auto& r : rows)
            ctx.out << format_fixed(r.s, 2) << "," << format_fixed(r.tau) << "," << format_fixed(r.rho) << "\n";
    }
    return exit_ok;
}

}  // namespace detail

/// Entry point of the `vendi` tool. Returns the process exit code.
inline int run(int argc, const char* const* argv, const Context& ctx = {}) {
    CLI::App app{"Diversity-aware iterative retrieval-augmented QA"};
    app.name("vendi");
    app.require_subcommand(1);
    std::string config_file;
    app.add_option("--config", config_file, "INI configuration file ([section] key = value)");

    detail::Bindings b;
    bool verbose_trace = false;

    auto* ingest_cmd = app.add_subcommand("ingest", "Chunk, embed and index a corpus");
    b.value(ingest_cmd, "--corpus", "paths.corpus", "Corpus JSONL ({id,title,text}) or dataset file")->required();
    b.value(ingest_cmd, "--out", "paths.out", "Index file to write")->required();
    b.value(ingest_cmd, "--format", "ingest.format", "Input format: corpus|hotpotqa|musique|2wiki|generic-jsonl");
    b.value(ingest_cmd, "--corpus-name", "ingest.corpus_name", "Corpus name stored in the index");
    b.value(ingest_cmd, "--max-tokens", "chunking.max_tokens", "Tokens per chunk");
    b.value(ingest_cmd, "--overlap", "chunking.overlap", "Tokens shared by consecutive chunks");
    b.value(ingest_cmd, "--batch-size", "ingest.batch_size", "Chunks per ingestion batch");
    b.value(ingest_cmd, "--embedder", "embedding.kind", "Embedding provider: deterministic-test|remote-http");
    b.value(ingest_cmd, "--embed-model", "embedding.model", "Embedding model name");
    b.value(ingest_cmd, "--embed-dim", "embedding.dim", "Embedding dimension");
    detail::add_embedding_endpoint_option(ingest_cmd, b);

    auto* query_cmd = app.add_subcommand("query", "Answer one question with the iterative pipeline");
    b.value(query_cmd, "--index", "paths.index", "Index file")->required();
    b.value(query_cmd, "--question", "query.question", "Question to answer")->required();
    b.value(query_cmd, "--trace-out", "paths.trace_out", "Write the per-iteration trace as JSON");
    query_cmd->add_flag("--verbose-trace", verbose_trace, "Include full prompts in the trace");
    detail::add_pipeline_options(query_cmd, b);
    detail::add_llm_options(query_cmd, b);
    detail::add_embedding_endpoint_option(query_cmd, b);

    auto* retrieve_cmd = app.add_subcommand("retrieve", "Run one retrieval and print the selection");
    b.value(retrieve_cmd, "--index", "paths.index", "Index file")->required();
    b.value(retrieve_cmd, "--question", "query.question", "Query text")->required();
    b.value(retrieve_cmd, "--s", "retrieval.s", "Diversity weight");
    detail::add_retrieval_options(retrieve_cmd, b);
    detail::add_embedding_endpoint_option(retrieve_cmd, b);

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate the pipeline on a QA dataset");
    b.value(eval_cmd, "--dataset", "paths.dataset", "Dataset file")->required();
    b.value(eval_cmd, "--format", "ingest.format", "Dataset format: hotpotqa|musique|2wiki|generic-jsonl");
    b.value(eval_cmd, "--index", "paths.index", "Index file")->required();
    b.value(eval_cmd, "--out", "paths.out", "JSON report to write")->required();
    b.value(eval_cmd, "--csv-out", "paths.csv_out", "Aggregate CSV to write");
    b.value(eval_cmd, "--sample", "eval.sample", "Evaluate a seeded random sample of this many examples (0 = all)");
    b.value(eval_cmd, "--seed", "eval.seed", "Sampling seed");
    b.value(eval_cmd, "--jobs", "eval.jobs", "Examples evaluated in parallel");
    b.flag(eval_cmd, "--strict-acc", "eval.strict_acc", "true", "Score Acc as exact match");
    detail::add_pipeline_options(eval_cmd, b);
    detail::add_llm_options(eval_cmd, b);
    detail::add_embedding_endpoint_option(eval_cmd, b);

    auto* sens_cmd = app.add_subcommand("sensitivity", "Rank correlation of VRS rankings against s = 0");
    b.value(sens_cmd, "--index", "paths.index", "Index file")->required();
    b.value(sens_cmd, "--queries", "paths.queries", "Queries, one per line or JSONL with a question field")
        ->required();
    b.value(sens_cmd, "--s", "sensitivity.s", "Comma-separated s values; must include 0.0");
    b.value(sens_cmd, "--out", "paths.out", "CSV table to write (stdout when omitted)");
    b.value(sens_cmd, "--pool", "sensitivity.pool", "Documents ranked per query");
    b.value(sens_cmd, "--sample", "eval.sample", "Use a seeded random sample of this many queries (0 = all)");
    b.value(sens_cmd, "--seed", "eval.seed", "Sampling seed");
    b.value(sens_cmd, "--jobs", "eval.jobs", "Queries processed in parallel");
    b.flag(sens_cmd, "--raw-vs", "retrieval.raw_vs", "true", "Mix the raw Vendi Score instead of the normalized one");
    detail::add_embedding_endpoint_option(sens_cmd, b);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, ctx.out, ctx.err);
        return code == 0 ? exit_ok : exit_usage;
    }

    auto previous = set_log_sink([&err = ctx.err](LogLevel level, std::string_view msg) {
        if (level == LogLevel::debug) return;
        static constexpr const char* names[] = {"debug", "info", "warn", "error"};
        err << "[vendi " << names[static_cast<int>(level)] << "] " << msg << '\n';
    });
    struct Restore {
        LogSink sink;
        ~Restore() { set_log_sink(std::move(sink)); }
    } restore{std::move(previous)};

    try {
        CliConfig config;
        detail::usage_phase([&] {
            if (!config_file.empty()) config.merge_file(config_file);
            config.merge_env(ctx.env);
            b.apply(config);
        });

        if (ingest_cmd->parsed()) return detail::cmd_ingest(config, ctx);
        if (query_cmd->parsed()) return detail::cmd_query(config, ctx, verbose_trace);
        if (retrieve_cmd->parsed()) return detail::cmd_retrieve(config, ctx);
        if (eval_cmd->parsed()) return detail::cmd_eval(config, ctx);
        if (sens_cmd->parsed()) return detail::cmd_sensitivity(config, ctx);
        return exit_usage;
    } catch (const UsageError& e) {
        ctx.err << "usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        ctx.err << "error: " << e.what() << "\n";
        return exit_error;
    }
}

inline int run(const std::vector<std::string>& args, const Context& ctx = {}) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("vendi");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), ctx);
}

}  // namespace vendi::cli
