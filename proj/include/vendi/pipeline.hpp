// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <exception>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "vendi/embedder.hpp"
#include "vendi/error.hpp"
#include "vendi/index.hpp"
#include "vendi/llm.hpp"
#include "vendi/retrieval.hpp"

namespace vendi {

inline constexpr double max_judge_score = 10.0;

enum class SSchedule { dynamic, fixed };
enum class Termination { threshold, budget };

inline std::string to_string(SSchedule s) { return s == SSchedule::dynamic ? "dynamic" : "fixed"; }
inline std::string to_string(Termination t) { return t == Termination::threshold ? "threshold" : "budget"; }

inline SSchedule parse_schedule(std::string_view s) {
    if (s == "dynamic") return SSchedule::dynamic;
    if (s == "fixed") return SSchedule::fixed;
    throw ConfigError("unknown s schedule '" + std::string(s) + "' (expected dynamic|fixed)");
}

struct PipelineConfig {
    double s1 = 0.8;
    double tau = 0.85;
    std::size_t max_iterations = 3;
    RetrievalConfig retrieval;
    SSchedule schedule = SSchedule::dynamic;
    bool judge_enabled = true;
    /// Return the last iteration's answer on budget exhaustion instead of the
    /// best-judged one.
    bool strict_alg1 = false;
    /// Drop chunks selected in earlier iterations from later pools.
    bool exclude_seen = false;

    void validate() const {
        if (!(s1 >= 0.0 && s1 <= 1.0)) throw ConfigError("s1 must be in [0, 1]");
        if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must be in (0, 1]");
        if (max_iterations == 0) throw ConfigError("max iterations must be >= 1");
        RetrievalConfig r = retrieval;
        r.s = s1;
        r.validate();
    }
};

/// Diversity weight for the next iteration from the previous judge score:
/// 1 - Q / 10. Higher quality means less diversity.
inline double update_s(double previous_quality) {
    if (!(previous_quality >= 1.0 && previous_quality <= max_judge_score)) {
        throw RangeError("judge quality " + std::to_string(previous_quality) + " outside [1, 10]");
    }
    return 1.0 - previous_quality / max_judge_score;
}

struct PipelineState {
    std::size_t iteration = 0;
    /// Retrieval query used this iteration.
    std::string query;
    double s = 0.0;
    SelectionResult selection;
    std::string reasoning;
    std::string answer;
    std::optional<JudgeVerdict> verdict;
    /// verdict->quality / 10, or 0 when judging is disabled.
    double q_norm = 0.0;
    /// Raw rewrite completion, when a rewrite was requested.
    std::optional<std::string> rewrite_response;
    std::optional<std::string> next_query;

    struct Prompts {
        std::string reasoning, answer, judge, rewrite;
    } prompts;
};

struct PipelineResult {
    std::string final_answer;
    std::size_t best_iteration = 0;
    std::vector<PipelineState> trace;
    Termination terminated_by = Termination::budget;
};

/// Raised when a run aborts; carries the iterations completed so far.
class PipelineError : public Error {
public:
    PipelineError(const std::string& what, PipelineResult partial, std::exception_ptr cause)
        : Error(what), partial_(std::move(partial)), cause_(std::move(cause)) {}

    const PipelineResult& partial() const noexcept { return partial_; }
    [[noreturn]] void rethrow_cause() const { std::rethrow_exception(cause_); }

private:
    PipelineResult partial_;
    std::exception_ptr cause_;
};

namespace detail {

inline std::vector<Chunk> selected_chunks(const SelectionResult& sel) {
    std::vector<Chunk> out;
    for (const auto& c : sel.selected) out.push_back(c.chunk);
    return out;
}

inline std::string join_messages(const ChatRequest& r) {
    std::string out;
    for (const auto& m : r.messages) {
        if (!out.empty()) out += "\n\n";
        out += "[" + m.role + "]\n" + m.content;
    }
    return out;
}

inline std::size_t best_by_quality(const std::vector<PipelineState>& trace) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i].q_norm > trace[best].q_norm) best = i;
    return best;
}

}  // namespace detail

/// Iterative retrieve / reason / answer / judge loop. Each iteration retrieves
/// with the current query and diversity weight, generates reasoning and an
/// answer for the original question, and judges it. The loop stops at the
/// first answer with normalized quality >= tau, or after max_iterations.
inline PipelineResult run_pipeline(const std::string& question, const VectorIndex& index,
                                   EmbeddingProvider& embedder, LlmProvider& llm,
                                   const PipelineConfig& config, const PromptTemplates& prompts = {}) {
    config.validate();
    if (trim(question).empty()) throw InsufficientInputError("question is empty");
    if (index.empty()) throw EmptyIndexError("index is empty");

    PipelineResult result;
    std::vector<std::string> reasoning_history;
    std::unordered_set<std::string> seen;
    std::string query = question;
    double s = config.s1;
    const std::size_t budget = config.judge_enabled ? config.max_iterations : 1;

    try {
        for (std::size_t t = 1; t <= budget; ++t) {
            PipelineState st;
            st.iteration = t;
            st.query = query;
            st.s = s;

            RetrievalConfig rc = config.retrieval;
            rc.s = s;
            st.selection = select_documents(index, embed_text(embedder, query), rc,
                                            config.exclude_seen ? seen : std::unordered_set<std::string>{});
            const auto docs = detail::selected_chunks(st.selection);
            for (const auto& d : docs) seen.insert(d.chunk_id);

            const auto reasoning_req = build_reasoning_request(question, docs, prompts);
            st.prompts.reasoning = detail::join_messages(reasoning_req);
            st.reasoning = send(llm, reasoning_req);
            reasoning_history.push_back(st.reasoning);

            const auto answer_req = build_answer_request(question, docs, reasoning_history, prompts);
            st.prompts.answer = detail::join_messages(answer_req);
            st.answer = trim(send(llm, answer_req));

            if (!config.judge_enabled) {
                result.trace.push_back(std::move(st));
                result.terminated_by = Termination::budget;
                break;
            }

            const auto judge_req = build_judge_request(question, st.answer, docs, prompts);
            st.prompts.judge = detail::join_messages(judge_req);
            st.verdict = parse_judge_response(send(llm, judge_req));
            st.q_norm = st.verdict->quality / max_judge_score;

            if (st.q_norm >= config.tau) {
                result.trace.push_back(std::move(st));
                result.terminated_by = Termination::threshold;
                break;
            }
            if (t < budget) {
                const auto rewrite_req = build_rewrite_request(query, st.answer, st.reasoning, prompts);
                st.prompts.rewrite = detail::join_messages(rewrite_req);
                std::string rewritten = trim(send(llm, rewrite_req));
                st.rewrite_response = rewritten;
                if (rewritten.empty()) {
                    log_warn("query rewrite returned nothing; keeping the previous query");
                    rewritten = query;
                }
                st.next_query = rewritten;
                query = rewritten;
                s = config.schedule == SSchedule::dynamic ? update_s(st.verdict->quality) : config.s1;
            }
            result.trace.push_back(std::move(st));
            result.terminated_by = Termination::budget;
        }
    } catch (const std::exception& e) {
        if (!result.trace.empty()) {
            result.best_iteration = result.trace.back().iteration;
            result.final_answer = result.trace.back().answer;
        }
        const std::string what = "pipeline aborted at iteration " +
                                 std::to_string(result.trace.size() + 1) + ": " + e.what();
        throw PipelineError(what, std::move(result), std::current_exception());
    }

    std::size_t pick = result.trace.size() - 1;
    if (result.terminated_by == Termination::budget && config.judge_enabled && !config.strict_alg1) {
        pick = detail::best_by_quality(result.trace);
    }
    result.best_iteration = result.trace[pick].iteration;
    result.final_answer = result.trace[pick].answer;
    return result;
}

// --- trace serialization ----------------------------------------------------

inline nlohmann::json selection_to_json(const SelectionResult& sel) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& st : sel.per_step_log)
        steps.push_back({{"chunk_id", st.chunk_id}, {"score", st.score}, {"marginal", st.marginal}});
    return {{"chunk_ids", sel.ids()}, {"s", sel.s},   {"vs", sel.vs},         {"vs_norm", sel.vs_norm},
            {"ss", sel.ss},           {"vrs", sel.vrs}, {"raw_vs", sel.raw_vs}, {"steps", steps}};
}

inline nlohmann::json state_to_json(const PipelineState& st, bool verbose = false) {
    nlohmann::json j = {{"iteration", st.iteration},
                        {"query", st.query},
                        {"s", st.s},
                        {"selection", selection_to_json(st.selection)},
                        {"reasoning", st.reasoning},
                        {"answer", st.answer},
                        {"q_norm", st.q_norm}};
    if (st.verdict) {
        j["verdict"] = {{"C", st.verdict->coherence},
                        {"R", st.verdict->relevance},
                        {"Q", st.verdict->alignment},
                        {"Q_t", st.verdict->quality},
                        {"raw", st.verdict->raw_response}};
    } else {
        j["verdict"] = nullptr;
    }
    j["rewrite_response"] = st.rewrite_response ? nlohmann::json(*st.rewrite_response) : nlohmann::json();
    j["next_query"] = st.next_query ? nlohmann::json(*st.next_query) : nlohmann::json();
    if (verbose) {
        j["prompts"] = {{"reasoning", st.prompts.reasoning},
                        {"answer", st.prompts.answer},
                        {"judge", st.prompts.judge},
                        {"rewrite", st.prompts.rewrite}};
    }
    return j;
}

/// The trace file: a JSON array of per-iteration records.
inline nlohmann::json trace_to_json(const PipelineResult& r, bool verbose = false) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& st : r.trace) arr.push_back(state_to_json(st, verbose));
    return arr;
}

/// Scenario that replays the completions recorded in a trace, by ordinal.
inline Scenario scenario_from_trace(const PipelineResult& r) {
    Scenario sc;
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        const auto& st = r.trace[i];
        sc.rules.push_back({PromptRole::reasoning, i, std::nullopt, std::nullopt, st.reasoning});
        sc.rules.push_back({PromptRole::answer, i, std::nullopt, std::nullopt, st.answer});
    }
    std::size_t judged = 0, rewritten = 0;
    for (const auto& st : r.trace) {
        if (st.verdict)
            sc.rules.push_back({PromptRole::judge, judged++, std::nullopt, std::nullopt, st.verdict->raw_response});
        if (st.rewrite_response)
            sc.rules.push_back({PromptRole::rewrite, rewritten++, std::nullopt, std::nullopt, *st.rewrite_response});
    }
    return sc;
}

}  // namespace vendi
