// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vendi/dataset.hpp"
#include "vendi/embedder.hpp"
#include "vendi/error.hpp"
#include "vendi/index.hpp"
#include "vendi/llm.hpp"
#include "vendi/metrics.hpp"
#include "vendi/parallel.hpp"
#include "vendi/pipeline.hpp"
#include "vendi/rank_correlation.hpp"
#include "vendi/retrieval.hpp"
#include "vendi/vendi_score.hpp"

namespace vendi {

// --- sensitivity analysis -----------------------------------------------------

struct SensitivityRow {
    double s = 0.0;
    double tau = 0.0;
    double rho = 0.0;
};

struct SensitivityConfig {
    std::size_t pool_size = 20;
    bool raw_vs = false;
    std::size_t jobs = 1;
};

/// Greedy selection order over the full pool, i.e. a complete ranking of it.
inline std::vector<std::string> vendi_ranking(std::span<const Candidate> pool, double s, bool raw_vs) {
    return greedy_vendi_selection(pool, pool.size(), s, raw_vs).ids();
}

/// For each query, ranks its top-M pool by greedy VRS order at every s and
/// compares that ranking with the s = 0 (pure similarity) ranking. Rows hold
/// the per-s means over queries, in the order of `s_values`.
inline std::vector<SensitivityRow> sensitivity_analysis(const VectorIndex& index,
                                                        std::span<const EmbeddingVector> queries,
                                                        std::span<const double> s_values,
                                                        const SensitivityConfig& config = {}) {
    if (std::find(s_values.begin(), s_values.end(), 0.0) == s_values.end()) {
        throw ConfigError("sensitivity analysis needs s = 0.0 in the s list as its baseline");
    }
    for (double s : s_values)
        if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("s values must be in [0, 1]");
    if (queries.empty()) throw InsufficientInputError("sensitivity analysis needs at least one query");
    if (config.pool_size < 2) throw InsufficientInputError("sensitivity analysis needs a pool of >= 2");

    std::vector<std::vector<RankCorrelation>> per_query(queries.size());
    std::vector<std::exception_ptr> errors(queries.size());
    parallel_for(queries.size(), config.jobs, [&](std::size_t q) {
        try {
            const auto pool = retrieve_pool(index, queries[q], config.pool_size);
            if (pool.size() < 2) throw InsufficientInputError("index holds fewer than 2 documents");
            const auto baseline = vendi_ranking(pool, 0.0, config.raw_vs);
            for (double s : s_values) {
                per_query[q].push_back(s == 0.0 ? RankCorrelation{1.0, 1.0}
                                                : rank_correlations(baseline, vendi_ranking(pool, s, config.raw_vs)));
            }
        } catch (...) {
            errors[q] = std::current_exception();
        }
    });
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<SensitivityRow> rows;
    for (std::size_t i = 0; i < s_values.size(); ++i) {
        SensitivityRow row{s_values[i], 0.0, 0.0};
        for (const auto& pq : per_query) {
            row.tau += pq[i].tau;
            row.rho += pq[i].rho;
        }
        row.tau /= static_cast<double>(queries.size());
        row.rho /= static_cast<double>(queries.size());
        rows.push_back(row);
    }
    return rows;
}

inline std::vector<SensitivityRow> sensitivity_analysis(const VectorIndex& index, EmbeddingProvider& embedder,
                                                        const std::vector<std::string>& queries,
                                                        std::span<const double> s_values,
                                                        const SensitivityConfig& config = {}) {
    if (queries.empty()) throw InsufficientInputError("sensitivity analysis needs at least one query");
    const auto embedded = embed_batch(embedder, queries);
    return sensitivity_analysis(index, embedded, s_values, config);
}

// --- dataset evaluation -------------------------------------------------------

struct EvalRow {
    std::string example_id;
    bool ok = false;
    std::string error;
    std::string question;
    std::string prediction;
    std::string gold;
    int em = 0;
    double f1 = 0.0;
    int acc = 0;
    double vs = 0.0;
    double mpd = 0.0;
    std::size_t iterations = 0;
    std::string terminated_by;
};

struct EvalAggregates {
    std::size_t total = 0;
    std::size_t scored = 0;
    std::size_t failed = 0;
    double em_pct = 0.0;
    double f1_mean = 0.0;
    double acc_pct = 0.0;
    double vs_mean = 0.0;
    double mpd_mean = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    EvalAggregates aggregates;

    /// Aggregates over the successfully scored rows.
    static EvalAggregates aggregate(const std::vector<EvalRow>& rows) {
        EvalAggregates a;
        a.total = rows.size();
        for (const auto& r : rows) {
            if (!r.ok) {
                ++a.failed;
                continue;
            }
            ++a.scored;
            a.em_pct += r.em;
            a.f1_mean += r.f1;
            a.acc_pct += r.acc;
            a.vs_mean += r.vs;
            a.mpd_mean += r.mpd;
        }
        if (a.scored > 0) {
            const double n = static_cast<double>(a.scored);
            a.em_pct = 100.0 * a.em_pct / n;
            a.acc_pct = 100.0 * a.acc_pct / n;
            a.f1_mean /= n;
            a.vs_mean /= n;
            a.mpd_mean /= n;
        }
        return a;
    }

    /// True when the stored aggregates match a recomputation from rows.
    bool consistent(double tol = 1e-9) const {
        const auto b = aggregate(rows);
        const auto& a = aggregates;
        auto near = [tol](double x, double y) { return std::abs(x - y) <= tol; };
        return a.total == b.total && a.scored == b.scored && a.failed == b.failed &&
               near(a.em_pct, b.em_pct) && near(a.f1_mean, b.f1_mean) && near(a.acc_pct, b.acc_pct) &&
               near(a.vs_mean, b.vs_mean) && near(a.mpd_mean, b.mpd_mean);
    }
};

struct EvalOptions {
    std::size_t jobs = 1;
    /// Score Acc as strict exact match instead of containment.
    bool strict_accuracy = false;
    PromptTemplates prompts;
};

/// Scores one finished pipeline run against its example.
inline EvalRow score_example(const QaExample& ex, const PipelineResult& run, bool strict_accuracy) {
    EvalRow row;
    row.example_id = ex.example_id;
    row.question = ex.question;
    row.gold = ex.gold_answer;
    row.ok = true;
    row.prediction = run.final_answer;
    row.em = exact_match(run.final_answer, ex.gold_answer, ex.aliases);
    row.f1 = token_f1(run.final_answer, ex.gold_answer, ex.aliases);
    row.acc = accuracy(run.final_answer, ex.gold_answer, ex.aliases, strict_accuracy);
    row.iterations = run.trace.size();
    row.terminated_by = to_string(run.terminated_by);
    const auto& sel = run.trace.back().selection;
    const auto emb = sel.embeddings();
    row.vs = sel.vs;
    row.mpd = emb.size() >= 2 ? max_pairwise_distance(emb) : 0.0;
    return row;
}

/// Runs the pipeline on every example. A failing example becomes an error row
/// and evaluation continues.
inline EvalReport evaluate_dataset(const std::vector<QaExample>& dataset, const VectorIndex& index,
                                   EmbeddingProvider& embedder, LlmProvider& llm,
                                   const PipelineConfig& config, const EvalOptions& options = {}) {
    if (dataset.empty()) throw InsufficientInputError("dataset is empty");
    config.validate();
    EvalReport report;
    report.rows.resize(dataset.size());
    parallel_for(dataset.size(), options.jobs, [&](std::size_t i) {
        const auto& ex = dataset[i];
        try {
            const auto run = run_pipeline(ex.question, index, embedder, llm, config, options.prompts);
            report.rows[i] = score_example(ex, run, options.strict_accuracy);
        } catch (const std::exception& e) {
            EvalRow row;
            row.example_id = ex.example_id;
            row.question = ex.question;
            row.gold = ex.gold_answer;
            row.error = e.what();
            report.rows[i] = std::move(row);
        }
    });
    report.aggregates = EvalReport::aggregate(report.rows);
    return report;
}

/// Deterministic sample of `n` items (all when n >= size), kept in input
/// order.
template <typename T>
std::vector<T> sample_items(std::vector<T> items, std::size_t n, std::uint64_t seed) {
    if (n >= items.size()) return items;
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(items.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    std::vector<T> out;
    for (auto i : idx) out.push_back(std::move(items[i]));
    return out;
}

// --- report formats -----------------------------------------------------------

inline nlohmann::json aggregates_to_json(const EvalAggregates& a) {
    return {{"total", a.total},     {"scored", a.scored},   {"failed", a.failed},
            {"em_pct", a.em_pct},   {"f1_mean", a.f1_mean}, {"acc_pct", a.acc_pct},
            {"vs_mean", a.vs_mean}, {"mpd_mean", a.mpd_mean}};
}

/// Full JSON report. `generated_at` is the only field that varies between
/// otherwise identical runs.
inline nlohmann::json report_to_json(const EvalReport& r, const nlohmann::json& config,
                                     const std::string& generated_at) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json j = {{"id", row.example_id}, {"status", row.ok ? "ok" : "error"}};
        if (row.ok) {
            j.update({{"prediction", row.prediction}, {"gold", row.gold}, {"em", row.em},
                      {"f1", row.f1}, {"acc", row.acc}, {"vs", row.vs}, {"mpd", row.mpd},
                      {"iterations", row.iterations}, {"terminated_by", row.terminated_by}});
        } else {
            j["error"] = row.error;
        }
        rows.push_back(std::move(j));
    }
    return {{"generated_at", generated_at},
            {"config", config},
            {"aggregates", aggregates_to_json(r.aggregates)},
            {"examples", rows}};
}

inline std::string format_fixed(double v, int precision = 6) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

/// `# key=value` provenance lines for CSV outputs.
inline std::string csv_header_comments(const nlohmann::json& config, const std::string& generated_at) {
    std::string out = "# generated_at=" + generated_at + "\n";
    for (const auto& [k, v] : config.items()) {
        out += "# " + k + "=" + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
    }
    return out;
}

inline std::string aggregates_to_csv(const EvalReport& r, const nlohmann::json& config,
                                     const std::string& generated_at) {
    const auto& a = r.aggregates;
    std::string out = csv_header_comments(config, generated_at);
    out += "total,scored,failed,em_pct,f1_mean,acc_pct,vs_mean,mpd_mean\n";
    out += std::to_string(a.total) + "," + std::to_string(a.scored) + "," + std::to_string(a.failed) + "," +
           format_fixed(a.em_pct) + "," + format_fixed(a.f1_mean) + "," + format_fixed(a.acc_pct) + "," +
           format_fixed(a.vs_mean) + "," + format_fixed(a.mpd_mean) + "\n";
    return out;
}

inline std::string sensitivity_to_csv(std::span<const SensitivityRow> rows, const nlohmann::json& config,
                                      const std::string& generated_at) {
    std::string out = csv_header_comments(config, generated_at);
    out += "s,tau,rho\n";
    for (const auto& r : rows) {
        out += format_fixed(r.s, 2) + "," + format_fixed(r.tau) + "," + format_fixed(r.rho) + "\n";
    }
    return out;
}

}  // namespace vendi
