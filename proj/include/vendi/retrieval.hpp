// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "vendi/embedding_vector.hpp"
#include "vendi/error.hpp"
#include "vendi/index.hpp"
#include "vendi/kernel.hpp"
#include "vendi/vendi_score.hpp"

namespace vendi {

enum class RetrievalStrategy { similarity, mmr, vendi };

inline std::string to_string(RetrievalStrategy s) {
    switch (s) {
        case RetrievalStrategy::similarity: return "ss";
        case RetrievalStrategy::mmr: return "mmr";
        case RetrievalStrategy::vendi: return "vendi";
    }
    return "?";
}

inline RetrievalStrategy parse_strategy(std::string_view s) {
    if (s == "ss" || s == "similarity") return RetrievalStrategy::similarity;
    if (s == "mmr") return RetrievalStrategy::mmr;
    if (s == "vendi") return RetrievalStrategy::vendi;
    throw ConfigError("unknown retrieval strategy '" + std::string(s) + "' (expected ss|mmr|vendi)");
}

struct RetrievalConfig {
    RetrievalStrategy strategy = RetrievalStrategy::vendi;
    /// Diversity weight in the VRS objective.
    double s = 0.8;
    std::size_t pool_size = 50;
    std::size_t select_k = 10;
    double mmr_lambda = 0.5;
    /// Mix the unnormalized VS (range [1, k]) into the VRS instead of (VS-1)/(k-1).
    bool raw_vs = false;

    void validate() const {
        if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("s must be in [0, 1]");
        if (!(mmr_lambda >= 0.0 && mmr_lambda <= 1.0)) throw ConfigError("mmr_lambda must be in [0, 1]");
        if (pool_size == 0 || select_k == 0) throw ConfigError("pool size and k must be >= 1");
        if (select_k > pool_size) throw ConfigError("k must not exceed the pool size");
    }
};

/// A pooled document with its embedding and query similarity.
struct Candidate {
    Chunk chunk;
    EmbeddingVector embedding;
    double similarity = 0.0;
};

struct SelectionStep {
    std::string chunk_id;
    /// Objective value of the selected set after adding this candidate.
    double score = 0.0;
    /// Increase of the objective over the set before adding it.
    double marginal = 0.0;
};

struct VrsBreakdown {
    double vrs = 0.0;
    double vs = 1.0;
    double vs_norm = 0.0;
    double ss = 0.0;
};

struct SelectionResult {
    std::vector<Candidate> selected;
    double s = 0.0;
    bool raw_vs = false;
    double vs = 1.0;
    double vs_norm = 0.0;
    double ss = 0.0;
    double vrs = 0.0;
    std::vector<SelectionStep> per_step_log;

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        for (const auto& c : selected) out.push_back(c.chunk.chunk_id);
        return out;
    }

    std::vector<EmbeddingVector> embeddings() const {
        std::vector<EmbeddingVector> out;
        for (const auto& c : selected) out.push_back(c.embedding);
        return out;
    }
};

/// (VS - 1) / (k - 1), or 0 for a single document.
inline double normalize_vs(double vs, std::size_t k) {
    return k >= 2 ? (vs - 1.0) / static_cast<double>(k - 1) : 0.0;
}

inline double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

/// Mean query-document cosine, each term clamped to [0, 1].
inline double similarity_score(const EmbeddingVector& query,
                               std::span<const EmbeddingVector> selection) {
    if (selection.empty()) throw InsufficientInputError("similarity score of an empty selection");
    double sum = 0.0;
    for (const auto& d : selection) sum += clamp_unit(cosine_similarity(query, d));
    return sum / static_cast<double>(selection.size());
}

inline VrsBreakdown vrs_from_parts(double vs, std::size_t k, double ss, double s, bool raw_vs) {
    VrsBreakdown b;
    b.vs = vs;
    b.vs_norm = normalize_vs(vs, k);
    b.ss = ss;
    b.vrs = s * (raw_vs ? vs : b.vs_norm) + (1.0 - s) * ss;
    return b;
}

/// VRS = s * VS_norm + (1 - s) * SS for one candidate set.
inline VrsBreakdown vendi_retrieval_score(const EmbeddingVector& query,
                                          std::span<const EmbeddingVector> selection, double s,
                                          bool raw_vs = false) {
    if (selection.empty()) throw InsufficientInputError("VRS of an empty selection");
    if (!(s >= 0.0 && s <= 1.0)) throw RangeError("s must be in [0, 1]");
    const double ss = similarity_score(query, selection);
    const double vs = vendi_score(selection);
    return vrs_from_parts(vs, selection.size(), ss, s, raw_vs);
}

namespace detail {

/// Pairwise cosine over the pool, computed once per selection run.
class PoolKernel {
public:
    explicit PoolKernel(std::span<const Candidate> pool) : n_(pool.size()), k_(n_ * n_, 1.0) {
        std::vector<EmbeddingVector> e;
        e.reserve(n_);
        for (const auto& c : pool) e.push_back(c.embedding);
        const KernelMatrix km = cosine_kernel(e);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) k_[i * n_ + j] = km(i, j);
    }

    double operator()(std::size_t i, std::size_t j) const { return k_[i * n_ + j]; }

    double vendi(std::span<const std::size_t> members) const {
        const std::size_t m = members.size();
        if (m == 1) return 1.0;
        std::vector<double> sub(m * m);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) sub[a * m + b] = k_[members[a] * n_ + members[b]];
        return vendi_score(KernelMatrix(m, std::move(sub)));
    }

private:
    std::size_t n_;
    std::vector<double> k_;
};

/// True when candidate `a` (with objective `sa`) ranks ahead of `b`.
inline bool ahead(double sa, const Candidate& a, double sb, const Candidate& b) {
    if (sa != sb) return sa > sb;
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.chunk.chunk_id < b.chunk.chunk_id;
}

inline void fill_set_scores(SelectionResult& r, std::span<const Candidate> pool,
                            const PoolKernel& kernel, std::span<const std::size_t> members,
                            double s, bool raw_vs) {
    double ss = 0.0;
    for (auto i : members) ss += clamp_unit(pool[i].similarity);
    ss /= static_cast<double>(members.size());
    const auto b = vrs_from_parts(kernel.vendi(members), members.size(), ss, s, raw_vs);
    r.s = s;
    r.raw_vs = raw_vs;
    r.vs = b.vs;
    r.vs_norm = b.vs_norm;
    r.ss = b.ss;
    r.vrs = b.vrs;
    for (auto i : members) r.selected.push_back(pool[i]);
}

}  // namespace detail

/// Greedy VRS maximization over a candidate pool: seed with the most
/// query-similar candidate, then repeatedly add the candidate whose addition
/// gives the highest VRS. Ties go to higher similarity, then smaller chunk_id.
inline SelectionResult greedy_vendi_selection(std::span<const Candidate> pool, std::size_t k,
                                              double s, bool raw_vs = false) {
    if (pool.empty()) throw EmptyIndexError("candidate pool is empty");
    if (!(s >= 0.0 && s <= 1.0)) throw RangeError("s must be in [0, 1]");
    k = std::min(k, pool.size());
    const detail::PoolKernel kernel(pool);

    std::vector<std::size_t> chosen;
    std::vector<bool> used(pool.size(), false);
    double ss_sum = 0.0;
    double current = 0.0;
    SelectionResult result;

    while (chosen.size() < k) {
        std::size_t best = pool.size();
        double best_score = 0.0;
        const std::size_t size = chosen.size() + 1;
        std::vector<std::size_t> members = chosen;
        members.push_back(0);
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (used[i]) continue;
            const double ss = (ss_sum + clamp_unit(pool[i].similarity)) / static_cast<double>(size);
            double score;
            if (chosen.empty() || s == 0.0) {
                // VS of a singleton is constant, and at s = 0 it has no weight.
                score = s == 0.0 ? ss : vrs_from_parts(1.0, size, ss, s, raw_vs).vrs;
            } else {
                members.back() = i;
                score = vrs_from_parts(kernel.vendi(members), size, ss, s, raw_vs).vrs;
            }
            if (best == pool.size() || detail::ahead(score, pool[i], best_score, pool[best])) {
                best = i;
                best_score = score;
            }
        }
        used[best] = true;
        chosen.push_back(best);
        ss_sum += clamp_unit(pool[best].similarity);
        result.per_step_log.push_back({pool[best].chunk.chunk_id, best_score, best_score - current});
        current = best_score;
    }
    detail::fill_set_scores(result, pool, kernel, chosen, s, raw_vs);
    return result;
}

/// Maximal marginal relevance: argmax of
/// lambda * sim(q, c) - (1 - lambda) * max_{d in S} sim(c, d).
inline SelectionResult mmr_selection(std::span<const Candidate> pool, std::size_t k, double lambda,
                                     double s_for_report = 0.0, bool raw_vs = false) {
    if (pool.empty()) throw EmptyIndexError("candidate pool is empty");
    k = std::min(k, pool.size());
    const detail::PoolKernel kernel(pool);
    std::vector<std::size_t> chosen;
    std::vector<double> max_sim(pool.size(), -std::numeric_limits<double>::infinity());
    std::vector<bool> used(pool.size(), false);
    SelectionResult result;
    double current = 0.0;

    while (chosen.size() < k) {
        std::size_t best = pool.size();
        double best_score = 0.0;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (used[i]) continue;
            const double redundancy = chosen.empty() ? 0.0 : max_sim[i];
            const double score = lambda * pool[i].similarity - (1.0 - lambda) * redundancy;
            if (best == pool.size() || detail::ahead(score, pool[i], best_score, pool[best])) {
                best = i;
                best_score = score;
            }
        }
        used[best] = true;
        chosen.push_back(best);
        for (std::size_t i = 0; i < pool.size(); ++i) max_sim[i] = std::max(max_sim[i], kernel(i, best));
        result.per_step_log.push_back({pool[best].chunk.chunk_id, best_score, best_score - current});
        current = best_score;
    }
    detail::fill_set_scores(result, pool, kernel, chosen, s_for_report, raw_vs);
    return result;
}

/// First k candidates of a pool already sorted by similarity.
inline SelectionResult similarity_selection(std::span<const Candidate> pool, std::size_t k,
                                            double s_for_report = 0.0, bool raw_vs = false) {
    if (pool.empty()) throw EmptyIndexError("candidate pool is empty");
    k = std::min(k, pool.size());
    const detail::PoolKernel kernel(pool);
    SelectionResult result;
    std::vector<std::size_t> chosen;
    double ss_sum = 0.0;
    double current = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        chosen.push_back(i);
        ss_sum += clamp_unit(pool[i].similarity);
        const double score = ss_sum / static_cast<double>(i + 1);
        result.per_step_log.push_back({pool[i].chunk.chunk_id, score, score - current});
        current = score;
    }
    detail::fill_set_scores(result, pool, kernel, chosen, s_for_report, raw_vs);
    return result;
}

/// Top-M similarity pool from the index, as candidates.
inline std::vector<Candidate> retrieve_pool(const VectorIndex& index, const EmbeddingVector& query,
                                            std::size_t pool_size,
                                            const std::unordered_set<std::string>& exclude = {}) {
    std::vector<Candidate> pool;
    for (auto& h : index.search(query, pool_size, exclude)) {
        pool.push_back({std::move(h.entry.chunk), VectorIndex::to_embedding(h.entry.vector),
                        h.similarity});
    }
    if (pool.empty()) throw EmptyIndexError("no candidates left after exclusions");
    return pool;
}

inline SelectionResult select_documents(const VectorIndex& index, const EmbeddingVector& query,
                                        const RetrievalConfig& config,
                                        const std::unordered_set<std::string>& exclude = {}) {
    config.validate();
    const auto pool = retrieve_pool(index, query, config.pool_size, exclude);
    switch (config.strategy) {
        case RetrievalStrategy::similarity:
            return similarity_selection(pool, config.select_k, config.s, config.raw_vs);
        case RetrievalStrategy::mmr:
            return mmr_selection(pool, config.select_k, config.mmr_lambda, config.s, config.raw_vs);
        case RetrievalStrategy::vendi:
            return greedy_vendi_selection(pool, config.select_k, config.s, config.raw_vs);
    }
    throw ConfigError("unknown retrieval strategy");
}

inline SelectionResult select_vendi(const VectorIndex& index, const EmbeddingVector& query,
                                    const RetrievalConfig& config) {
    if (config.strategy != RetrievalStrategy::vendi) throw ConfigError("select_vendi needs strategy vendi");
    return select_documents(index, query, config);
}

inline SelectionResult select_mmr(const VectorIndex& index, const EmbeddingVector& query,
                                  const RetrievalConfig& config) {
    if (config.strategy != RetrievalStrategy::mmr) throw ConfigError("select_mmr needs strategy mmr");
    return select_documents(index, query, config);
}

}  // namespace vendi
