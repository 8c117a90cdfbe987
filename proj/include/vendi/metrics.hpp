// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vendi {

/// SQuAD-style answer normalization: lowercase, drop ASCII punctuation (no
/// space inserted), drop the articles a/an/the, collapse whitespace.
inline std::string normalize_answer(std::string_view text) {
    std::string stripped;
    stripped.reserve(text.size());
    for (unsigned char c : text) {
        if (c < 0x80 && std::ispunct(c)) continue;
        stripped.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
    std::string out;
    std::size_t i = 0;
    while (i < stripped.size()) {
        while (i < stripped.size() && std::isspace(static_cast<unsigned char>(stripped[i]))) ++i;
        std::size_t j = i;
        while (j < stripped.size() && !std::isspace(static_cast<unsigned char>(stripped[j]))) ++j;
        if (j > i) {
            const std::string_view tok(stripped.data() + i, j - i);
            if (tok != "a" && tok != "an" && tok != "the") {
                if (!out.empty()) out.push_back(' ');
                out += tok;
            }
        }
        i = j;
    }
    return out;
}

inline std::vector<std::string> normalized_tokens(std::string_view text) {
    std::vector<std::string> toks;
    const std::string n = normalize_answer(text);
    std::size_t i = 0;
    while (i < n.size()) {
        const auto sp = n.find(' ', i);
        const auto end = sp == std::string::npos ? n.size() : sp;
        toks.emplace_back(n.substr(i, end - i));
        i = end + 1;
    }
    return toks;
}

inline int exact_match(std::string_view prediction, std::string_view gold,
                       std::span<const std::string> aliases = {}) {
    const std::string p = normalize_answer(prediction);
    if (p == normalize_answer(gold)) return 1;
    for (const auto& a : aliases)
        if (p == normalize_answer(a)) return 1;
    return 0;
}

/// Token-level F1 over normalized token multisets.
inline double token_f1(std::string_view prediction, std::string_view gold) {
    const auto p = normalized_tokens(prediction);
    const auto g = normalized_tokens(gold);
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;
    std::map<std::string_view, int> counts;
    for (const auto& t : g) ++counts[t];
    int common = 0;
    for (const auto& t : p) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) return 0.0;
    const double precision = static_cast<double>(common) / static_cast<double>(p.size());
    const double recall = static_cast<double>(common) / static_cast<double>(g.size());
    return 2.0 * precision * recall / (precision + recall);
}

/// Best F1 against the gold answer and its aliases.
inline double token_f1(std::string_view prediction, std::string_view gold,
                       std::span<const std::string> aliases) {
    double best = token_f1(prediction, gold);
    for (const auto& a : aliases) best = std::max(best, token_f1(prediction, a));
    return best;
}

namespace detail {

inline bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace detail

/// 1 iff the normalized gold answer (or an alias) appears as a contiguous
/// token run in the normalized prediction. A gold answer that normalizes to
/// nothing falls back to exact match. With `strict`, this is exact match.
inline int accuracy(std::string_view prediction, std::string_view gold,
                    std::span<const std::string> aliases = {}, bool strict = false) {
    if (exact_match(prediction, gold, aliases)) return 1;
    if (strict) return 0;
    const auto p = normalized_tokens(prediction);
    if (detail::contains_run(p, normalized_tokens(gold))) return 1;
    for (const auto& a : aliases)
        if (detail::contains_run(p, normalized_tokens(a))) return 1;
    return 0;
}

}  // namespace vendi
