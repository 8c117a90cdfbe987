// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vendi/error.hpp"

namespace vendi {

/// Fractional ranks (1-based); tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

namespace detail {

inline std::uint64_t pairs(std::uint64_t n) { return n * (n - 1) / 2; }

/// Sum of t(t-1)/2 over runs of equal adjacent values in a sorted range.
template <typename It, typename Eq>
std::uint64_t tied_pairs(It first, It last, Eq eq) {
    std::uint64_t total = 0;
    while (first != last) {
        It run = first;
        std::uint64_t len = 0;
        while (run != last && eq(*run, *first)) {
            ++run;
            ++len;
        }
        total += pairs(len);
        first = run;
    }
    return total;
}

/// Merge sort counting inversions (strict a[i] > a[j], i < j).
inline std::uint64_t sort_count_swaps(std::vector<double>& a, std::vector<double>& buf,
                                      std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t swaps = sort_count_swaps(a, buf, lo, mid) + sort_count_swaps(a, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (a[j] < a[i]) {
            swaps += mid - i;
            buf[k++] = a[j++];
        } else {
            buf[k++] = a[i++];
        }
    }
    while (i < mid) buf[k++] = a[i++];
    while (j < hi) buf[k++] = a[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              a.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

}  // namespace detail

/// Kendall tau-b (tie-corrected), O(n log n) via Knight's algorithm. Returns 0
/// when either side is constant, where tau-b is undefined.
inline double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw RankingMismatchError("Kendall tau needs equal-length inputs");
    const std::size_t n = x.size();
    if (n < 2) throw InsufficientInputError("Kendall tau needs at least 2 observations");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
    });
    const std::uint64_t n0 = detail::pairs(n);
    const std::uint64_t ties_x =
        detail::tied_pairs(order.begin(), order.end(), [&](auto a, auto b) { return x[a] == x[b]; });
    const std::uint64_t ties_xy = detail::tied_pairs(
        order.begin(), order.end(), [&](auto a, auto b) { return x[a] == x[b] && y[a] == y[b]; });

    std::vector<double> ys(n), buf(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
    const std::uint64_t swaps = detail::sort_count_swaps(ys, buf, 0, n);
    const std::uint64_t ties_y =
        detail::tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });

    const double denom = std::sqrt(static_cast<double>(n0 - ties_x) * static_cast<double>(n0 - ties_y));
    if (denom == 0.0) return 0.0;
    const double num = static_cast<double>(n0) - static_cast<double>(ties_x) -
                       static_cast<double>(ties_y) + static_cast<double>(ties_xy) -
                       2.0 * static_cast<double>(swaps);
    return std::clamp(num / denom, -1.0, 1.0);
}

/// Spearman rho: Pearson correlation of average ranks. Returns 0 when either
/// side is constant.
inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw RankingMismatchError("Spearman rho needs equal-length inputs");
    if (x.size() < 2) throw InsufficientInputError("Spearman rho needs at least 2 observations");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double mean = 0.5 * static_cast<double>(x.size() + 1);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct RankCorrelation {
    double tau = 0.0;
    double rho = 0.0;
};

/// Agreement between two orderings of the same id set.
inline RankCorrelation rank_correlations(std::span<const std::string> baseline,
                                         std::span<const std::string> test) {
    if (baseline.size() != test.size()) {
        throw RankingMismatchError("rankings have different lengths (" + std::to_string(baseline.size()) +
                                   " vs " + std::to_string(test.size()) + ")");
    }
    if (baseline.size() < 2) throw InsufficientInputError("rank correlation needs at least 2 ids");
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        if (!pos.emplace(baseline[i], i).second) {
            throw RankingMismatchError("baseline ranking repeats id '" + baseline[i] + "'");
        }
    }
    std::vector<double> x(test.size()), y(test.size());
    std::vector<bool> hit(baseline.size(), false);
    for (std::size_t i = 0; i < test.size(); ++i) {
        auto it = pos.find(test[i]);
        if (it == pos.end()) throw RankingMismatchError("id '" + test[i] + "' missing from baseline");
        if (hit[it->second]) throw RankingMismatchError("test ranking repeats id '" + test[i] + "'");
        hit[it->second] = true;
        x[i] = static_cast<double>(it->second);
        y[i] = static_cast<double>(i);
    }
    return {kendall_tau_b(x, y), spearman_rho(x, y)};
}

}  // namespace vendi
