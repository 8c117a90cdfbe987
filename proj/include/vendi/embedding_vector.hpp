// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "vendi/error.hpp"

namespace vendi {

/// Dense embedding. Always non-empty and finite.
class EmbeddingVector {
public:
    static constexpr double unit_tolerance = 1e-9;

    EmbeddingVector() = delete;

    explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) throw DimensionError("embedding must have dim >= 1");
        for (double v : values_) {
            if (!std::isfinite(v)) throw DegenerateEmbeddingError("embedding contains NaN or Inf");
        }
    }

    template <typename T>
    static EmbeddingVector from(std::span<const T> values) {
        return EmbeddingVector(std::vector<double>(values.begin(), values.end()));
    }

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    double norm() const noexcept {
        return std::sqrt(std::inner_product(values_.begin(), values_.end(), values_.begin(), 0.0));
    }

    bool is_unit() const noexcept { return std::abs(norm() - 1.0) <= unit_tolerance; }

    EmbeddingVector normalized() const {
        const double n = norm();
        if (!(n > 0.0)) throw DegenerateEmbeddingError("cannot normalize a zero-norm embedding");
        std::vector<double> out(values_.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i] / n;
        return EmbeddingVector(std::move(out));
    }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
    std::vector<double> values_;
};

inline double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) throw DimensionError("embedding dimensions differ");
    return std::inner_product(a.values().begin(), a.values().end(), b.values().begin(), 0.0);
}

/// Cosine similarity; both vectors must have nonzero norm.
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (!(na > 0.0) || !(nb > 0.0)) throw DegenerateEmbeddingError("zero-norm embedding");
    return dot(a, b) / (na * nb);
}

inline double euclidean_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) throw DimensionError("embedding dimensions differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace vendi
