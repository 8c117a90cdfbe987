// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vendi/embedding_vector.hpp"
#include "vendi/error.hpp"

namespace vendi {

/// Dense square matrix that is symmetric up to 1e-12. Stored row-major and
/// exactly symmetrized on construction.
class SymmetricMatrix {
public:
    static constexpr double symmetry_tolerance = 1e-12;

    SymmetricMatrix(std::size_t n, std::vector<double> entries)
        : n_(n), a_(std::move(entries)) {
        if (n_ == 0) throw DimensionError("matrix must have n >= 1");
        if (a_.size() != n_ * n_) {
            throw DimensionError("expected " + std::to_string(n_ * n_) + " entries, got " +
                                 std::to_string(a_.size()));
        }
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i + 1; j < n_; ++j) {
                const double x = a_[i * n_ + j];
                const double y = a_[j * n_ + i];
                if (!std::isfinite(x) || !std::isfinite(y)) {
                    throw KernelInvariantError("matrix has non-finite entries");
                }
                if (std::abs(x - y) > symmetry_tolerance) {
                    throw KernelInvariantError("matrix is not symmetric at (" + std::to_string(i) +
                                               ", " + std::to_string(j) + ")");
                }
                a_[i * n_ + j] = a_[j * n_ + i] = 0.5 * (x + y);
            }
        }
    }

    static SymmetricMatrix identity(std::size_t n) {
        std::vector<double> e(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) e[i * n + i] = 1.0;
        return {n, std::move(e)};
    }

    static SymmetricMatrix constant(std::size_t n, double value) {
        return {n, std::vector<double>(n * n, value)};
    }

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
    std::span<const double> entries() const noexcept { return a_; }

    SymmetricMatrix scaled(double factor) const {
        std::vector<double> e(a_);
        for (double& x : e) x *= factor;
        return {n_, std::move(e)};
    }

    double trace() const noexcept {
        double t = 0.0;
        for (std::size_t i = 0; i < n_; ++i) t += a_[i * n_ + i];
        return t;
    }

    friend bool operator==(const SymmetricMatrix&, const SymmetricMatrix&) = default;

private:
    std::size_t n_;
    std::vector<double> a_;
};

/// Similarity kernel over a document set: symmetric, unit diagonal, entries
/// in [-1, 1].
class KernelMatrix {
public:
    static constexpr double diagonal_tolerance = 1e-9;
    static constexpr double range_slack = 1e-9;

    explicit KernelMatrix(SymmetricMatrix m) : m_(std::move(m)) {
        const std::size_t n = m_.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(m_(i, i) - 1.0) > diagonal_tolerance) {
                throw KernelInvariantError("kernel diagonal entry " + std::to_string(i) +
                                           " is not 1");
            }
            for (std::size_t j = 0; j < n; ++j) {
                if (std::abs(m_(i, j)) > 1.0 + range_slack) {
                    throw KernelInvariantError("kernel entry outside [-1, 1]");
                }
            }
        }
    }

    KernelMatrix(std::size_t n, std::vector<double> entries)
        : KernelMatrix(SymmetricMatrix(n, std::move(entries))) {}

    std::size_t size() const noexcept { return m_.size(); }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    const SymmetricMatrix& matrix() const noexcept { return m_; }

    /// K / n, whose spectrum sums to 1.
    SymmetricMatrix normalized() const { return m_.scaled(1.0 / static_cast<double>(size())); }

private:
    SymmetricMatrix m_;
};

/// K_ij = <v_i, v_j> / (|v_i| |v_j|).
inline KernelMatrix cosine_kernel(std::span<const EmbeddingVector> embeddings) {
    const std::size_t n = embeddings.size();
    if (n == 0) throw InsufficientInputError("cosine kernel needs at least one embedding");
    const std::size_t dim = embeddings[0].dim();
    std::vector<double> inv_norm(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (embeddings[i].dim() != dim) {
            throw DimensionError("embedding " + std::to_string(i) + " has dim " +
                                 std::to_string(embeddings[i].dim()) + ", expected " +
                                 std::to_string(dim));
        }
        const double norm = embeddings[i].norm();
        if (!(norm > 0.0)) {
            throw DegenerateEmbeddingError("embedding " + std::to_string(i) + " has zero norm");
        }
        inv_norm[i] = 1.0 / norm;
    }
    std::vector<double> k(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        k[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double c =
                std::clamp(dot(embeddings[i], embeddings[j]) * inv_norm[i] * inv_norm[j], -1.0, 1.0);
            k[i * n + j] = k[j * n + i] = c;
        }
    }
    return KernelMatrix(n, std::move(k));
}

inline KernelMatrix cosine_kernel(const std::vector<EmbeddingVector>& embeddings) {
    return cosine_kernel(std::span<const EmbeddingVector>(embeddings));
}

}  // namespace vendi
