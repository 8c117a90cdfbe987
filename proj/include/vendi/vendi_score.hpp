// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "vendi/eigen.hpp"
#include "vendi/embedding_vector.hpp"
#include "vendi/error.hpp"
#include "vendi/kernel.hpp"

namespace vendi {

/// Shannon entropy (natural log) of a spectrum after renormalizing it to sum
/// to 1. Zero eigenvalues contribute nothing.
inline double spectral_entropy(std::span<const double> eigenvalues) {
    double total = 0.0;
    for (double v : eigenvalues) total += v;
    if (!(total > 0.0)) throw NotPSDError("spectrum has no positive mass");
    double h = 0.0;
    for (double v : eigenvalues) {
        if (v <= 0.0) continue;
        const double p = v / total;
        h -= p * std::log(p);
    }
    return h;
}

/// Vendi Score: exp of the entropy of the eigenvalues of K / n. Ranges from 1
/// (all documents identical) to n (mutually orthogonal).
inline double vendi_score(const KernelMatrix& kernel) {
    if (kernel.size() == 1) return 1.0;
    const EigenSpectrum spec = symmetric_eigenvalues(kernel.normalized());
    return std::exp(spectral_entropy(spec.eigenvalues));
}

inline double vendi_score(std::span<const EmbeddingVector> embeddings) {
    return vendi_score(cosine_kernel(embeddings));
}

/// Largest Euclidean distance over all unordered pairs.
inline double max_pairwise_distance(std::span<const EmbeddingVector> embeddings) {
    if (embeddings.size() < 2) {
        throw InsufficientInputError("max pairwise distance needs at least 2 embeddings");
    }
    double best = 0.0;
    for (std::size_t i = 0; i < embeddings.size(); ++i)
        for (std::size_t j = i + 1; j < embeddings.size(); ++j)
            best = std::max(best, euclidean_distance(embeddings[i], embeddings[j]));
    return best;
}

}  // namespace vendi
