// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "vendi/error.hpp"
#include "vendi/kernel.hpp"

namespace vendi {

struct EigenSpectrum {
    /// Sorted descending.
    std::vector<double> eigenvalues;
    /// Off-diagonal Frobenius norm at exit.
    double residual = 0.0;
    int sweeps = 0;

    double sum() const noexcept {
        double s = 0.0;
        for (double v : eigenvalues) s += v;
        return s;
    }
};

struct JacobiOptions {
    double tolerance = 1e-10;
    int max_sweeps = 100;
};

namespace detail {

inline double off_diagonal_norm(const std::vector<double>& a, std::size_t n) {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) s += a[p * n + q] * a[p * n + q];
    return std::sqrt(2.0 * s);
}

}  // namespace detail

/// Cyclic Jacobi eigenvalue iteration without PSD post-processing. Eigenvalues
/// are returned sorted descending.
inline EigenSpectrum jacobi_eigenvalues(const SymmetricMatrix& m, JacobiOptions opts = {}) {
    const std::size_t n = m.size();
    std::vector<double> a(m.entries().begin(), m.entries().end());
    EigenSpectrum out;

    double off = detail::off_diagonal_norm(a, n);
    while (off > opts.tolerance) {
        if (out.sweeps >= opts.max_sweeps) {
            throw ConvergenceError("Jacobi did not converge after " +
                                       std::to_string(opts.max_sweeps) +
                                       " sweeps (residual " + std::to_string(off) + ")",
                                   off);
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 0.5 / theta;
                } else {
                    t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    const double nkp = c * akp - s * akq;
                    const double nkq = s * akp + c * akq;
                    a[k * n + p] = a[p * n + k] = nkp;
                    a[k * n + q] = a[q * n + k] = nkq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = a[q * n + p] = 0.0;
            }
        }
        ++out.sweeps;
        off = detail::off_diagonal_norm(a, n);
    }
    out.residual = off;
    out.eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.eigenvalues[i] = a[i * n + i];
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), std::greater<>());
    return out;
}

/// Eigenvalues below this are a real PSD violation rather than rounding.
inline constexpr double psd_clamp_floor = -1e-8;

/// Spectrum of a PSD matrix: values in [-1e-8, 0) are clamped to 0, anything
/// lower raises NotPSDError.
inline EigenSpectrum symmetric_eigenvalues(const SymmetricMatrix& m, JacobiOptions opts = {}) {
    EigenSpectrum spec = jacobi_eigenvalues(m, opts);
    for (double& v : spec.eigenvalues) {
        if (v < psd_clamp_floor) {
            throw NotPSDError("matrix has eigenvalue " + std::to_string(v) + " < -1e-8");
        }
        if (v < 0.0) v = 0.0;
    }
    return spec;
}

inline EigenSpectrum symmetric_eigenvalues(const KernelMatrix& k, JacobiOptions opts = {}) {
    return symmetric_eigenvalues(k.matrix(), opts);
}

}  // namespace vendi
