// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace vendi {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define VENDI_DEFINE_ERROR(Name)            \
    class Name : public Error {             \
    public:                                 \
        using Error::Error;                 \
    }

VENDI_DEFINE_ERROR(DimensionError);
VENDI_DEFINE_ERROR(DegenerateEmbeddingError);
VENDI_DEFINE_ERROR(KernelInvariantError);
VENDI_DEFINE_ERROR(NotPSDError);
VENDI_DEFINE_ERROR(InsufficientInputError);
VENDI_DEFINE_ERROR(ConfigError);
VENDI_DEFINE_ERROR(EmptyDocumentError);
VENDI_DEFINE_ERROR(ProviderContractError);
VENDI_DEFINE_ERROR(EmptyIndexError);
VENDI_DEFINE_ERROR(IoError);
VENDI_DEFINE_ERROR(ContextOverflowError);
VENDI_DEFINE_ERROR(JudgeRangeError);
VENDI_DEFINE_ERROR(RangeError);
VENDI_DEFINE_ERROR(RankingMismatchError);

#undef VENDI_DEFINE_ERROR

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Remote provider failure. Carries enough to decide whether to retry.
class ProviderError : public Error {
public:
    ProviderError(const std::string& what, int attempts = 1, int http_status = 0,
                  bool retryable = false)
        : Error(what), attempts_(attempts), http_status_(http_status), retryable_(retryable) {}

    int attempts() const noexcept { return attempts_; }
    /// 0 when no HTTP response was received.
    int http_status() const noexcept { return http_status_; }
    bool retryable() const noexcept { return retryable_; }

private:
    int attempts_;
    int http_status_;
    bool retryable_;
};

/// Malformed persisted or input data. `offset` is a byte offset for binary
/// files and a 1-based line/record number for text formats.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t offset = 0)
        : Error(what), offset_(offset) {}
    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

class JudgeParseError : public Error {
public:
    JudgeParseError(const std::string& what, std::string raw)
        : Error(what), raw_(std::move(raw)) {}
    const std::string& raw_response() const noexcept { return raw_; }

private:
    std::string raw_;
};

}  // namespace vendi
