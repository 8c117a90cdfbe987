// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <chrono>
#include <cstdlib>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "vendi/error.hpp"

namespace vendi {

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
    /// 0 when the request never produced a response (connect error, timeout).
    int status = 0;
    std::string body;
    std::string error;
};

/// Minimal POST-only transport so providers can be exercised against fakes.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post_json(const std::string& url, const std::string& body,
                                   const HttpHeaders& headers,
                                   std::chrono::milliseconds timeout) = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{200};
    double backoff_multiplier = 2.0;
};

inline bool is_retryable_status(int status) {
    return status == 0 || status == 408 || status == 429 || status >= 500;
}

/// Caps concurrent requests issued through one provider instance.
class InFlightLimiter {
public:
    explicit InFlightLimiter(int max_in_flight)
        : sem_(max_in_flight < 1 ? 1 : (max_in_flight > 1024 ? 1024 : max_in_flight)) {}

    class Permit {
    public:
        explicit Permit(std::counting_semaphore<1024>& s) : s_(&s) { s_->acquire(); }
        Permit(const Permit&) = delete;
        Permit& operator=(const Permit&) = delete;
        ~Permit() { s_->release(); }

    private:
        std::counting_semaphore<1024>* s_;
    };

    Permit acquire() { return Permit(sem_); }

private:
    std::counting_semaphore<1024> sem_;
};

/// POST with retries on transport errors, 408, 429 and 5xx. Returns the first
/// 2xx response or throws ProviderError describing the last attempt.
inline HttpResponse post_with_retry(HttpTransport& transport, const std::string& url,
                                    const std::string& body, const HttpHeaders& headers,
                                    std::chrono::milliseconds timeout, const RetryPolicy& retry,
                                    const std::string& what) {
    auto backoff = retry.initial_backoff;
    const int attempts = retry.max_attempts < 1 ? 1 : retry.max_attempts;
    HttpResponse last;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        last = transport.post_json(url, body, headers, timeout);
        if (last.status >= 200 && last.status < 300) return last;
        const bool retryable = is_retryable_status(last.status);
        if (!retryable || attempt == attempts) {
            std::string msg = what + " failed after " + std::to_string(attempt) + " attempt(s): ";
            msg += last.status == 0 ? (last.error.empty() ? "no response" : last.error)
                                    : "HTTP " + std::to_string(last.status);
            if (last.status != 0 && !last.body.empty()) msg += ": " + last.body.substr(0, 200);
            throw ProviderError(msg, attempt, last.status, retryable);
        }
        if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
        backoff = std::chrono::milliseconds(
            static_cast<long long>(static_cast<double>(backoff.count()) * retry.backoff_multiplier));
    }
    return last;
}

inline std::optional<std::string> env_var(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

}  // namespace vendi
