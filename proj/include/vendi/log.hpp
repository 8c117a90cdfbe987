// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string_view>

namespace vendi {

enum class LogLevel { debug, info, warn, error };

using LogSink = std::function<void(LogLevel, std::string_view)>;

namespace detail {

inline std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

inline LogSink& log_sink() {
    static LogSink sink = [](LogLevel level, std::string_view msg) {
        if (level == LogLevel::debug) return;
        static constexpr const char* names[] = {"debug", "info", "warn", "error"};
        std::clog << "[vendi " << names[static_cast<int>(level)] << "] " << msg << '\n';
    };
    return sink;
}

}  // namespace detail

/// Replace the process-wide log sink. Returns the previous one.
inline LogSink set_log_sink(LogSink sink) {
    std::lock_guard lock(detail::log_mutex());
    std::swap(detail::log_sink(), sink);
    return sink;
}

inline void log(LogLevel level, std::string_view msg) {
    std::lock_guard lock(detail::log_mutex());
    if (detail::log_sink()) detail::log_sink()(level, msg);
}

inline void log_info(std::string_view msg) { log(LogLevel::info, msg); }
inline void log_warn(std::string_view msg) { log(LogLevel::warn, msg); }

}  // namespace vendi
