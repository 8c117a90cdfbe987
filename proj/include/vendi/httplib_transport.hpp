// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <memory>
#include <string>

#include <httplib.h>

#include "vendi/error.hpp"
#include "vendi/http.hpp"

namespace vendi {

struct ParsedUrl {
    std::string scheme_host_port;
    std::string path;
};

inline ParsedUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint URL has no scheme: " + url);
    const auto path_begin = url.find('/', scheme_end + 3);
    if (path_begin == std::string::npos) return {url, "/"};
    return {url.substr(0, path_begin), url.substr(path_begin)};
}

/// HttpTransport backed by cpp-httplib. A new client is created per request,
/// which keeps the transport safe to share across threads.
class HttplibTransport final : public HttpTransport {
public:
    HttpResponse post_json(const std::string& url, const std::string& body,
                           const HttpHeaders& headers,
                           std::chrono::milliseconds timeout) override {
        const ParsedUrl parsed = split_url(url);
        httplib::Client client(parsed.scheme_host_port);
        if (!client.is_valid()) {
            return {0, {}, "unsupported endpoint (is TLS support compiled in?): " + url};
        }
        const auto secs = static_cast<time_t>(timeout.count() / 1000);
        const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);
        auto res = client.Post(parsed.path, h, body, "application/json");
        if (!res) return {0, {}, httplib::to_string(res.error())};
        return {res->status, res->body, {}};
    }
};

inline std::shared_ptr<HttpTransport> make_default_transport() {
    return std::make_shared<HttplibTransport>();
}

}  // namespace vendi
