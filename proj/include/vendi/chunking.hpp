// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vendi/error.hpp"

namespace vendi {

/// Splits text into tokens and joins them back. Chunk boundaries are counted
/// in tokens of this interface.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
    virtual std::string join(std::span<const std::string> tokens) const = 0;
};

class WhitespaceTokenizer final : public Tokenizer {
public:
    std::vector<std::string> tokenize(std::string_view text) const override {
        std::vector<std::string> out;
        std::size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            std::size_t j = i;
            while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
            if (j > i) out.emplace_back(text.substr(i, j - i));
            i = j;
        }
        return out;
    }

    std::string join(std::span<const std::string> tokens) const override {
        std::string out;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) out.push_back(' ');
            out += tokens[i];
        }
        return out;
    }
};

struct Chunk {
    std::string chunk_id;
    std::string doc_id;
    std::string title;
    std::string text;
    /// Half-open token range [token_begin, token_end) within the document.
    std::size_t token_begin = 0;
    std::size_t token_end = 0;

    std::size_t token_count() const noexcept { return token_end - token_begin; }

    friend bool operator==(const Chunk&, const Chunk&) = default;
};

struct ChunkOptions {
    std::size_t max_tokens = 512;
    std::size_t overlap = 50;
};

inline std::string make_chunk_id(std::string_view doc_id, std::size_t ordinal) {
    return std::string(doc_id) + "#" + std::to_string(ordinal);
}

/// Fixed-size sliding window over the token sequence. Consecutive chunks
/// share `overlap` tokens; the last chunk ends at the final token.
inline std::vector<Chunk> chunk_document(const std::string& doc_id, const std::string& title,
                                         std::string_view text, ChunkOptions opts = {},
                                         const Tokenizer& tokenizer = WhitespaceTokenizer{}) {
    if (opts.max_tokens == 0 || opts.overlap >= opts.max_tokens) {
        throw ConfigError("chunking requires max_tokens > overlap >= 0 (got max_tokens=" +
                          std::to_string(opts.max_tokens) +
                          ", overlap=" + std::to_string(opts.overlap) + ")");
    }
    const std::vector<std::string> tokens = tokenizer.tokenize(text);
    if (tokens.empty()) throw EmptyDocumentError("document '" + doc_id + "' has no tokens");

    const std::size_t stride = opts.max_tokens - opts.overlap;
    std::vector<Chunk> chunks;
    for (std::size_t begin = 0;; begin += stride) {
        const std::size_t end = std::min(begin + opts.max_tokens, tokens.size());
        Chunk c;
        c.chunk_id = make_chunk_id(doc_id, chunks.size());
        c.doc_id = doc_id;
        c.title = title;
        c.text = tokenizer.join(std::span<const std::string>(tokens).subspan(begin, end - begin));
        c.token_begin = begin;
        c.token_end = end;
        chunks.push_back(std::move(c));
        if (end == tokens.size()) break;
    }
    return chunks;
}

}  // namespace vendi
