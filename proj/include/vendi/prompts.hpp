// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>

#include "vendi/chunking.hpp"
#include "vendi/error.hpp"
#include "vendi/prompt_templates.hpp"

namespace vendi {

/// Prompt templates with `{name}` placeholders. Defaults are compiled in from
/// prompts/*.txt; a directory with files of the same names overrides them.
struct PromptTemplates {
    std::string judge{prompts::builtin::judge};
    std::string judge_format{prompts::builtin::judge_format};
    std::string judge_input{prompts::builtin::judge_input};
    std::string reasoning{prompts::builtin::reasoning};
    std::string answer{prompts::builtin::answer};
    std::string rewrite_query{prompts::builtin::rewrite_query};

    static PromptTemplates load_dir(const std::filesystem::path& dir) {
        if (!std::filesystem::is_directory(dir)) {
            throw IoError("prompt directory '" + dir.string() + "' does not exist");
        }
        PromptTemplates t;
        const std::pair<const char*, std::string*> files[] = {
            {"judge.txt", &t.judge},         {"judge_format.txt", &t.judge_format},
            {"judge_input.txt", &t.judge_input}, {"reasoning.txt", &t.reasoning},
            {"answer.txt", &t.answer},       {"rewrite_query.txt", &t.rewrite_query}};
        for (const auto& [name, slot] : files) {
            const auto p = dir / name;
            if (!std::filesystem::exists(p)) continue;
            std::ifstream in(p, std::ios::binary);
            if (!in) throw IoError("cannot read prompt file '" + p.string() + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            *slot = ss.str();
        }
        return t;
    }
};

/// Single-pass substitution of `{name}` for names present in `vars`. Other
/// braces are left untouched, and substituted text is not rescanned.
inline std::string render_template(std::string_view tmpl,
                                   const std::map<std::string, std::string, std::less<>>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto it = vars.find(tmpl.substr(i + 1, close - i - 1));
                if (it != vars.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

/// Documents in selection order, one titled block each.
inline std::string format_documents(std::span<const Chunk> documents) {
    std::string out;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        if (i) out += "\n\n";
        out += "Document [" + std::to_string(i + 1) + "] Title: " + documents[i].title + "\n";
        out += documents[i].text;
    }
    return out;
}

inline std::string format_reasoning_history(std::span<const std::string> history) {
    std::string out;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (i) out += "\n\n";
        out += "Step " + std::to_string(i + 1) + ":\n" + history[i];
    }
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace vendi
