// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vendi/error.hpp"

namespace vendi {

struct QaContext {
    std::string title;
    std::string text;

    friend bool operator==(const QaContext&, const QaContext&) = default;
};

struct QaExample {
    std::string example_id;
    std::string question;
    std::string gold_answer;
    std::vector<QaContext> contexts;
    std::vector<std::string> aliases;
};

enum class DatasetFormat { hotpotqa, musique, two_wiki, generic_jsonl };

inline DatasetFormat parse_dataset_format(std::string_view s) {
    if (s == "hotpotqa") return DatasetFormat::hotpotqa;
    if (s == "musique") return DatasetFormat::musique;
    if (s == "2wiki" || s == "2wikimultihopqa") return DatasetFormat::two_wiki;
    if (s == "generic-jsonl" || s == "jsonl") return DatasetFormat::generic_jsonl;
    throw ConfigError("unknown dataset format '" + std::string(s) +
                      "' (expected hotpotqa|musique|2wiki|generic-jsonl)");
}

/// A corpus document for ingestion.
struct Document {
    std::string doc_id;
    std::string title;
    std::string text;
};

namespace detail {

/// JSON records of a file that is either one JSON array or JSON lines. The
/// second member is the 1-based line (JSONL) or record number (array).
inline std::vector<std::pair<nlohmann::json, std::uint64_t>> read_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();

    std::vector<std::pair<nlohmann::json, std::uint64_t>> out;
    const auto first = data.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && data[first] == '[') {
        nlohmann::json arr;
        try {
            arr = nlohmann::json::parse(data);
        } catch (const nlohmann::json::parse_error& e) {
            const auto line = 1 + std::count(data.begin(),
                                             data.begin() + static_cast<std::ptrdiff_t>(
                                                                std::min<std::size_t>(e.byte, data.size())),
                                             '\n');
            throw FormatError(path.string() + ":" + std::to_string(line) + ": invalid JSON",
                              static_cast<std::uint64_t>(line));
        }
        std::uint64_t n = 0;
        for (auto& r : arr) out.emplace_back(std::move(r), ++n);
        return out;
    }
    std::istringstream lines(data);
    std::string line;
    std::uint64_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.emplace_back(nlohmann::json::parse(line), lineno);
        } catch (const nlohmann::json::parse_error&) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": invalid JSON", lineno);
        }
    }
    return out;
}

class RecordReader {
public:
    RecordReader(const nlohmann::json& j, std::string where, std::uint64_t line)
        : j_(j), where_(std::move(where)), line_(line) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw FormatError(where_ + ": " + msg, line_);
    }

    const nlohmann::json& field(const char* name) const {
        if (!j_.is_object()) fail("record is not a JSON object");
        if (!j_.contains(name)) fail(std::string("missing field '") + name + "'");
        return j_[name];
    }

    bool has(const char* name) const { return j_.is_object() && j_.contains(name) && !j_[name].is_null(); }

    std::string string_field(const char* name, bool non_empty = false) const {
        const auto& v = field(name);
        std::string s;
        if (v.is_string()) s = v.get<std::string>();
        else if (v.is_number_integer()) s = std::to_string(v.get<long long>());
        else fail(std::string("field '") + name + "' must be a string");
        if (non_empty && s.find_first_not_of(" \t\r\n") == std::string::npos) {
            fail(std::string("field '") + name + "' is empty");
        }
        return s;
    }

    std::vector<std::string> string_list(const char* name) const {
        if (!has(name)) return {};
        const auto& v = field(name);
        if (!v.is_array()) fail(std::string("field '") + name + "' must be an array");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) fail(std::string("field '") + name + "' must contain strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

private:
    const nlohmann::json& j_;
    std::string where_;
    std::uint64_t line_;
};

/// Joins sentence lists, inserting a space only where none is present.
inline std::string join_sentences(const std::vector<std::string>& sentences) {
    std::string out;
    for (const auto& s : sentences) {
        if (!out.empty() && !s.empty() && !std::isspace(static_cast<unsigned char>(out.back())) &&
            !std::isspace(static_cast<unsigned char>(s.front()))) {
            out.push_back(' ');
        }
        out += s;
    }
    auto b = out.find_first_not_of(" \t\r\n");
    auto e = out.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : out.substr(b, e - b + 1);
}

/// HotpotQA / 2WikiMultiHopQA: "context": [[title, [sentence, ...]], ...].
inline std::vector<QaContext> title_sentence_contexts(const RecordReader& r) {
    std::vector<QaContext> out;
    if (!r.has("context")) return out;
    const auto& ctx = r.field("context");
    if (!ctx.is_array()) r.fail("field 'context' must be an array");
    for (const auto& p : ctx) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_string()) {
            r.fail("context entries must be [title, sentences]");
        }
        QaContext c;
        c.title = p[0].get<std::string>();
        if (p[1].is_string()) {
            c.text = p[1].get<std::string>();
        } else if (p[1].is_array()) {
            std::vector<std::string> sents;
            for (const auto& s : p[1]) {
                if (!s.is_string()) r.fail("context sentences must be strings");
                sents.push_back(s.get<std::string>());
            }
            c.text = join_sentences(sents);
        } else {
            r.fail("context sentences must be a list of strings");
        }
        out.push_back(std::move(c));
    }
    return out;
}

inline QaExample parse_record(const nlohmann::json& j, DatasetFormat fmt, const std::string& where,
                              std::uint64_t line) {
    const RecordReader r(j, where, line);
    QaExample ex;
    switch (fmt) {
        case DatasetFormat::generic_jsonl: {
            ex.example_id = r.string_field("id", true);
            if (r.has("contexts")) {
                const auto& ctx = r.field("contexts");
                if (!ctx.is_array()) r.fail("field 'contexts' must be an array");
                for (const auto& p : ctx) {
                    if (p.is_array() && p.size() == 2 && p[0].is_string() && p[1].is_string()) {
                        ex.contexts.push_back({p[0].get<std::string>(), p[1].get<std::string>()});
                    } else if (p.is_object() && p.contains("title") && p.contains("text")) {
                        ex.contexts.push_back({p["title"].get<std::string>(), p["text"].get<std::string>()});
                    } else {
                        r.fail("contexts entries must be [title, text]");
                    }
                }
            }
            ex.aliases = r.string_list("aliases");
            break;
        }
        case DatasetFormat::hotpotqa:
        case DatasetFormat::two_wiki:
            ex.example_id = r.string_field(r.has("_id") ? "_id" : "id", true);
            ex.contexts = title_sentence_contexts(r);
            break;
        case DatasetFormat::musique: {
            ex.example_id = r.string_field("id", true);
            ex.aliases = r.string_list("answer_aliases");
            if (r.has("paragraphs")) {
                const auto& ps = r.field("paragraphs");
                if (!ps.is_array()) r.fail("field 'paragraphs' must be an array");
                for (const auto& p : ps) {
                    const RecordReader pr(p, where, line);
                    ex.contexts.push_back({pr.string_field("title"), pr.string_field("paragraph_text")});
                }
            }
            break;
        }
    }
    ex.question = r.string_field("question", true);
    ex.gold_answer = r.string_field("answer", true);
    return ex;
}

}  // namespace detail

/// Loads a QA dataset and orders it by example_id.
inline std::vector<QaExample> load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    std::vector<QaExample> out;
    for (const auto& [rec, line] : detail::read_records(path)) {
        out.push_back(detail::parse_record(rec, format, path.string() + ":" + std::to_string(line), line));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const QaExample& a, const QaExample& b) { return a.example_id < b.example_id; });
    return out;
}

/// Corpus JSONL for ingestion: {"id", "title", "text"} per line.
inline std::vector<Document> load_corpus(const std::filesystem::path& path) {
    std::vector<Document> out;
    for (const auto& [rec, line] : detail::read_records(path)) {
        const detail::RecordReader r(rec, path.string() + ":" + std::to_string(line), line);
        Document d;
        d.doc_id = r.string_field("id", true);
        d.title = r.has("title") ? r.string_field("title") : std::string();
        d.text = r.string_field("text", true);
        out.push_back(std::move(d));
    }
    return out;
}

/// Distinct (title, text) contexts across a dataset, as corpus documents.
inline std::vector<Document> documents_from_dataset(const std::vector<QaExample>& examples) {
    std::vector<Document> out;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& ex : examples) {
        for (const auto& c : ex.contexts) {
            if (c.text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
            if (!seen.insert({c.title, c.text}).second) continue;
            out.push_back({"ctx" + std::to_string(out.size()), c.title, c.text});
        }
    }
    return out;
}

}  // namespace vendi
