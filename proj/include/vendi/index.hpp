// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "vendi/chunking.hpp"
#include "vendi/embedder.hpp"
#include "vendi/embedding_vector.hpp"
#include "vendi/error.hpp"
#include "vendi/log.hpp"

namespace vendi {

struct IndexMetadata {
    std::string corpus;
    /// EmbeddingProviderSpec::fingerprint() of the provider that built the index.
    std::string provider_fingerprint;

    friend bool operator==(const IndexMetadata&, const IndexMetadata&) = default;
};

struct ScoredId {
    std::string chunk_id;
    double similarity = 0.0;
};

/// Exact cosine index over chunks. Vectors are stored as f32, which is also
/// the on-disk representation. Reader-writer locked: concurrent queries, one
/// writer at a time.
class VectorIndex {
public:
    struct Entry {
        Chunk chunk;
        std::vector<float> vector;

        friend bool operator==(const Entry&, const Entry&) = default;
    };

    struct Hit {
        Entry entry;
        double similarity = 0.0;
    };

    explicit VectorIndex(IndexMetadata metadata = {}, std::size_t dim = 0)
        : metadata_(std::move(metadata)), dim_(dim) {}

    VectorIndex(const VectorIndex& other) {
        std::shared_lock lock(other.mutex_);
        copy_from(other);
    }
    VectorIndex(VectorIndex&& other) noexcept {
        std::unique_lock lock(other.mutex_);
        move_from(std::move(other));
    }
    VectorIndex& operator=(const VectorIndex& other) {
        if (this == &other) return *this;
        std::scoped_lock lock(mutex_, other.mutex_);
        copy_from(other);
        return *this;
    }
    VectorIndex& operator=(VectorIndex&& other) noexcept {
        if (this == &other) return *this;
        std::scoped_lock lock(mutex_, other.mutex_);
        move_from(std::move(other));
        return *this;
    }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return entries_.size();
    }
    bool empty() const { return size() == 0; }
    std::size_t dim() const {
        std::shared_lock lock(mutex_);
        return dim_;
    }
    IndexMetadata metadata() const {
        std::shared_lock lock(mutex_);
        return metadata_;
    }
    void set_metadata(IndexMetadata m) {
        std::unique_lock lock(mutex_);
        metadata_ = std::move(m);
    }

    /// Tolerance on |norm - 1| for stored f32 vectors.
    static constexpr double unit_tolerance_f32 = 1e-6;

    /// Inserts or replaces entries (last write wins). Returns how many
    /// existing chunk ids were overwritten. The batch is validated as a whole
    /// before anything is written.
    std::size_t upsert(std::vector<Entry> batch) {
        std::unique_lock lock(mutex_);
        const std::size_t dim = dim_ != 0 ? dim_ : (batch.empty() ? 0 : batch.front().vector.size());
        std::vector<double> norms;
        norms.reserve(batch.size());
        for (const auto& e : batch) {
            if (e.vector.size() != dim || dim == 0) {
                throw DimensionError("vector for '" + e.chunk.chunk_id + "' has dim " +
                                     std::to_string(e.vector.size()) + ", index dim is " +
                                     std::to_string(dim));
            }
            const double n = vector_norm(e.vector);
            if (!std::isfinite(n) || std::abs(n - 1.0) > unit_tolerance_f32) {
                throw DegenerateEmbeddingError("vector for '" + e.chunk.chunk_id +
                                               "' is not unit-normalized (norm " + std::to_string(n) + ")");
            }
            norms.push_back(n);
        }
        dim_ = dim;
        std::size_t overwritten = 0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            auto& e = batch[i];
            auto it = positions_.find(e.chunk.chunk_id);
            if (it != positions_.end()) {
                log_warn("overwriting chunk '" + e.chunk.chunk_id + "'");
                inv_norms_[it->second] = 1.0 / norms[i];
                entries_[it->second] = std::move(e);
                ++overwritten;
            } else {
                positions_.emplace(e.chunk.chunk_id, entries_.size());
                inv_norms_.push_back(1.0 / norms[i]);
                entries_.push_back(std::move(e));
            }
        }
        return overwritten;
    }

    /// Normalizes `v` and stores it.
    std::size_t upsert(Chunk chunk, const EmbeddingVector& v) {
        std::vector<Entry> one;
        one.push_back({std::move(chunk), to_f32(v.normalized())});
        return upsert(std::move(one));
    }

    std::optional<Entry> get(const std::string& chunk_id) const {
        std::shared_lock lock(mutex_);
        auto it = positions_.find(chunk_id);
        if (it == positions_.end()) return std::nullopt;
        return entries_[it->second];
    }

    /// Entries in insertion order.
    std::vector<Entry> entries() const {
        std::shared_lock lock(mutex_);
        return entries_;
    }

    /// Exact top-m by cosine similarity, descending; ties by ascending chunk_id.
    std::vector<ScoredId> top_m(const EmbeddingVector& query, std::size_t m) const {
        std::vector<ScoredId> out;
        for (auto& h : search(query, m)) out.push_back({h.entry.chunk.chunk_id, h.similarity});
        return out;
    }

    /// top_m, returning full entries. Chunk ids in `exclude` are skipped.
    std::vector<Hit> search(const EmbeddingVector& query, std::size_t m,
                            const std::unordered_set<std::string>& exclude = {}) const {
        if (m == 0) throw ConfigError("top-m search requires m >= 1");
        std::shared_lock lock(mutex_);
        if (entries_.empty()) throw EmptyIndexError("index is empty");
        if (query.dim() != dim_) {
            throw DimensionError("query has dim " + std::to_string(query.dim()) +
                                 ", index dim is " + std::to_string(dim_));
        }
        const double qn = query.norm();
        if (!(qn > 0.0)) throw DegenerateEmbeddingError("query embedding has zero norm");

        std::vector<std::pair<double, std::size_t>> scored;
        scored.reserve(entries_.size());
        const auto q = query.values();
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (!exclude.empty() && exclude.count(entries_[i].chunk.chunk_id)) continue;
            const auto& v = entries_[i].vector;
            double d = 0.0;
            for (std::size_t k = 0; k < dim_; ++k) d += q[k] * static_cast<double>(v[k]);
            scored.emplace_back(d * inv_norms_[i] / qn, i);
        }
        const std::size_t take = std::min(m, scored.size());
        auto better = [this](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return entries_[a.second].chunk.chunk_id < entries_[b.second].chunk.chunk_id;
        };
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                          scored.end(), better);
        std::vector<Hit> hits;
        hits.reserve(take);
        for (std::size_t i = 0; i < take; ++i) {
            hits.push_back({entries_[scored[i].second], scored[i].first});
        }
        return hits;
    }

    friend bool operator==(const VectorIndex& a, const VectorIndex& b) {
        if (&a == &b) return true;
        std::shared_lock la(a.mutex_);
        std::shared_lock lb(b.mutex_);
        return a.metadata_ == b.metadata_ && a.dim_ == b.dim_ && a.entries_ == b.entries_;
    }

    static std::vector<float> to_f32(const EmbeddingVector& v) {
        std::vector<float> out(v.dim());
        for (std::size_t i = 0; i < v.dim(); ++i) out[i] = static_cast<float>(v[i]);
        return out;
    }

    static EmbeddingVector to_embedding(const std::vector<float>& v) {
        return EmbeddingVector::from(std::span<const float>(v));
    }

private:
    static double vector_norm(const std::vector<float>& v) {
        double s = 0.0;
        for (float x : v) s += static_cast<double>(x) * static_cast<double>(x);
        return std::sqrt(s);
    }

    void copy_from(const VectorIndex& o) {
        metadata_ = o.metadata_;
        dim_ = o.dim_;
        entries_ = o.entries_;
        inv_norms_ = o.inv_norms_;
        positions_ = o.positions_;
    }

    void move_from(VectorIndex&& o) {
        metadata_ = std::move(o.metadata_);
        dim_ = o.dim_;
        entries_ = std::move(o.entries_);
        inv_norms_ = std::move(o.inv_norms_);
        positions_ = std::move(o.positions_);
        o.dim_ = 0;
        o.entries_.clear();
        o.inv_norms_.clear();
        o.positions_.clear();
    }

    mutable std::shared_mutex mutex_;
    IndexMetadata metadata_;
    std::size_t dim_ = 0;
    std::vector<Entry> entries_;
    std::vector<double> inv_norms_;
    std::unordered_map<std::string, std::size_t> positions_;
};

// --- ingestion --------------------------------------------------------------

struct IngestReport {
    std::size_t total = 0;      ///< chunks stored in the index afterwards
    std::size_t processed = 0;  ///< chunks successfully embedded and written
    std::size_t batches = 0;
    std::size_t overwrites = 0;
    std::vector<std::string> failed_ids;
    std::vector<std::string> errors;

    bool complete() const noexcept { return failed_ids.empty(); }
};

inline constexpr std::size_t default_ingest_batch = 10000;

/// Embeds and stores chunks in batches. A provider failure fails only the
/// batch it happened in; the report lists the affected chunk ids.
inline IngestReport ingest(VectorIndex& index, std::span<const Chunk> chunks,
                           EmbeddingProvider& provider,
                           std::size_t batch_size = default_ingest_batch) {
    if (batch_size == 0) throw ConfigError("ingest batch size must be >= 1");
    const auto& spec = provider.spec();
    if (index.dim() != 0 && index.dim() != spec.dim) {
        throw ConfigError("provider dim " + std::to_string(spec.dim) + " does not match index dim " +
                          std::to_string(index.dim()));
    }
    auto meta = index.metadata();
    if (meta.provider_fingerprint.empty()) {
        meta.provider_fingerprint = spec.fingerprint();
        index.set_metadata(meta);
    } else if (meta.provider_fingerprint != spec.fingerprint()) {
        log_warn("index was built with provider '" + meta.provider_fingerprint +
                 "', ingesting with '" + spec.fingerprint() + "'");
    }

    IngestReport report;
    for (std::size_t begin = 0; begin < chunks.size(); begin += batch_size) {
        const auto part = chunks.subspan(begin, std::min(batch_size, chunks.size() - begin));
        ++report.batches;
        std::vector<std::string> texts;
        texts.reserve(part.size());
        for (const auto& c : part) texts.push_back(c.text);
        try {
            auto vecs = embed_batch(provider, texts);
            std::vector<VectorIndex::Entry> batch;
            batch.reserve(part.size());
            for (std::size_t i = 0; i < part.size(); ++i) {
                batch.push_back({part[i], VectorIndex::to_f32(vecs[i])});
            }
            report.overwrites += index.upsert(std::move(batch));
            report.processed += part.size();
        } catch (const ProviderError& e) {
            for (const auto& c : part) report.failed_ids.push_back(c.chunk_id);
            report.errors.emplace_back(e.what());
        } catch (const ProviderContractError& e) {
            for (const auto& c : part) report.failed_ids.push_back(c.chunk_id);
            report.errors.emplace_back(e.what());
        }
        log_info("ingested batch " + std::to_string(report.batches) + " (" +
                 std::to_string(report.processed) + "/" + std::to_string(chunks.size()) +
                 " chunks)");
    }
    report.total = index.size();
    log_info("total chunks processed: " + std::to_string(report.processed) +
             ", index size: " + std::to_string(report.total));
    return report;
}

// --- persistence ------------------------------------------------------------
//
// Layout (all integers little-endian):
//   "VNDX" | u32 version | u32 dim | u64 count | u32 len | metadata JSON
//   count x ( u32 len | chunk JSON (UTF-8) | dim x f32 )

inline constexpr char index_magic[4] = {'V', 'N', 'D', 'X'};
inline constexpr std::uint32_t index_format_version = 1;

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>(u & 0xff));
        u = static_cast<U>(u >> 8);
    }
}

class Reader {
public:
    explicit Reader(std::string_view data) : data_(data) {}

    std::uint64_t offset() const noexcept { return pos_; }

    std::string_view take(std::size_t n, const char* what) {
        if (data_.size() - pos_ < n) {
            throw FormatError(std::string("index file truncated while reading ") + what + " at offset " +
                                  std::to_string(pos_),
                              pos_);
        }
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    template <typename T>
    T get_le(const char* what) {
        auto s = take(sizeof(T), what);
        std::make_unsigned_t<T> u = 0;
        for (std::size_t i = sizeof(T); i-- > 0;) {
            u = static_cast<std::make_unsigned_t<T>>((u << 8) | static_cast<unsigned char>(s[i]));
        }
        return static_cast<T>(u);
    }

    bool at_end() const noexcept { return pos_ == data_.size(); }

private:
    std::string_view data_;
    std::uint64_t pos_ = 0;
};

inline nlohmann::json chunk_to_json(const Chunk& c) {
    return {{"chunk_id", c.chunk_id}, {"doc_id", c.doc_id},           {"title", c.title},
            {"text", c.text},         {"token_begin", c.token_begin}, {"token_end", c.token_end}};
}

inline Chunk chunk_from_json(const nlohmann::json& j) {
    Chunk c;
    c.chunk_id = j.at("chunk_id").get<std::string>();
    c.doc_id = j.at("doc_id").get<std::string>();
    c.title = j.at("title").get<std::string>();
    c.text = j.at("text").get<std::string>();
    c.token_begin = j.at("token_begin").get<std::size_t>();
    c.token_end = j.at("token_end").get<std::size_t>();
    return c;
}

}  // namespace detail

inline std::string serialize_index(const VectorIndex& index) {
    const auto entries = index.entries();
    const auto meta = index.metadata();
    const auto dim = static_cast<std::uint32_t>(index.dim());
    std::string out(index_magic, sizeof index_magic);
    detail::put_le(out, index_format_version);
    detail::put_le(out, dim);
    detail::put_le(out, static_cast<std::uint64_t>(entries.size()));
    const std::string meta_json =
        nlohmann::json{{"corpus", meta.corpus}, {"provider", meta.provider_fingerprint}}.dump();
    detail::put_le(out, static_cast<std::uint32_t>(meta_json.size()));
    out += meta_json;
    for (const auto& e : entries) {
        const std::string cj = detail::chunk_to_json(e.chunk).dump();
        detail::put_le(out, static_cast<std::uint32_t>(cj.size()));
        out += cj;
        for (float f : e.vector) detail::put_le(out, std::bit_cast<std::uint32_t>(f));
    }
    return out;
}

/// Parses a whole index image. Throws FormatError with the byte offset of the
/// first problem; never returns a partially filled index.
inline VectorIndex deserialize_index(std::string_view data) {
    detail::Reader r(data);
    if (r.take(4, "magic") != std::string_view(index_magic, 4)) {
        throw FormatError("not a vendi index file (bad magic)", 0);
    }
    const auto version = r.get_le<std::uint32_t>("version");
    if (version != index_format_version) {
        throw FormatError("unsupported index format version " + std::to_string(version), 4);
    }
    const auto dim = r.get_le<std::uint32_t>("dim");
    const auto count = r.get_le<std::uint64_t>("count");
    const auto meta_len = r.get_le<std::uint32_t>("metadata length");
    const auto meta_at = r.offset();
    IndexMetadata meta;
    try {
        const auto mj = nlohmann::json::parse(r.take(meta_len, "metadata"));
        meta.corpus = mj.at("corpus").get<std::string>();
        meta.provider_fingerprint = mj.at("provider").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad index metadata: ") + e.what(), meta_at);
    }
    if (count > 0 && dim == 0) throw FormatError("index has entries but dim 0", 8);

    std::vector<VectorIndex::Entry> entries;
    entries.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto len = r.get_le<std::uint32_t>("chunk length");
        const auto chunk_at = r.offset();
        VectorIndex::Entry e;
        try {
            e.chunk = detail::chunk_from_json(nlohmann::json::parse(r.take(len, "chunk")));
        } catch (const nlohmann::json::exception& ex) {
            throw FormatError(std::string("bad chunk record: ") + ex.what(), chunk_at);
        }
        e.vector.resize(dim);
        for (auto& f : e.vector) f = std::bit_cast<float>(r.get_le<std::uint32_t>("vector"));
        entries.push_back(std::move(e));
    }
    if (!r.at_end()) throw FormatError("trailing bytes after index entries", r.offset());

    VectorIndex index(meta, dim);
    try {
        index.upsert(std::move(entries));
    } catch (const Error& e) {
        throw FormatError(std::string("invalid index contents: ") + e.what(), 0);
    }
    if (index.size() != count) throw FormatError("index file contains duplicate chunk ids", 0);
    return index;
}

/// Writes to a temporary sibling and renames, so readers never observe a
/// half-written file.
inline void save_index(const VectorIndex& index, const std::filesystem::path& path) {
    const std::string image = serialize_index(index);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(image.data(), static_cast<std::streamsize>(image.size()));
        if (!out) throw IoError("failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move index into place at '" + path.string() + "': " + ec.message());
}

inline VectorIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open index file '" + path.string() + "'");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
    return deserialize_index(data);
}

/// Recovers kind/model/dim from an index's provider fingerprint.
inline EmbeddingProviderSpec spec_from_fingerprint(const std::string& fp) {
    const auto first = fp.find(':');
    const auto last = fp.rfind(':');
    if (first == std::string::npos || first == last) {
        throw ConfigError("malformed provider fingerprint '" + fp + "'");
    }
    EmbeddingProviderSpec spec;
    spec.kind = parse_embedding_kind(fp.substr(0, first));
    spec.model_name = fp.substr(first + 1, last - first - 1);
    try {
        spec.dim = std::stoul(fp.substr(last + 1));
    } catch (const std::exception&) {
        throw ConfigError("malformed provider fingerprint '" + fp + "'");
    }
    return spec;
}

}  // namespace vendi
