#pragma once

#include <memoir/providers.hpp>
#include <memoir/sentence_split.hpp>
#include <memoir/types.hpp>

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace memoir {

/// One indexed sentence with metadata inherited from its parent episode.
struct SentenceRecord {
    SentenceId id = 0;
    std::string text;
    EpisodeId parent_episode = 0;
    std::uint32_t position = 0;
    MemoryScope scope;
    std::int64_t timestamp_ms = 0;
    Producer producer = Producer::user;
    std::map<std::string, std::string> metadata;
    std::vector<float> embedding;  // unit length, 32-bit floats
};

struct IndexConfig {
    bool chunking_enabled = true;  // one key per sentence vs per episode
    std::string embedder_id = "hash64";
    std::set<std::string> abbreviations = default_abbreviations();
};

/// Conjunctive search filter: inherited timestamp within [time_lo, time_hi]
/// (inclusive, when set) and exact-match metadata equality.
struct SearchFilter {
    std::optional<std::int64_t> time_lo_ms;
    std::optional<std::int64_t> time_hi_ms;
    std::map<std::string, std::string> metadata_equals;

    bool admits(const SentenceRecord& r) const;
    bool empty() const {
        return !time_lo_ms && !time_hi_ms && metadata_equals.empty();
    }
};

struct ScoredSentence {
    SentenceRecord record;
    float similarity = 0.0f;
};

/// Sentence-level vector index over per-scope stores. Indexing runs the
/// four ingestion stages: segmentation, metadata inheritance, episode
/// linkage, embedding. Search is exact cosine over unit-normalized vectors;
/// ties break toward the lower record id.
class LtmIndex {
public:
    LtmIndex(IndexConfig cfg, std::shared_ptr<EmbedderPort> embedder);

    /// Indexes one persisted episode. When the embedder is unavailable the
    /// episode is queued for re-indexing and an empty list is returned —
    /// ingestion still succeeds.
    std::vector<SentenceRecord> index_episode(const Episode& episode);

    std::vector<ScoredSentence> knn_search(const MemoryScope& scope,
                                           const std::vector<float>& query_vector,
                                           std::size_t k,
                                           const SearchFilter& filter = {}) const;

    std::vector<float> embed_query(const std::string& text) const;

    /// Retries queued episodes; returns how many were indexed.
    std::size_t drain_reindex_queue();
    std::size_t pending_reindex() const;

    void remove_session(const MemoryScope& scope);
    std::size_t record_count(const MemoryScope& scope) const;
    std::size_t total_records() const;
    std::vector<SentenceRecord> session_records(const MemoryScope& scope) const;

    const IndexConfig& config() const { return cfg_; }
    std::shared_ptr<EmbedderPort> embedder() const { return embedder_; }

private:
    std::vector<SentenceRecord> build_records(const Episode& episode) const;
    void insert_records(std::vector<SentenceRecord>& records);

    IndexConfig cfg_;
    std::shared_ptr<EmbedderPort> embedder_;
    mutable std::shared_mutex mu_;
    std::unordered_map<std::string, std::vector<SentenceRecord>> sessions_;
    mutable std::mutex queue_mu_;
    std::vector<Episode> reindex_queue_;
    std::atomic<SentenceId> next_id_{1};
};

} // namespace memoir
