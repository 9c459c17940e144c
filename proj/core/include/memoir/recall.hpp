#pragma once

#include <memoir/episode_store.hpp>
#include <memoir/ledger.hpp>
#include <memoir/ltm_index.hpp>
#include <memoir/providers.hpp>
#include <memoir/stm.hpp>

#include <atomic>
#include <memory>
#include <string>
#include <vector>

namespace memoir {

enum class ContextFormat { plain, structured_lines };

const char* to_string(ContextFormat f);
std::optional<ContextFormat> context_format_from_string(const std::string& s);

struct RetrievalConfig {
    std::size_t nucleus_k = 64;      // sentence hits fetched
    std::size_t cluster_top_k = 20;  // clusters kept after rerank
    std::size_t neighbors_before = 1;
    std::size_t neighbors_after = 2;
    bool user_query_prefix = false;
    ContextFormat format = ContextFormat::structured_lines;

    void validate() const;  // cluster_top_k <= nucleus_k, both positive
};

/// A nucleus episode plus its session neighbors — the unit that is
/// reranked and returned. Members are consecutive by sequence within one
/// session and always contain the nucleus.
struct EpisodeCluster {
    EpisodeId nucleus = 0;
    std::vector<EpisodeId> members;  // ascending sequence
    double score = 0.0;
    std::vector<SentenceId> matched_sentences;

    // Ordering bookkeeping.
    SequenceNo nucleus_sequence = 0;
    SequenceNo lo_sequence = 0;
    SequenceNo hi_sequence = 0;
    std::int64_t nucleus_timestamp_ms = 0;
    double best_similarity = 0.0;
};

struct RetrievalOutcome {
    std::vector<Episode> stm_episodes;
    std::string stm_summary;
    std::vector<EpisodeCluster> ltm_clusters;  // chronological by nucleus timestamp
    std::string rendered_context;
    TokenLedger ledger;
};

/// Staged recall: embed the query, fetch nucleus sentences, expand each
/// nucleus with session neighbors into clusters, dedup against the
/// short-term window, rerank, truncate, then order chronologically.
class RecallPipeline {
public:
    RecallPipeline(const EpisodeStore& store, const LtmIndex& index,
                   const ShortTermMemory& stm, std::shared_ptr<RerankerPort> reranker);

    /// Expands each hit's parent episode with neighbors_before preceding and
    /// neighbors_after following episodes, clamped at session boundaries.
    /// Hits sharing a nucleus merge into one cluster.
    std::vector<EpisodeCluster> contextualize(const std::vector<ScoredSentence>& hits,
                                              const RetrievalConfig& cfg) const;

    /// Removes episodes already in the short-term window, drops emptied
    /// clusters, and merges overlapping clusters into consecutive runs.
    std::vector<EpisodeCluster> dedup(std::vector<EpisodeCluster> clusters,
                                      const std::vector<Episode>& stm_window) const;

    /// Scores clusters against the concatenation of all query texts,
    /// descending; ties break toward the earlier nucleus sequence; the top_k
    /// best survive. Falls back to nucleus-similarity order (noted in the
    /// ledger) when the reranker is unavailable.
    std::vector<EpisodeCluster> rerank(const std::vector<std::string>& query_texts,
                                       std::vector<EpisodeCluster> clusters,
                                       std::size_t top_k, TokenLedger* ledger = nullptr) const;

    RetrievalOutcome search(const MemoryScope& scope, const std::string& query,
                            const RetrievalConfig& cfg, const SearchFilter& filter = {}) const;

    /// Rendering used for outcome context. One line per episode:
    ///   [seq] producer @ iso-timestamp: content
    /// structured_lines escapes line breaks inside a message; plain leaves
    /// them as-is. The summary, when present, leads under a SUMMARY: header.
    std::string render_context(const RetrievalOutcome& outcome, ContextFormat format) const;

    std::string cluster_text(const EpisodeCluster& cluster) const;

    /// Shared entry-point counter: every search (direct or agent-driven)
    /// passes through here exactly once.
    std::uint64_t search_call_count() const { return search_calls_.load(); }

    static void sort_chronological(std::vector<EpisodeCluster>& clusters);

    const EpisodeStore& store() const { return store_; }

private:
    const EpisodeStore& store_;
    const LtmIndex& index_;
    const ShortTermMemory& stm_;
    std::shared_ptr<RerankerPort> reranker_;
    mutable std::atomic<std::uint64_t> search_calls_{0};
};

} // namespace memoir
