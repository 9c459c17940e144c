#pragma once

#include <memoir/agent.hpp>
#include <memoir/config.hpp>
#include <memoir/episode_store.hpp>
#include <memoir/ltm_index.hpp>
#include <memoir/profile.hpp>
#include <memoir/recall.hpp>
#include <memoir/stm.hpp>
#include <memoir/storage.hpp>

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

namespace memoir {

/// Facade wiring storage, the ingestion fan-out (episode store -> sentence
/// index, short-term window, profile extraction), the recall pipeline, and
/// the opt-in retrieval agent behind one thread-safe surface.
///
/// Writers are serialized per session; reads and searches run concurrently.
class MemoryEngine {
public:
    /// Injected ports override the config-built providers; tests pass
    /// deterministic doubles here.
    explicit MemoryEngine(EngineConfig cfg = {},
                          std::shared_ptr<EmbedderPort> embedder = nullptr,
                          std::shared_ptr<ChatPort> chat = nullptr,
                          std::shared_ptr<RerankerPort> reranker = nullptr,
                          std::shared_ptr<StoragePort> storage = nullptr);

    Episode add_episode(const MemoryScope& scope, const std::string& content,
                        Producer producer, std::int64_t timestamp_ms,
                        std::map<std::string, std::string> metadata = {});

    std::vector<Episode> get_episodes(const MemoryScope& scope, SequenceNo lo,
                                      SequenceNo hi) const;
    std::size_t delete_session(const MemoryScope& scope);

    struct SearchRequest {
        std::string query;
        RetrievalConfig cfg;
        SearchFilter filter;
        bool agent_mode = false;
    };
    struct SearchResult {
        RetrievalOutcome outcome;
        std::optional<RouteDecision> route;  // set in agent mode
        ChainState chain;
        std::vector<std::string> issued_queries;
    };
    SearchResult search(const MemoryScope& scope, const SearchRequest& request) const;

    std::vector<ProfileEntry> query_profile(const std::string& org_id,
                                            const std::string& project_id,
                                            const std::string& user_id,
                                            std::optional<ProfileCategory> category = {},
                                            std::optional<std::string> key = {}) const;

    /// Rebuilds in-memory state from the storage log. Summaries are not
    /// regenerated during replay (they are flagged stale instead), and
    /// profile extraction follows its usual queue-on-unavailable rule.
    std::size_t replay();

    struct IngestTokens {
        NodeTokens summary;
        NodeTokens profile_extraction;
    };
    IngestTokens ingest_tokens() const;

    EpisodeStore& store() { return *store_; }
    const EpisodeStore& store() const { return *store_; }
    ShortTermMemory& stm() { return *stm_; }
    LtmIndex& ltm() { return *ltm_; }
    const LtmIndex& ltm() const { return *ltm_; }
    ProfileMemory& profile() { return *profile_; }
    const RecallPipeline& recall() const { return *recall_; }
    const RetrievalAgent* agent() const { return agent_.get(); }
    const EngineConfig& config() const { return cfg_; }
    std::shared_ptr<EmbedderPort> embedder_port() const { return embedder_; }
    std::shared_ptr<ChatPort> chat_port() const { return chat_; }

private:
    std::mutex& session_mutex(const MemoryScope& scope) const;

    EngineConfig cfg_;
    std::shared_ptr<EmbedderPort> embedder_;
    std::shared_ptr<ChatPort> chat_;
    std::shared_ptr<RerankerPort> reranker_;
    std::shared_ptr<StoragePort> storage_;

    std::unique_ptr<EpisodeStore> store_;
    std::unique_ptr<ShortTermMemory> stm_;
    std::unique_ptr<LtmIndex> ltm_;
    std::unique_ptr<ProfileMemory> profile_;
    std::unique_ptr<RecallPipeline> recall_;
    std::unique_ptr<RetrievalAgent> agent_;

    mutable std::mutex session_mu_map_guard_;
    mutable std::unordered_map<std::string, std::unique_ptr<std::mutex>> session_mutexes_;
};

/// Builds provider ports from a spec (doubles and HTTP adapters).
std::shared_ptr<EmbedderPort> make_embedder(const ProviderSpec& spec);
std::shared_ptr<ChatPort> make_chat(const ProviderSpec& spec);
std::shared_ptr<RerankerPort> make_reranker(const ProviderSpec& spec);

} // namespace memoir
