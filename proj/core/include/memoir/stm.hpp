#pragma once

#include <memoir/ledger.hpp>
#include <memoir/providers.hpp>
#include <memoir/types.hpp>

#include <deque>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace memoir {

struct StmConfig {
    std::size_t capacity = 20;
    bool summary_enabled = true;
};

/// Bounded per-session window of recent episodes with a rolling summary.
/// Eviction is window maintenance only: evicted episodes remain in the
/// episode store and the sentence index. The summary is regenerated per
/// eviction batch from (previous summary + evicted episodes), a compression
/// chain that bounds prompt size.
class ShortTermMemory {
public:
    ShortTermMemory(StmConfig cfg, std::shared_ptr<ChatPort> chat);

    /// Appends and returns the episodes evicted by this append (oldest
    /// first). Triggers summarization on eviction when enabled.
    std::vector<Episode> append(const MemoryScope& scope, const Episode& episode);

    /// Regenerates the summary via the chat port. Throws
    /// Error(llm_unavailable) and leaves the summary unchanged (flagged
    /// stale) when the port is missing or failing.
    std::string summarize(const MemoryScope& scope);

    /// Current window and summary. Never retrieves, never calls the LLM.
    std::pair<std::vector<Episode>, std::string> get_context(const MemoryScope& scope) const;

    std::uint32_t summary_version(const MemoryScope& scope) const;
    bool summary_stale(const MemoryScope& scope) const;
    void remove_session(const MemoryScope& scope);

    /// Disables the per-eviction summary trigger (used during replay).
    void set_auto_summarize(bool on) { auto_summarize_ = on; }

    /// Cumulative summarization token spend.
    NodeTokens consumed_tokens() const;

    const StmConfig& config() const { return cfg_; }

private:
    struct State {
        std::deque<Episode> window;
        std::string summary;
        std::uint32_t version = 0;
        bool stale = false;
        std::vector<Episode> pending;  // evicted since last successful summary
    };

    std::string summarize_locked(State& state);

    StmConfig cfg_;
    std::shared_ptr<ChatPort> chat_;
    bool auto_summarize_ = true;
    mutable std::shared_mutex mu_;
    std::unordered_map<std::string, State> sessions_;
    NodeTokens consumed_;
};

} // namespace memoir
