#pragma once

#include <memoir/storage.hpp>
#include <memoir/types.hpp>

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace memoir {

/// Ground-truth repository of raw episodes under multi-tenant scope
/// isolation. Appends are assigned a dense per-session sequence and fan out
/// to the registered sinks (sentence indexing, short-term window, profile
/// extraction) as part of the ingestion contract.
///
/// Concurrency: safe across scopes without coordination. Within one session
/// the caller must serialize writers (the engine holds a per-session write
/// mutex); readers may run concurrently with writers and observe a
/// consistent prefix of the append order.
class EpisodeStore {
public:
    using AppendSink = std::function<void(const Episode&)>;
    using DeleteSink = std::function<void(const MemoryScope&)>;

    explicit EpisodeStore(std::shared_ptr<StoragePort> storage = nullptr);

    void add_append_sink(AppendSink sink);
    void add_delete_sink(DeleteSink sink);

    /// Validates scope/content/timestamp, persists the episode, assigns the
    /// next sequence ordinal, and dispatches it to every append sink.
    Episode add_episode(const MemoryScope& scope, const std::string& content,
                        Producer producer, std::int64_t timestamp_ms,
                        std::map<std::string, std::string> metadata = {});

    /// Episodes with sequence in [lo, hi], ascending; the range is clamped
    /// to the session. Requires lo <= hi.
    std::vector<Episode> get_episodes(const MemoryScope& scope, SequenceNo lo,
                                      SequenceNo hi) const;

    std::optional<Episode> get_episode(const MemoryScope& scope, SequenceNo seq) const;
    std::optional<Episode> find_episode(EpisodeId id) const;
    std::size_t session_size(const MemoryScope& scope) const;
    std::vector<MemoryScope> sessions() const;

    /// Removes every episode under the exact scope and dispatches the delete
    /// sinks. Idempotent; returns the number of episodes removed.
    std::size_t delete_session(const MemoryScope& scope);

    /// Replays storage events into an empty store, re-dispatching sinks so
    /// derived state is rebuilt. Returns the number of live episodes.
    std::size_t replay_from_storage();

private:
    struct Session {
        std::vector<Episode> episodes;
    };

    void apply_episode(const Episode& ep);
    void dispatch_append(const Episode& ep);
    std::size_t remove_session_locked(const std::string& key);

    mutable std::shared_mutex mu_;
    std::unordered_map<std::string, Session> sessions_;
    std::unordered_map<EpisodeId, std::pair<std::string, SequenceNo>> by_id_;
    std::atomic<EpisodeId> next_id_{1};
    std::shared_ptr<StoragePort> storage_;
    std::vector<AppendSink> append_sinks_;
    std::vector<DeleteSink> delete_sinks_;
};

} // namespace memoir
