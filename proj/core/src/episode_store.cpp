#include <memoir/episode_store.hpp>
#include <memoir/error.hpp>
#include <memoir/util.hpp>

#include <algorithm>

namespace memoir {

EpisodeStore::EpisodeStore(std::shared_ptr<StoragePort> storage)
    : storage_(std::move(storage)) {}

void EpisodeStore::add_append_sink(AppendSink sink) {
    append_sinks_.push_back(std::move(sink));
}

void EpisodeStore::add_delete_sink(DeleteSink sink) {
    delete_sinks_.push_back(std::move(sink));
}

Episode EpisodeStore::add_episode(const MemoryScope& scope, const std::string& content,
                                  Producer producer, std::int64_t timestamp_ms,
                                  std::map<std::string, std::string> metadata) {
    if (!scope.valid()) {
        raise(ErrorCode::scope_invalid, "scope requires all five components");
    }
    if (trim(content).empty()) {
        raise(ErrorCode::empty_content, "episode content is empty");
    }

    Episode ep;
    {
        std::unique_lock lock(mu_);
        Session& session = sessions_[scope.session_key()];
        if (!session.episodes.empty() &&
            timestamp_ms < session.episodes.back().timestamp_ms) {
            raise(ErrorCode::timestamp_regression,
                  "timestamp " + std::to_string(timestamp_ms) + " precedes session head " +
                      std::to_string(session.episodes.back().timestamp_ms));
        }
        ep.id = next_id_.fetch_add(1);
        ep.content = content;
        ep.producer = producer;
        ep.timestamp_ms = timestamp_ms;
        ep.scope = scope;
        ep.sequence = session.episodes.size();
        ep.metadata = std::move(metadata);
        session.episodes.push_back(ep);
        by_id_[ep.id] = {scope.session_key(), ep.sequence};
        if (storage_) {
            StorageEvent ev;
            ev.kind = StorageEvent::Kind::episode;
            ev.episode = ep;
            storage_->append(ev);
        }
    }
    dispatch_append(ep);
    return ep;
}

std::vector<Episode> EpisodeStore::get_episodes(const MemoryScope& scope, SequenceNo lo,
                                                SequenceNo hi) const {
    if (!scope.valid()) {
        raise(ErrorCode::scope_invalid, "scope requires all five components");
    }
    if (lo > hi) {
        raise(ErrorCode::bad_range, "range lo exceeds hi");
    }
    std::shared_lock lock(mu_);
    auto it = sessions_.find(scope.session_key());
    if (it == sessions_.end()) return {};
    const auto& eps = it->second.episodes;
    if (eps.empty() || lo >= eps.size()) return {};
    SequenceNo clamped_hi = std::min<SequenceNo>(hi, eps.size() - 1);
    return {eps.begin() + static_cast<std::ptrdiff_t>(lo),
            eps.begin() + static_cast<std::ptrdiff_t>(clamped_hi) + 1};
}

std::optional<Episode> EpisodeStore::get_episode(const MemoryScope& scope,
                                                 SequenceNo seq) const {
    std::shared_lock lock(mu_);
    auto it = sessions_.find(scope.session_key());
    if (it == sessions_.end() || seq >= it->second.episodes.size()) return std::nullopt;
    return it->second.episodes[seq];
}

std::optional<Episode> EpisodeStore::find_episode(EpisodeId id) const {
    std::shared_lock lock(mu_);
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    const auto& [key, seq] = it->second;
    auto sit = sessions_.find(key);
    if (sit == sessions_.end() || seq >= sit->second.episodes.size()) return std::nullopt;
    return sit->second.episodes[seq];
}

std::size_t EpisodeStore::session_size(const MemoryScope& scope) const {
    std::shared_lock lock(mu_);
    auto it = sessions_.find(scope.session_key());
    return it == sessions_.end() ? 0 : it->second.episodes.size();
}

std::vector<MemoryScope> EpisodeStore::sessions() const {
    std::shared_lock lock(mu_);
    std::vector<MemoryScope> out;
    out.reserve(sessions_.size());
    for (const auto& [key, session] : sessions_) {
        if (!session.episodes.empty()) out.push_back(session.episodes.front().scope);
    }
    return out;
}

std::size_t EpisodeStore::remove_session_locked(const std::string& key) {
    auto it = sessions_.find(key);
    if (it == sessions_.end()) return 0;
    std::size_t n = it->second.episodes.size();
    for (const auto& ep : it->second.episodes) by_id_.erase(ep.id);
    sessions_.erase(it);
    return n;
}

std::size_t EpisodeStore::delete_session(const MemoryScope& scope) {
    if (!scope.valid()) {
        raise(ErrorCode::scope_invalid, "scope requires all five components");
    }
    std::size_t removed = 0;
    {
        std::unique_lock lock(mu_);
        removed = remove_session_locked(scope.session_key());
        if (removed > 0 && storage_) {
            StorageEvent ev;
            ev.kind = StorageEvent::Kind::delete_session;
            ev.scope = scope;
            storage_->append(ev);
        }
    }
    for (const auto& sink : delete_sinks_) sink(scope);
    return removed;
}

void EpisodeStore::apply_episode(const Episode& ep) {
    std::unique_lock lock(mu_);
    Session& session = sessions_[ep.scope.session_key()];
    session.episodes.push_back(ep);
    by_id_[ep.id] = {ep.scope.session_key(), ep.sequence};
    EpisodeId expected = next_id_.load();
    while (ep.id >= expected && !next_id_.compare_exchange_weak(expected, ep.id + 1)) {
    }
}

void EpisodeStore::dispatch_append(const Episode& ep) {
    for (const auto& sink : append_sinks_) sink(ep);
}

std::size_t EpisodeStore::replay_from_storage() {
    if (!storage_) return 0;
    auto events = storage_->load();
    std::size_t live = 0;
    for (const auto& ev : events) {
        if (ev.kind == StorageEvent::Kind::episode) {
            apply_episode(ev.episode);
            dispatch_append(ev.episode);
        } else {
            std::string key = ev.scope.session_key();
            {
                std::unique_lock lock(mu_);
                remove_session_locked(key);
            }
            for (const auto& sink : delete_sinks_) sink(ev.scope);
        }
    }
    {
        std::shared_lock lock(mu_);
        for (const auto& [key, session] : sessions_) live += session.episodes.size();
    }
    return live;
}

} // namespace memoir
