#pragma once

#include <memoir/ledger.hpp>
#include <memoir/providers.hpp>
#include <memoir/types.hpp>

#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace memoir {

enum class ProfileCategory { demographic, preference, behavior, professional };

const char* to_string(ProfileCategory c);
std::optional<ProfileCategory> profile_category_from_string(const std::string& s);

/// One distilled user fact with provenance. At most one non-superseded
/// entry exists per (user, category, key); superseded chains stay walkable
/// and terminate at the live entry.
struct ProfileEntry {
    std::uint64_t id = 0;
    std::string org_id;
    std::string project_id;
    std::string user_id;
    ProfileCategory category = ProfileCategory::preference;
    std::string key;  // lowercase snake_case
    std::string value;
    EpisodeId source_episode = 0;
    std::int64_t created_at_ms = 0;
    std::optional<std::uint64_t> superseded_by;
};

struct ProfileConfig {
    bool enabled = true;
    std::size_t batch_size = 1;          // episodes per extraction call
    bool extract_from_user_only = true;  // agent/system messages are skipped
    std::string extraction_prompt;       // template with {episode_content}
};

/// Semantic memory: extracts user facts and preferences from episodes via
/// the chat port, applies last-writer-wins supersession per (category, key),
/// and answers filtered queries over the live set.
class ProfileMemory {
public:
    ProfileMemory(ProfileConfig cfg, std::shared_ptr<ChatPort> chat);

    /// Feeds one episode to extraction (buffered when batch_size > 1).
    /// Returns entries created or superseding by this call. When the LLM is
    /// unavailable the episodes queue for re-observation and nothing
    /// changes.
    std::vector<ProfileEntry> observe(const Episode& episode);

    /// Live entries only, sorted by category then key.
    std::vector<ProfileEntry> query_profile(const std::string& org_id,
                                            const std::string& project_id,
                                            const std::string& user_id,
                                            std::optional<ProfileCategory> category = {},
                                            std::optional<std::string> key = {}) const;

    /// Every entry, live and superseded, for chain inspection.
    std::vector<ProfileEntry> all_entries(const std::string& org_id,
                                          const std::string& project_id,
                                          const std::string& user_id) const;

    /// Retries queued episodes; returns how many entries were created.
    std::size_t drain_reobservation_queue();
    std::size_t pending_reobservation() const;

    /// Removes entries sourced from the session and splices supersession
    /// chains across the gap (a surviving predecessor relinks to the next
    /// surviving successor, or becomes live again).
    void remove_source_session(const MemoryScope& scope);

    NodeTokens consumed_tokens() const;
    const ProfileConfig& config() const { return cfg_; }

private:
    struct Stored {
        ProfileEntry entry;
        std::string source_session;  // session key of the source episode
    };

    std::vector<ProfileEntry> flush_locked(std::vector<Episode> batch);
    std::vector<ProfileEntry> apply_triples(
        const std::vector<std::tuple<std::size_t, ProfileCategory, std::string, std::string>>&
            triples,
        const std::vector<Episode>& batch);

    ProfileConfig cfg_;
    std::shared_ptr<ChatPort> chat_;
    mutable std::shared_mutex mu_;
    std::unordered_map<std::string, std::vector<Stored>> by_user_;  // user_key -> entries
    std::unordered_map<std::string, std::vector<Episode>> buffers_;  // user_key -> pending batch
    std::vector<Episode> reobserve_queue_;
    std::uint64_t next_id_ = 1;
    NodeTokens consumed_;
};

} // namespace memoir
