#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace memoir {

using EpisodeId = std::uint64_t;
using SentenceId = std::uint64_t;
using SequenceNo = std::uint64_t;

enum class Producer { user, agent, system };

const char* to_string(Producer p);
std::optional<Producer> producer_from_string(const std::string& s);

/// Five-part namespace governing isolation. Two scopes differing in any
/// component address disjoint stores.
struct MemoryScope {
    std::string org_id;
    std::string project_id;
    std::string user_id;
    std::string agent_id;
    std::string session_id;

    bool valid() const;

    /// Unique key for the full five-part scope.
    std::string session_key() const;
    /// Key for the (org, project, user) triple that profile memory is scoped to.
    std::string user_key() const;

    auto operator<=>(const MemoryScope&) const = default;
};

/// One conversational turn, stored verbatim with its metadata. Content is
/// never mutated after ingestion.
struct Episode {
    EpisodeId id = 0;
    std::string content;
    Producer producer = Producer::user;
    std::int64_t timestamp_ms = 0;
    MemoryScope scope;
    SequenceNo sequence = 0;
    std::map<std::string, std::string> metadata;
};

} // namespace memoir
