#include <memoir/error.hpp>
#include <memoir/profile.hpp>
#include <memoir/prompts.hpp>
#include <memoir/util.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace memoir {

const char* to_string(ProfileCategory c) {
    switch (c) {
        case ProfileCategory::demographic: return "demographic";
        case ProfileCategory::preference: return "preference";
        case ProfileCategory::behavior: return "behavior";
        case ProfileCategory::professional: return "professional";
    }
    return "preference";
}

std::optional<ProfileCategory> profile_category_from_string(const std::string& s) {
    if (s == "demographic") return ProfileCategory::demographic;
    if (s == "preference") return ProfileCategory::preference;
    if (s == "behavior") return ProfileCategory::behavior;
    if (s == "professional") return ProfileCategory::professional;
    return std::nullopt;
}

ProfileMemory::ProfileMemory(ProfileConfig cfg, std::shared_ptr<ChatPort> chat)
    : cfg_(std::move(cfg)), chat_(std::move(chat)) {
    if (cfg_.batch_size == 0) cfg_.batch_size = 1;
    if (cfg_.extraction_prompt.empty()) {
        cfg_.extraction_prompt = prompts::kProfileExtractionV1;
    }
}

std::vector<ProfileEntry> ProfileMemory::observe(const Episode& episode) {
    if (!cfg_.enabled) return {};
    if (cfg_.extract_from_user_only && episode.producer != Producer::user) return {};

    std::unique_lock lock(mu_);
    auto& buffer = buffers_[episode.scope.user_key()];
    buffer.push_back(episode);
    if (buffer.size() < cfg_.batch_size) return {};

    std::vector<Episode> batch;
    batch.swap(buffer);
    return flush_locked(std::move(batch));
}

std::vector<ProfileEntry> ProfileMemory::flush_locked(std::vector<Episode> batch) {
    if (!chat_) {
        for (auto& ep : batch) reobserve_queue_.push_back(std::move(ep));
        return {};
    }

    std::ostringstream contents;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        contents << "Message " << (i + 1) << ":\n" << batch[i].content << "\n";
    }
    std::string prompt = cfg_.extraction_prompt;
    auto pos = prompt.find("{episode_content}");
    if (pos != std::string::npos) {
        prompt.replace(pos, std::string("{episode_content}").size(), contents.str());
    } else {
        prompt += "\n" + contents.str();
    }

    ChatCompletion reply;
    try {
        reply = chat_->complete(prompt);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::llm_unavailable ||
            e.code() == ErrorCode::provider_unavailable) {
            for (auto& ep : batch) reobserve_queue_.push_back(std::move(ep));
            return {};
        }
        throw;
    }
    consumed_ += NodeTokens{reply.input_tokens, reply.output_tokens};

    // Grammar: "PROFILE: <message#> | <category> | <key> | <value>"; the
    // message number may be omitted when the batch holds one episode.
    std::vector<std::tuple<std::size_t, ProfileCategory, std::string, std::string>> triples;
    for (const auto& raw_line : split_lines(reply.text)) {
        std::string line = trim(raw_line);
        if (line.rfind("PROFILE:", 0) != 0) continue;
        line = trim(line.substr(8));
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto bar = line.find('|', start);
            if (bar == std::string::npos) {
                fields.push_back(trim(line.substr(start)));
                break;
            }
            fields.push_back(trim(line.substr(start, bar - start)));
            start = bar + 1;
        }
        std::size_t msg_index = batch.size();  // default: last episode in batch
        std::size_t field_at = 0;
        if (fields.size() == 4) {
            try {
                msg_index = static_cast<std::size_t>(std::stoul(fields[0]));
            } catch (...) {
                continue;
            }
            field_at = 1;
        } else if (fields.size() != 3) {
            continue;
        }
        if (msg_index < 1 || msg_index > batch.size()) continue;
        auto category = profile_category_from_string(to_lower(fields[field_at]));
        if (!category) continue;
        std::string key = snake_case(fields[field_at + 1]);
        std::string value = fields[field_at + 2];
        if (key.empty() || value.empty()) continue;
        triples.emplace_back(msg_index - 1, *category, std::move(key), std::move(value));
    }

    return apply_triples(triples, batch);
}

std::vector<ProfileEntry> ProfileMemory::apply_triples(
    const std::vector<std::tuple<std::size_t, ProfileCategory, std::string, std::string>>&
        triples,
    const std::vector<Episode>& batch) {
    std::vector<ProfileEntry> produced;
    if (batch.empty()) return produced;

    const std::string user_key = batch.front().scope.user_key();
    auto& entries = by_user_[user_key];

    // List order is applied as time order when several triples share a key.
    for (const auto& [msg_index, category, key, value] : triples) {
        const Episode& source = batch[msg_index];
        Stored* live = nullptr;
        for (auto& stored : entries) {
            if (!stored.entry.superseded_by && stored.entry.category == category &&
                stored.entry.key == key) {
                live = &stored;
                break;
            }
        }
        if (live && live->entry.value == value) continue;  // already known

        Stored fresh;
        fresh.entry.id = next_id_++;
        fresh.entry.org_id = source.scope.org_id;
        fresh.entry.project_id = source.scope.project_id;
        fresh.entry.user_id = source.scope.user_id;
        fresh.entry.category = category;
        fresh.entry.key = key;
        fresh.entry.value = value;
        fresh.entry.source_episode = source.id;
        fresh.entry.created_at_ms = source.timestamp_ms;
        fresh.source_session = source.scope.session_key();

        if (live) live->entry.superseded_by = fresh.entry.id;
        entries.push_back(fresh);
        produced.push_back(fresh.entry);
    }
    return produced;
}

std::vector<ProfileEntry> ProfileMemory::query_profile(
    const std::string& org_id, const std::string& project_id, const std::string& user_id,
    std::optional<ProfileCategory> category, std::optional<std::string> key) const {
    MemoryScope probe{org_id, project_id, user_id, "-", "-"};
    std::shared_lock lock(mu_);
    auto it = by_user_.find(probe.user_key());
    if (it == by_user_.end()) return {};

    std::vector<ProfileEntry> out;
    for (const auto& stored : it->second) {
        const auto& e = stored.entry;
        if (e.superseded_by) continue;
        if (category && e.category != *category) continue;
        if (key && e.key != *key) continue;
        out.push_back(e);
    }
    std::sort(out.begin(), out.end(), [](const ProfileEntry& a, const ProfileEntry& b) {
        if (a.category != b.category) {
            return static_cast<int>(a.category) < static_cast<int>(b.category);
        }
        return a.key < b.key;
    });
    return out;
}

std::vector<ProfileEntry> ProfileMemory::all_entries(const std::string& org_id,
                                                     const std::string& project_id,
                                                     const std::string& user_id) const {
    MemoryScope probe{org_id, project_id, user_id, "-", "-"};
    std::shared_lock lock(mu_);
    auto it = by_user_.find(probe.user_key());
    if (it == by_user_.end()) return {};
    std::vector<ProfileEntry> out;
    out.reserve(it->second.size());
    for (const auto& stored : it->second) out.push_back(stored.entry);
    return out;
}

std::size_t ProfileMemory::drain_reobservation_queue() {
    std::unique_lock lock(mu_);
    std::vector<Episode> pending;
    pending.swap(reobserve_queue_);
    std::size_t created = 0;
    // Flush per episode so provenance stays exact after a backlog.
    for (auto& ep : pending) {
        created += flush_locked({std::move(ep)}).size();
    }
    return created;
}

std::size_t ProfileMemory::pending_reobservation() const {
    std::shared_lock lock(mu_);
    return reobserve_queue_.size();
}

void ProfileMemory::remove_source_session(const MemoryScope& scope) {
    const std::string session = scope.session_key();
    std::unique_lock lock(mu_);

    reobserve_queue_.erase(
        std::remove_if(reobserve_queue_.begin(), reobserve_queue_.end(),
                       [&](const Episode& ep) { return ep.scope.session_key() == session; }),
        reobserve_queue_.end());
    auto bit = buffers_.find(scope.user_key());
    if (bit != buffers_.end()) {
        auto& buf = bit->second;
        buf.erase(std::remove_if(buf.begin(), buf.end(),
                                 [&](const Episode& ep) {
                                     return ep.scope.session_key() == session;
                                 }),
                  buf.end());
    }

    auto it = by_user_.find(scope.user_key());
    if (it == by_user_.end()) return;
    auto& entries = it->second;

    std::set<std::uint64_t> removed;
    std::unordered_map<std::uint64_t, std::optional<std::uint64_t>> forward;
    for (const auto& stored : entries) {
        forward[stored.entry.id] = stored.entry.superseded_by;
        if (stored.source_session == session) removed.insert(stored.entry.id);
    }
    if (removed.empty()) return;

    entries.erase(std::remove_if(entries.begin(), entries.end(),
                                 [&](const Stored& s) { return removed.count(s.entry.id) > 0; }),
                  entries.end());

    // Splice chains over removed links.
    for (auto& stored : entries) {
        auto next = stored.entry.superseded_by;
        while (next && removed.count(*next)) next = forward[*next];
        stored.entry.superseded_by = next;
    }
}

NodeTokens ProfileMemory::consumed_tokens() const {
    std::shared_lock lock(mu_);
    return consumed_;
}

} // namespace memoir
