#include <memoir/error.hpp>
#include <memoir/prompts.hpp>
#include <memoir/stm.hpp>

#include <sstream>
#include <stdexcept>

namespace memoir {

ShortTermMemory::ShortTermMemory(StmConfig cfg, std::shared_ptr<ChatPort> chat)
    : cfg_(cfg), chat_(std::move(chat)) {
    if (cfg_.capacity == 0) {
        throw std::invalid_argument("stm capacity must be positive");
    }
}

std::vector<Episode> ShortTermMemory::append(const MemoryScope& scope, const Episode& episode) {
    if (!scope.valid()) {
        raise(ErrorCode::scope_invalid, "scope requires all five components");
    }
    if (episode.scope != scope) {
        throw std::invalid_argument("episode does not belong to this session");
    }

    std::vector<Episode> evicted;
    bool want_summary = false;
    {
        std::unique_lock lock(mu_);
        State& st = sessions_[scope.session_key()];
        st.window.push_back(episode);
        while (st.window.size() > cfg_.capacity) {
            evicted.push_back(st.window.front());
            st.window.pop_front();
        }
        for (const auto& ep : evicted) st.pending.push_back(ep);
        want_summary = !evicted.empty() && cfg_.summary_enabled && auto_summarize_;
        // Deferred summarization (replay) leaves the summary flagged stale;
        // with summaries disabled there is nothing to go stale.
        if (!evicted.empty() && cfg_.summary_enabled && !want_summary) st.stale = true;
    }
    if (want_summary) {
        try {
            summarize(scope);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::llm_unavailable) throw;
        }
    }
    return evicted;
}

std::string ShortTermMemory::summarize_locked(State& st) {
    if (!chat_) {
        st.stale = true;
        raise(ErrorCode::llm_unavailable, "no chat provider configured");
    }

    std::ostringstream messages;
    const auto& source = !st.pending.empty()
                             ? st.pending
                             : std::vector<Episode>(st.window.begin(), st.window.end());
    for (const auto& ep : source) {
        messages << to_string(ep.producer) << ": " << ep.content << "\n";
    }

    std::string prompt = prompts::kStmSummaryV1;
    auto replace = [&prompt](const std::string& tag, const std::string& value) {
        auto pos = prompt.find(tag);
        if (pos != std::string::npos) prompt.replace(pos, tag.size(), value);
    };
    replace("{summary}", st.summary.empty() ? "(none)" : st.summary);
    replace("{messages}", messages.str());

    ChatCompletion reply;
    try {
        reply = chat_->complete(prompt);
    } catch (const Error&) {
        st.stale = true;
        throw;
    }
    consumed_ += NodeTokens{reply.input_tokens, reply.output_tokens};
    st.summary = reply.text;
    st.version += 1;
    st.stale = false;
    st.pending.clear();
    return st.summary;
}

std::string ShortTermMemory::summarize(const MemoryScope& scope) {
    std::unique_lock lock(mu_);
    auto it = sessions_.find(scope.session_key());
    if (it == sessions_.end() ||
        (it->second.window.empty() && it->second.pending.empty())) {
        throw std::invalid_argument("summarize requires a session with at least one episode");
    }
    return summarize_locked(it->second);
}

std::pair<std::vector<Episode>, std::string> ShortTermMemory::get_context(
    const MemoryScope& scope) const {
    std::shared_lock lock(mu_);
    auto it = sessions_.find(scope.session_key());
    if (it == sessions_.end()) return {{}, ""};
    const State& st = it->second;
    return {{st.window.begin(), st.window.end()}, st.summary};
}

std::uint32_t ShortTermMemory::summary_version(const MemoryScope& scope) const {
    std::shared_lock lock(mu_);
    auto it = sessions_.find(scope.session_key());
    return it == sessions_.end() ? 0 : it->second.version;
}

bool ShortTermMemory::summary_stale(const MemoryScope& scope) const {
    std::shared_lock lock(mu_);
    auto it = sessions_.find(scope.session_key());
    return it != sessions_.end() && it->second.stale;
}

void ShortTermMemory::remove_session(const MemoryScope& scope) {
    std::unique_lock lock(mu_);
    sessions_.erase(scope.session_key());
}

NodeTokens ShortTermMemory::consumed_tokens() const {
    std::shared_lock lock(mu_);
    return consumed_;
}

} // namespace memoir
