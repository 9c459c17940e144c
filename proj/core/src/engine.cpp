#include <memoir/engine.hpp>
#include <memoir/error.hpp>
#include <memoir/http_providers.hpp>

#include <cstdlib>

namespace memoir {

namespace {

std::string resolve_api_key(const ProviderSpec& spec) {
    if (!spec.api_key.empty()) return spec.api_key;
    if (!spec.api_key_env.empty()) {
        const char* v = std::getenv(spec.api_key_env.c_str());
        if (v) return v;
    }
    return "";
}

HttpEndpoint endpoint_of(const ProviderSpec& spec) {
    HttpEndpoint ep;
    ep.base_url = spec.endpoint;
    ep.model = spec.model;
    ep.api_key = resolve_api_key(spec);
    ep.timeout_ms = spec.timeout_ms;
    ep.retry_base_ms = spec.retry_base_ms;
    ep.max_in_flight = spec.max_in_flight;
    return ep;
}

} // namespace

std::shared_ptr<EmbedderPort> make_embedder(const ProviderSpec& spec) {
    if (spec.kind == "hash" || spec.kind.empty()) {
        return std::make_shared<HashEmbedder>(spec.dimension,
                                              spec.id.empty() ? "hash64" : spec.id);
    }
    if (spec.kind == "http") {
        return std::make_shared<HttpEmbedder>(endpoint_of(spec), spec.dimension,
                                              spec.id.empty() ? "http_embedder" : spec.id);
    }
    raise(ErrorCode::bad_config, "unknown embedder kind: " + spec.kind);
}

std::shared_ptr<ChatPort> make_chat(const ProviderSpec& spec) {
    if (spec.kind == "none" || spec.kind.empty()) return nullptr;
    if (spec.kind == "http") {
        return std::make_shared<HttpChat>(endpoint_of(spec),
                                          spec.id.empty() ? "http_chat" : spec.id);
    }
    raise(ErrorCode::bad_config, "unknown chat kind: " + spec.kind);
}

std::shared_ptr<RerankerPort> make_reranker(const ProviderSpec& spec) {
    if (spec.kind == "token_overlap" || spec.kind.empty()) {
        return std::make_shared<TokenOverlapReranker>(spec.id.empty() ? "token_overlap"
                                                                      : spec.id);
    }
    if (spec.kind == "none") return nullptr;
    if (spec.kind == "http") {
        return std::make_shared<HttpReranker>(endpoint_of(spec),
                                              spec.id.empty() ? "http_reranker" : spec.id);
    }
    raise(ErrorCode::bad_config, "unknown reranker kind: " + spec.kind);
}

MemoryEngine::MemoryEngine(EngineConfig cfg, std::shared_ptr<EmbedderPort> embedder,
                           std::shared_ptr<ChatPort> chat,
                           std::shared_ptr<RerankerPort> reranker,
                           std::shared_ptr<StoragePort> storage)
    : cfg_(std::move(cfg)) {
    embedder_ = embedder ? std::move(embedder) : make_embedder(cfg_.embedder);
    chat_ = chat ? std::move(chat) : make_chat(cfg_.chat);
    reranker_ = reranker ? std::move(reranker) : make_reranker(cfg_.reranker);
    cfg_.index.embedder_id = embedder_->id();  // the index always names the wired port
    if (storage) {
        storage_ = std::move(storage);
    } else if (!cfg_.store_path.empty()) {
        storage_ = std::make_shared<FileStorage>(cfg_.store_path);
    } else {
        storage_ = std::make_shared<MemoryStorage>();
    }

    store_ = std::make_unique<EpisodeStore>(storage_);
    stm_ = std::make_unique<ShortTermMemory>(cfg_.stm, chat_);
    ltm_ = std::make_unique<LtmIndex>(cfg_.index, embedder_);
    profile_ = std::make_unique<ProfileMemory>(cfg_.profile, chat_);
    recall_ = std::make_unique<RecallPipeline>(*store_, *ltm_, *stm_, reranker_);
    agent_ = std::make_unique<RetrievalAgent>(*recall_, chat_, cfg_.agent);

    // Ingestion fan-out, in contract order.
    store_->add_append_sink([this](const Episode& ep) { stm_->append(ep.scope, ep); });
    store_->add_append_sink([this](const Episode& ep) { ltm_->index_episode(ep); });
    store_->add_append_sink([this](const Episode& ep) { profile_->observe(ep); });

    store_->add_delete_sink([this](const MemoryScope& s) { stm_->remove_session(s); });
    store_->add_delete_sink([this](const MemoryScope& s) { ltm_->remove_session(s); });
    store_->add_delete_sink([this](const MemoryScope& s) { profile_->remove_source_session(s); });
}

std::mutex& MemoryEngine::session_mutex(const MemoryScope& scope) const {
    std::lock_guard<std::mutex> lock(session_mu_map_guard_);
    auto& slot = session_mutexes_[scope.session_key()];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
}

Episode MemoryEngine::add_episode(const MemoryScope& scope, const std::string& content,
                                  Producer producer, std::int64_t timestamp_ms,
                                  std::map<std::string, std::string> metadata) {
    std::lock_guard<std::mutex> lock(session_mutex(scope));
    return store_->add_episode(scope, content, producer, timestamp_ms, std::move(metadata));
}

std::vector<Episode> MemoryEngine::get_episodes(const MemoryScope& scope, SequenceNo lo,
                                                SequenceNo hi) const {
    return store_->get_episodes(scope, lo, hi);
}

std::size_t MemoryEngine::delete_session(const MemoryScope& scope) {
    std::lock_guard<std::mutex> lock(session_mutex(scope));
    return store_->delete_session(scope);
}

MemoryEngine::SearchResult MemoryEngine::search(const MemoryScope& scope,
                                                const SearchRequest& request) const {
    SearchResult result;
    if (request.agent_mode) {
        AgentResult agent_result =
            agent_->search(scope, request.query, request.cfg, request.filter);
        result.outcome = std::move(agent_result.outcome);
        result.route = std::move(agent_result.decision);
        result.chain = std::move(agent_result.chain);
        result.issued_queries = std::move(agent_result.issued_queries);
    } else {
        result.outcome = recall_->search(scope, request.query, request.cfg, request.filter);
        result.issued_queries = {request.query};
    }
    return result;
}

std::vector<ProfileEntry> MemoryEngine::query_profile(
    const std::string& org_id, const std::string& project_id, const std::string& user_id,
    std::optional<ProfileCategory> category, std::optional<std::string> key) const {
    return profile_->query_profile(org_id, project_id, user_id, category, key);
}

std::size_t MemoryEngine::replay() {
    stm_->set_auto_summarize(false);
    std::size_t n = store_->replay_from_storage();
    stm_->set_auto_summarize(true);
    return n;
}

MemoryEngine::IngestTokens MemoryEngine::ingest_tokens() const {
    return {stm_->consumed_tokens(), profile_->consumed_tokens()};
}

} // namespace memoir
