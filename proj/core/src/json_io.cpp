#include <memoir/json_io.hpp>
#include <memoir/util.hpp>

namespace memoir {

nlohmann::json episode_to_json(const Episode& ep) {
    return {{"id", ep.id},
            {"sequence", ep.sequence},
            {"producer", to_string(ep.producer)},
            {"timestamp_ms", ep.timestamp_ms},
            {"timestamp", format_iso8601_ms(ep.timestamp_ms)},
            {"content", ep.content},
            {"metadata", ep.metadata},
            {"session_id", ep.scope.session_id}};
}

nlohmann::json ledger_to_json(const TokenLedger& ledger) {
    auto node = [](const NodeTokens& t) {
        return nlohmann::json{{"input", t.input}, {"output", t.output}};
    };
    return {{"router", node(ledger.router)}, {"chain", node(ledger.chain)},
            {"split", node(ledger.split)},   {"direct", node(ledger.direct)},
            {"total", node(ledger.total())}, {"notes", ledger.notes}};
}

nlohmann::json cluster_to_json(const EpisodeCluster& cluster, const EpisodeStore& store) {
    nlohmann::json members = nlohmann::json::array();
    for (EpisodeId id : cluster.members) {
        if (auto ep = store.find_episode(id)) members.push_back(episode_to_json(*ep));
    }
    return {{"nucleus", cluster.nucleus},
            {"score", cluster.score},
            {"members", members},
            {"matched_sentences", cluster.matched_sentences}};
}

nlohmann::json outcome_to_json(const RetrievalOutcome& outcome, const EpisodeStore& store) {
    nlohmann::json stm = nlohmann::json::array();
    for (const auto& ep : outcome.stm_episodes) stm.push_back(episode_to_json(ep));
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& c : outcome.ltm_clusters) clusters.push_back(cluster_to_json(c, store));
    return {{"stm_episodes", stm},
            {"stm_summary", outcome.stm_summary},
            {"clusters", clusters},
            {"rendered_context", outcome.rendered_context},
            {"ledger", ledger_to_json(outcome.ledger)}};
}

nlohmann::json profile_entry_to_json(const ProfileEntry& entry) {
    nlohmann::json j{{"id", entry.id},
                     {"category", to_string(entry.category)},
                     {"key", entry.key},
                     {"value", entry.value},
                     {"source_episode", entry.source_episode},
                     {"created_at_ms", entry.created_at_ms}};
    if (entry.superseded_by) j["superseded_by"] = *entry.superseded_by;
    return j;
}

nlohmann::json search_result_to_json(const MemoryEngine::SearchResult& result,
                                     const EpisodeStore& store) {
    nlohmann::json j = outcome_to_json(result.outcome, store);
    if (result.route) {
        j["route"] = {{"route", to_string(result.route->route)},
                      {"rationale", result.route->rationale},
                      {"fallback", result.route->fallback}};
        j["issued_queries"] = result.issued_queries;
        if (result.route->route == Route::chain) {
            j["chain"] = {{"iterations", result.chain.iterations},
                          {"confidence", result.chain.confidence},
                          {"stopped_early", result.chain.stopped_early}};
        }
    }
    return j;
}

std::optional<MemoryScope> scope_from_request_json(const nlohmann::json& j) {
    MemoryScope s;
    s.org_id = j.value("org_id", "");
    s.project_id = j.value("project_id", "");
    s.user_id = j.value("user_id", "");
    s.agent_id = j.value("agent_id", "");
    s.session_id = j.value("session_id", "");
    if (!s.valid()) return std::nullopt;
    return s;
}

} // namespace memoir
