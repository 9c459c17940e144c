#pragma once

#include <memoir/agent.hpp>
#include <memoir/engine.hpp>
#include <memoir/ltm_index.hpp>
#include <memoir/profile.hpp>
#include <memoir/recall.hpp>
#include <memoir/types.hpp>

#include <json.hpp>

namespace memoir {

nlohmann::json episode_to_json(const Episode& ep);
nlohmann::json ledger_to_json(const TokenLedger& ledger);
nlohmann::json cluster_to_json(const EpisodeCluster& cluster, const EpisodeStore& store);
nlohmann::json outcome_to_json(const RetrievalOutcome& outcome, const EpisodeStore& store);
nlohmann::json profile_entry_to_json(const ProfileEntry& entry);
nlohmann::json search_result_to_json(const MemoryEngine::SearchResult& result,
                                     const EpisodeStore& store);

std::optional<MemoryScope> scope_from_request_json(const nlohmann::json& j);

} // namespace memoir
