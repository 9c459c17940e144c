#pragma once

#include <memoir/ledger.hpp>
#include <memoir/prompts.hpp>
#include <memoir/providers.hpp>
#include <memoir/recall.hpp>

#include <memory>
#include <string>
#include <vector>

namespace memoir {

enum class Route { direct, split, chain };

const char* to_string(Route r);

struct RouteDecision {
    Route route = Route::direct;
    std::string rationale;
    NodeTokens router_tokens;
    bool fallback = false;  // unavailable router, or degenerate decomposition
};

struct ChainState {
    std::size_t iterations = 0;               // searches performed, <= max_iterations
    std::vector<std::string> query_history;   // [0] is the original query
    double confidence = 0.0;
    bool stopped_early = false;
};

/// Advisory per-node cost properties for future budget-aware routing.
/// Values are static configuration, not measurements.
struct AgentCostProfile {
    double accuracy_score = 0.0;
    double token_cost = 0.0;
    double time_cost = 0.0;
};

struct AgentConfig {
    std::size_t max_iterations = 3;
    double confidence_threshold = 0.8;
    std::size_t max_subqueries = 6;
    std::size_t min_subqueries = 2;
    std::string router_prompt = prompts::kRouterV1;
    std::string sufficiency_prompt = prompts::kSufficiencyV1;
    std::string split_prompt = prompts::kSplitV1;
    AgentCostProfile router_cost{0.0, 1.0, 1.0};
    AgentCostProfile direct_cost{0.6, 0.0, 1.0};
    AgentCostProfile split_cost{0.7, 2.0, 2.0};
    AgentCostProfile chain_cost{0.8, 5.0, 4.0};
};

struct AgentResult {
    RetrievalOutcome outcome;
    RouteDecision decision;
    ChainState chain;                         // populated on the chain route
    std::vector<std::string> issued_queries;  // original plus rewrites/sub-queries
};

/// Opt-in LLM-orchestrated retrieval. One routing call classifies the query
/// into direct / split / chain; every strategy delegates to the same
/// RecallPipeline::search entry point, so index and reranker improvements
/// propagate to all of them. The strategy tree is built once at
/// construction; callers that never enable agent mode never touch this
/// class.
class RetrievalAgent {
public:
    struct ToolNode {
        std::string name;
        AgentCostProfile cost;
    };

    RetrievalAgent(const RecallPipeline& recall, std::shared_ptr<ChatPort> chat,
                   AgentConfig cfg = {});

    AgentResult search(const MemoryScope& scope, const std::string& query,
                       const RetrievalConfig& cfg, const SearchFilter& filter = {}) const;

    /// One LLM classification call; one retry on unparseable output, then a
    /// conservative default to chain. Falls back to direct when the router
    /// LLM is unavailable.
    RouteDecision route(const std::string& query) const;

    AgentResult run_direct(const MemoryScope& scope, const std::string& query,
                           const RetrievalConfig& cfg, const SearchFilter& filter,
                           RouteDecision decision) const;
    AgentResult run_split(const MemoryScope& scope, const std::string& query,
                          const RetrievalConfig& cfg, const SearchFilter& filter,
                          RouteDecision decision) const;
    AgentResult run_chain(const MemoryScope& scope, const std::string& query,
                          const RetrievalConfig& cfg, const SearchFilter& filter,
                          RouteDecision decision) const;

    /// Fixed-column cost report over one ledger.
    static std::string account(const TokenLedger& ledger);

    const std::vector<ToolNode>& tool_tree() const { return tree_; }
    const AgentConfig& config() const { return cfg_; }

private:
    struct Sufficiency {
        bool parsed = false;
        bool sufficient = false;
        double confidence = 0.0;
        std::string next_query;
    };

    std::string fill(const std::string& prompt, const std::string& tag,
                     const std::string& value) const;
    Sufficiency parse_sufficiency(const std::string& text) const;
    void finalize(AgentResult& result, std::vector<EpisodeCluster> pooled,
                  const RetrievalConfig& cfg) const;

    const RecallPipeline& recall_;
    std::shared_ptr<ChatPort> chat_;
    AgentConfig cfg_;
    std::vector<ToolNode> tree_;
};

} // namespace memoir
