#include <memoir/agent.hpp>
#include <memoir/error.hpp>
#include <memoir/util.hpp>

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

namespace memoir {

const char* to_string(Route r) {
    switch (r) {
        case Route::direct: return "direct";
        case Route::split: return "split";
        case Route::chain: return "chain";
    }
    return "direct";
}

RetrievalAgent::RetrievalAgent(const RecallPipeline& recall, std::shared_ptr<ChatPort> chat,
                               AgentConfig cfg)
    : recall_(recall), chat_(std::move(chat)), cfg_(std::move(cfg)) {
    tree_ = {
        {"router", cfg_.router_cost},
        {"chain", cfg_.chain_cost},
        {"split", cfg_.split_cost},
        {"direct", cfg_.direct_cost},
    };
}

std::string RetrievalAgent::fill(const std::string& prompt, const std::string& tag,
                                 const std::string& value) const {
    std::string out = prompt;
    auto pos = out.find(tag);
    if (pos != std::string::npos) out.replace(pos, tag.size(), value);
    return out;
}

RouteDecision RetrievalAgent::route(const std::string& query) const {
    RouteDecision decision;
    if (!chat_) {
        decision.route = Route::direct;
        decision.fallback = true;
        decision.rationale = "router unavailable";
        return decision;
    }

    const std::string prompt = fill(cfg_.router_prompt, "{query}", query);
    auto parse = [&](const std::string& text) -> std::optional<Route> {
        for (const auto& raw : split_lines(text)) {
            std::string line = trim(raw);
            if (to_lower(line).rfind("route:", 0) != 0) continue;
            std::string value = to_lower(trim(line.substr(6)));
            if (value == "direct") return Route::direct;
            if (value == "split") return Route::split;
            if (value == "chain") return Route::chain;
        }
        return std::nullopt;
    };
    auto rationale_of = [](const std::string& text) {
        for (const auto& raw : split_lines(text)) {
            std::string line = trim(raw);
            if (to_lower(line).rfind("rationale:", 0) == 0) return trim(line.substr(10));
        }
        return std::string{};
    };

    for (int attempt = 0; attempt < 2; ++attempt) {
        ChatCompletion reply;
        try {
            reply = chat_->complete(prompt);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::llm_unavailable ||
                e.code() == ErrorCode::provider_unavailable) {
                decision.route = Route::direct;
                decision.fallback = true;
                decision.rationale = "router unavailable";
                return decision;
            }
            throw;
        }
        decision.router_tokens += NodeTokens{reply.input_tokens, reply.output_tokens};
        if (auto r = parse(reply.text)) {
            decision.route = *r;
            decision.rationale = rationale_of(reply.text);
            return decision;
        }
    }

    // Conservative default: prefer the strategy with the widest recall.
    decision.route = Route::chain;
    decision.fallback = true;
    decision.rationale = "unparseable router output; defaulted to chain";
    return decision;
}

void RetrievalAgent::finalize(AgentResult& result, std::vector<EpisodeCluster> pooled,
                              const RetrievalConfig& cfg) const {
    auto& outcome = result.outcome;
    pooled = recall_.dedup(std::move(pooled), outcome.stm_episodes);
    // Pooled evidence is never truncated below its own size: each sub-search
    // already applied cluster_top_k, and dropping accumulated evidence would
    // defeat the fan-out/chain strategies.
    std::size_t keep = std::max<std::size_t>(cfg.cluster_top_k, pooled.size());
    pooled = recall_.rerank(result.issued_queries, std::move(pooled), keep, &outcome.ledger);
    RecallPipeline::sort_chronological(pooled);
    outcome.ltm_clusters = std::move(pooled);
    outcome.rendered_context = recall_.render_context(outcome, cfg.format);
}

AgentResult RetrievalAgent::run_direct(const MemoryScope& scope, const std::string& query,
                                       const RetrievalConfig& cfg, const SearchFilter& filter,
                                       RouteDecision decision) const {
    AgentResult result;
    result.outcome = recall_.search(scope, query, cfg, filter);
    result.outcome.ledger.router += decision.router_tokens;
    result.decision = std::move(decision);
    result.issued_queries = {query};
    return result;
}

AgentResult RetrievalAgent::run_split(const MemoryScope& scope, const std::string& query,
                                      const RetrievalConfig& cfg, const SearchFilter& filter,
                                      RouteDecision decision) const {
    TokenLedger ledger;
    ledger.router += decision.router_tokens;

    std::vector<std::string> subqueries;
    bool degenerate = false;
    if (!chat_) {
        degenerate = true;
    } else {
        try {
            auto reply = chat_->complete(fill(cfg_.split_prompt, "{query}", query));
            ledger.split += NodeTokens{reply.input_tokens, reply.output_tokens};
            for (const auto& raw : split_lines(reply.text)) {
                std::string line = trim(raw);
                if (to_lower(line).rfind("subquery:", 0) != 0) continue;
                std::string sub = trim(line.substr(9));
                if (!sub.empty()) subqueries.push_back(sub);
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::llm_unavailable ||
                e.code() == ErrorCode::provider_unavailable) {
                degenerate = true;
                ledger.add_note("split_llm_unavailable");
            } else {
                throw;
            }
        }
    }

    if (subqueries.size() > cfg_.max_subqueries) {
        subqueries.resize(cfg_.max_subqueries);
        ledger.add_note("subqueries_clamped_to_" + std::to_string(cfg_.max_subqueries));
    }
    if (!degenerate && subqueries.size() < cfg_.min_subqueries) {
        degenerate = true;
        ledger.add_note("split_fallback_direct");
    }

    if (degenerate) {
        decision.fallback = true;
        auto result = run_direct(scope, query, cfg, filter, std::move(decision));
        // Preserve decomposition spend and notes from the failed split.
        result.outcome.ledger.split += ledger.split;
        for (const auto& n : ledger.notes) result.outcome.ledger.add_note(n);
        return result;
    }

    // Independent sub-queries fan out concurrently and join before pooling.
    std::vector<std::future<RetrievalOutcome>> futures;
    futures.reserve(subqueries.size());
    for (const auto& sub : subqueries) {
        futures.push_back(std::async(std::launch::async, [&, sub]() {
            return recall_.search(scope, sub, cfg, filter);
        }));
    }

    AgentResult result;
    result.decision = std::move(decision);
    result.issued_queries.push_back(query);
    for (const auto& sub : subqueries) result.issued_queries.push_back(sub);

    std::vector<EpisodeCluster> pooled;
    for (auto& f : futures) {
        RetrievalOutcome sub_outcome = f.get();
        for (auto& c : sub_outcome.ltm_clusters) pooled.push_back(std::move(c));
        for (const auto& n : sub_outcome.ledger.notes) ledger.add_note(n);
        if (result.outcome.stm_episodes.empty() && result.outcome.stm_summary.empty()) {
            result.outcome.stm_episodes = std::move(sub_outcome.stm_episodes);
            result.outcome.stm_summary = std::move(sub_outcome.stm_summary);
        }
    }
    result.outcome.ledger = std::move(ledger);
    finalize(result, std::move(pooled), cfg);
    return result;
}

RetrievalAgent::Sufficiency RetrievalAgent::parse_sufficiency(const std::string& text) const {
    Sufficiency s;
    for (const auto& raw : split_lines(text)) {
        std::string line = trim(raw);
        std::string lower = to_lower(line);
        if (lower.rfind("sufficient:", 0) == 0) {
            std::string value = to_lower(trim(line.substr(11)));
            s.parsed = true;
            s.sufficient = value.rfind("yes", 0) == 0 || value == "true";
        } else if (lower.rfind("confidence:", 0) == 0) {
            try {
                s.confidence = std::stod(trim(line.substr(11)));
            } catch (...) {
                s.confidence = 0.0;  // missing or malformed reads as 0
            }
            s.confidence = std::clamp(s.confidence, 0.0, 1.0);
        } else if (lower.rfind("next_query:", 0) == 0) {
            s.next_query = trim(line.substr(11));
        }
    }
    return s;
}

AgentResult RetrievalAgent::run_chain(const MemoryScope& scope, const std::string& query,
                                      const RetrievalConfig& cfg, const SearchFilter& filter,
                                      RouteDecision decision) const {
    AgentResult result;
    result.outcome.ledger.router += decision.router_tokens;
    result.decision = std::move(decision);
    result.chain.query_history.push_back(query);

    std::vector<EpisodeCluster> evidence;
    std::string current = query;
    bool retried = false;
    bool stm_captured = false;

    for (std::size_t iteration = 1; iteration <= cfg_.max_iterations; ++iteration) {
        result.chain.iterations = iteration;
        RetrievalOutcome step = recall_.search(scope, current, cfg, filter);
        if (!stm_captured) {
            result.outcome.stm_episodes = std::move(step.stm_episodes);
            result.outcome.stm_summary = std::move(step.stm_summary);
            stm_captured = true;
        }
        for (const auto& n : step.ledger.notes) result.outcome.ledger.add_note(n);
        for (auto& c : step.ltm_clusters) evidence.push_back(std::move(c));
        // Accumulated evidence dedups between iterations; union only grows.
        evidence = recall_.dedup(std::move(evidence), result.outcome.stm_episodes);

        if (!chat_) {
            result.outcome.ledger.add_note("chain_llm_unavailable");
            break;
        }

        std::ostringstream history;
        for (const auto& q : result.chain.query_history) history << q << "\n";
        std::ostringstream shown;
        for (const auto& c : evidence) shown << recall_.cluster_text(c) << "\n";
        std::string prompt = cfg_.sufficiency_prompt;
        prompt = fill(prompt, "{original_query}", query);
        prompt = fill(prompt, "{query_history}", history.str());
        prompt = fill(prompt, "{evidence}", shown.str());

        Sufficiency verdict;
        bool unavailable = false;
        for (;;) {
            ChatCompletion reply;
            try {
                reply = chat_->complete(prompt);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::llm_unavailable ||
                    e.code() == ErrorCode::provider_unavailable) {
                    unavailable = true;
                    result.outcome.ledger.add_note("chain_llm_unavailable");
                    break;
                }
                throw;
            }
            result.outcome.ledger.chain += NodeTokens{reply.input_tokens, reply.output_tokens};
            verdict = parse_sufficiency(reply.text);
            if (verdict.parsed || retried) break;
            retried = true;  // one retry for the whole chain
        }
        if (unavailable) break;
        if (!verdict.parsed) break;  // retry exhausted: terminate with evidence so far

        result.chain.confidence = verdict.confidence;
        if (verdict.sufficient && verdict.confidence >= cfg_.confidence_threshold) {
            result.chain.stopped_early = true;
            break;
        }
        if (iteration == cfg_.max_iterations) break;

        if (!verdict.next_query.empty() && verdict.next_query != current) {
            current = verdict.next_query;
            result.chain.query_history.push_back(current);
        }
    }

    result.issued_queries = result.chain.query_history;
    finalize(result, std::move(evidence), cfg);
    return result;
}

AgentResult RetrievalAgent::search(const MemoryScope& scope, const std::string& query,
                                   const RetrievalConfig& cfg,
                                   const SearchFilter& filter) const {
    cfg.validate();
    RouteDecision decision = route(query);
    switch (decision.route) {
        case Route::direct:
            return run_direct(scope, query, cfg, filter, std::move(decision));
        case Route::split:
            return run_split(scope, query, cfg, filter, std::move(decision));
        case Route::chain:
            return run_chain(scope, query, cfg, filter, std::move(decision));
    }
    return run_direct(scope, query, cfg, filter, std::move(decision));
}

std::string RetrievalAgent::account(const TokenLedger& ledger) {
    std::ostringstream out;
    char line[96];
    std::snprintf(line, sizeof(line), "%-8s %12s %12s\n", "node", "input", "output");
    out << line;
    auto row = [&](const char* name, const NodeTokens& t) {
        std::snprintf(line, sizeof(line), "%-8s %12llu %12llu\n", name,
                      static_cast<unsigned long long>(t.input),
                      static_cast<unsigned long long>(t.output));
        out << line;
    };
    row("router", ledger.router);
    row("chain", ledger.chain);
    row("split", ledger.split);
    row("direct", ledger.direct);
    row("total", ledger.total());
    return out.str();
}

} // namespace memoir
