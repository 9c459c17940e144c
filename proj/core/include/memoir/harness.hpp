#pragma once

#include <memoir/engine.hpp>
#include <memoir/json_io.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace memoir {

/// One JSONL transcript line:
///   {"session_id": ..., "producer": ..., "timestamp": ..., "content": ..., "metadata": {...}}
/// timestamp is epoch milliseconds or an ISO-8601 UTC string; lines within a
/// session must be timestamp-ordered.
struct TranscriptLine {
    std::string session_id;
    Producer producer = Producer::user;
    std::int64_t timestamp_ms = 0;
    std::string content;
    std::map<std::string, std::string> metadata;
};

/// Scope components shared by every session in a replayed transcript; the
/// line's session_id completes the five-part scope.
struct ScopePrefix {
    std::string org_id = "default";
    std::string project_id = "default";
    std::string user_id = "user";
    std::string agent_id = "agent";

    MemoryScope scope_for(const std::string& session_id) const {
        return {org_id, project_id, user_id, agent_id, session_id};
    }
};

struct IngestReport {
    std::size_t episodes = 0;
    std::size_t sentences = 0;
    std::size_t sessions = 0;
    double parse_ms = 0.0;
    double ingest_ms = 0.0;
    NodeTokens summary_tokens;     // LLM spend on window summaries
    NodeTokens extraction_tokens;  // LLM spend on profile extraction
};

/// One evaluation query. Gold episodes are addressed as
/// "<session_id>#<sequence>" so transcripts stay portable across runs.
struct QuerySpec {
    std::string query;
    std::vector<std::string> gold_episode_ids;
    std::string session_id;  // may be empty when the corpus has one session
    std::optional<bool> agent_mode;
    std::optional<nlohmann::json> config_overrides;
    std::string reference_answer;  // enables the answer/judge hook
};

struct QueryResult {
    std::string query;
    std::string session_id;
    bool agent_mode = false;
    std::vector<std::string> gold;
    std::vector<std::string> retrieved;
    double recall = 0.0;
    bool hit = false;
    std::string route;  // empty outside agent mode
    TokenLedger ledger;

    // Answer/judge hook, populated only when a chat provider is configured
    // and the query carries a reference answer.
    bool judged = false;
    std::string answer;
    int judge_score = 0;       // 0|1 from the judge
    double answer_f1 = 0.0;    // token-level F1 of answer vs reference
    NodeTokens judge_tokens;   // harness-side spend, kept out of the engine ledger
};

struct MetricsReport {
    int schema_version = 1;
    std::string mode;  // "memory" | "agent"
    nlohmann::json config_echo;
    std::vector<QueryResult> queries;
    std::vector<std::string> warnings;  // skipped queries etc.

    std::size_t evaluated = 0;
    std::size_t skipped = 0;
    double mean_recall = 0.0;
    double hit_rate = 0.0;
    double mean_input_tokens = 0.0;
    double mean_output_tokens = 0.0;
    std::map<std::string, std::size_t> route_counts;

    std::size_t judged = 0;  // queries that went through the answer/judge hook
    double mean_judge_score = 0.0;
    double mean_answer_f1 = 0.0;
};

/// Replays transcripts into an engine, runs query suites, and reports
/// retrieval recall and token metrics. Timing lands in the ingest report
/// only; metrics reports are deterministic byte-for-byte under deterministic
/// providers.
class Harness {
public:
    explicit Harness(MemoryEngine& engine) : engine_(engine) {}

    static std::vector<TranscriptLine> parse_transcript(std::istream& in);
    static std::vector<QuerySpec> parse_queries(const nlohmann::json& j);

    IngestReport ingest(std::istream& jsonl, const ScopePrefix& prefix);
    IngestReport ingest_file(const std::string& path, const ScopePrefix& prefix);

    MetricsReport evaluate(const std::vector<QuerySpec>& queries, const std::string& mode,
                           const ScopePrefix& prefix, std::size_t parallel = 1);

    static nlohmann::json report_json(const MetricsReport& report);
    static std::string report_table(const MetricsReport& report);

    /// Per-metric deltas between two reports over the same query set.
    static nlohmann::json diff(const nlohmann::json& a, const nlohmann::json& b);
    static std::string diff_table(const nlohmann::json& delta);

private:
    MemoryEngine& engine_;
};

} // namespace memoir
