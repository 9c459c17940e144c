#pragma once

#include <memoir/agent.hpp>
#include <memoir/ltm_index.hpp>
#include <memoir/profile.hpp>
#include <memoir/recall.hpp>
#include <memoir/stm.hpp>

#include <json.hpp>

#include <string>

namespace memoir {

/// How a provider port is built. `kind` selects the implementation:
/// embedder: "hash" | "http";  chat: "none" | "http";
/// reranker: "token_overlap" | "http" | "none".
struct ProviderSpec {
    std::string kind;
    std::string id;
    std::size_t dimension = 64;  // hash embedder / declared http dimension
    std::string endpoint;
    std::string model;
    std::string api_key;         // literal key, or
    std::string api_key_env;     // environment variable holding it
    int timeout_ms = 30000;
    int retry_base_ms = 100;
    int max_in_flight = 4;
};

struct EngineConfig {
    StmConfig stm;
    IndexConfig index;
    RetrievalConfig retrieval;
    ProfileConfig profile;
    AgentConfig agent;

    ProviderSpec embedder{.kind = "hash", .id = "hash64"};
    ProviderSpec chat{.kind = "none"};
    ProviderSpec reranker{.kind = "token_overlap", .id = "token_overlap"};

    std::string store_path;     // empty: in-memory event log
    std::string search_prompt;  // opaque caller-side prompt, echoed in reports
    std::string service_host = "127.0.0.1";
    int service_port = 8080;

    static EngineConfig from_json(const nlohmann::json& j);
    static EngineConfig from_file(const std::string& path);
    nlohmann::json to_json() const;
};

} // namespace memoir
