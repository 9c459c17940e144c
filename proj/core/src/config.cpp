#include <memoir/config.hpp>
#include <memoir/error.hpp>

#include <fstream>

namespace memoir {

namespace {

void read_provider(const nlohmann::json& j, ProviderSpec& spec) {
    spec.kind = j.value("kind", spec.kind);
    spec.id = j.value("id", spec.id);
    spec.dimension = j.value("dimension", spec.dimension);
    spec.endpoint = j.value("endpoint", spec.endpoint);
    spec.model = j.value("model", spec.model);
    spec.api_key = j.value("api_key", spec.api_key);
    spec.api_key_env = j.value("api_key_env", spec.api_key_env);
    spec.timeout_ms = j.value("timeout_ms", spec.timeout_ms);
    spec.retry_base_ms = j.value("retry_base_ms", spec.retry_base_ms);
    spec.max_in_flight = j.value("max_in_flight", spec.max_in_flight);
}

nlohmann::json provider_json(const ProviderSpec& s) {
    return {{"kind", s.kind},         {"id", s.id},
            {"dimension", s.dimension},{"endpoint", s.endpoint},
            {"model", s.model},        {"api_key_env", s.api_key_env},
            {"timeout_ms", s.timeout_ms},{"retry_base_ms", s.retry_base_ms},
            {"max_in_flight", s.max_in_flight}};
}

} // namespace

EngineConfig EngineConfig::from_json(const nlohmann::json& j) {
    EngineConfig cfg;

    if (j.contains("stm")) {
        const auto& s = j.at("stm");
        cfg.stm.capacity = s.value("capacity", cfg.stm.capacity);
        cfg.stm.summary_enabled = s.value("summary_enabled", cfg.stm.summary_enabled);
    }
    if (j.contains("index")) {
        const auto& s = j.at("index");
        cfg.index.chunking_enabled = s.value("chunking_enabled", cfg.index.chunking_enabled);
        cfg.index.embedder_id = s.value("embedder", cfg.index.embedder_id);
        if (s.contains("abbreviations")) {
            cfg.index.abbreviations.clear();
            for (const auto& a : s.at("abbreviations")) {
                cfg.index.abbreviations.insert(a.get<std::string>());
            }
        }
        std::string metric = s.value("metric", "cosine");
        if (metric != "cosine") {
            raise(ErrorCode::bad_config, "index.metric is fixed to cosine");
        }
    }
    if (j.contains("retrieval")) {
        const auto& s = j.at("retrieval");
        cfg.retrieval.nucleus_k = s.value("nucleus_k", cfg.retrieval.nucleus_k);
        cfg.retrieval.cluster_top_k = s.value("cluster_top_k", cfg.retrieval.cluster_top_k);
        cfg.retrieval.neighbors_before = s.value("neighbors_before", cfg.retrieval.neighbors_before);
        cfg.retrieval.neighbors_after = s.value("neighbors_after", cfg.retrieval.neighbors_after);
        cfg.retrieval.user_query_prefix =
            s.value("user_query_prefix", cfg.retrieval.user_query_prefix);
        if (s.contains("format")) {
            auto f = context_format_from_string(s.at("format").get<std::string>());
            if (!f) raise(ErrorCode::bad_config, "retrieval.format must be plain|structured_lines");
            cfg.retrieval.format = *f;
        }
        cfg.search_prompt = s.value("search_prompt", cfg.search_prompt);
    }
    if (j.contains("profile")) {
        const auto& s = j.at("profile");
        cfg.profile.enabled = s.value("enabled", cfg.profile.enabled);
        cfg.profile.batch_size = s.value("batch_size", cfg.profile.batch_size);
        cfg.profile.extract_from_user_only =
            s.value("extract_from_user_only", cfg.profile.extract_from_user_only);
        cfg.profile.extraction_prompt = s.value("extraction_prompt", cfg.profile.extraction_prompt);
    }
    if (j.contains("agent")) {
        const auto& s = j.at("agent");
        cfg.agent.max_iterations = s.value("max_iterations", cfg.agent.max_iterations);
        cfg.agent.confidence_threshold =
            s.value("confidence_threshold", cfg.agent.confidence_threshold);
        cfg.agent.max_subqueries = s.value("max_subqueries", cfg.agent.max_subqueries);
        cfg.agent.min_subqueries = s.value("min_subqueries", cfg.agent.min_subqueries);
        auto load_prompt = [&](const char* key, std::string& target) {
            if (!s.contains(key)) return;
            std::string path = s.at(key).get<std::string>();
            std::ifstream in(path);
            if (!in) raise(ErrorCode::bad_config, std::string("cannot read prompt file: ") + path);
            target.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
        };
        load_prompt("router_prompt_path", cfg.agent.router_prompt);
        load_prompt("sufficiency_prompt_path", cfg.agent.sufficiency_prompt);
        load_prompt("split_prompt_path", cfg.agent.split_prompt);
    }
    if (j.contains("providers")) {
        const auto& p = j.at("providers");
        if (p.contains("embedder")) read_provider(p.at("embedder"), cfg.embedder);
        if (p.contains("chat")) read_provider(p.at("chat"), cfg.chat);
        if (p.contains("reranker")) read_provider(p.at("reranker"), cfg.reranker);
    }
    if (j.contains("store")) {
        cfg.store_path = j.at("store").value("path", cfg.store_path);
    }
    if (j.contains("service")) {
        const auto& s = j.at("service");
        cfg.service_host = s.value("host", cfg.service_host);
        cfg.service_port = s.value("port", cfg.service_port);
    }
    return cfg;
}

EngineConfig EngineConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        raise(ErrorCode::bad_config, "cannot read config file: " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::bad_config, std::string("config parse error: ") + e.what());
    }
    return from_json(j);
}

nlohmann::json EngineConfig::to_json() const {
    return {
        {"stm", {{"capacity", stm.capacity}, {"summary_enabled", stm.summary_enabled}}},
        {"index",
         {{"chunking_enabled", index.chunking_enabled},
          {"embedder", index.embedder_id},
          {"metric", "cosine"}}},
        {"retrieval",
         {{"nucleus_k", retrieval.nucleus_k},
          {"cluster_top_k", retrieval.cluster_top_k},
          {"neighbors_before", retrieval.neighbors_before},
          {"neighbors_after", retrieval.neighbors_after},
          {"user_query_prefix", retrieval.user_query_prefix},
          {"format", to_string(retrieval.format)},
          {"search_prompt", search_prompt}}},
        {"profile",
         {{"enabled", profile.enabled},
          {"batch_size", profile.batch_size},
          {"extract_from_user_only", profile.extract_from_user_only}}},
        {"agent",
         {{"max_iterations", agent.max_iterations},
          {"confidence_threshold", agent.confidence_threshold},
          {"max_subqueries", agent.max_subqueries},
          {"min_subqueries", agent.min_subqueries}}},
        {"providers",
         {{"embedder", provider_json(embedder)},
          {"chat", provider_json(chat)},
          {"reranker", provider_json(reranker)}}},
        {"store", {{"path", store_path}}},
        {"service", {{"host", service_host}, {"port", service_port}}},
    };
}

} // namespace memoir
