#include <memoir/error.hpp>
#include <memoir/json_io.hpp>
#include <memoir/service.hpp>
#include <memoir/util.hpp>

#include <httplib.h>

namespace memoir {

namespace {

struct RequestContext {
    std::string request_id;
};

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message, const RequestContext& ctx,
                const std::string& port_name = "") {
    nlohmann::json body{{"code", code}, {"message", message}, {"request_id", ctx.request_id}};
    if (!port_name.empty()) body["port"] = port_name;
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::timestamp_regression: return 409;
        case ErrorCode::embedder_unavailable:
        case ErrorCode::llm_unavailable:
        case ErrorCode::reranker_unavailable:
        case ErrorCode::provider_unavailable: return 503;
        case ErrorCode::auth_failure: return 502;
        default: return 400;
    }
}

std::string port_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::embedder_unavailable: return "embedder";
        case ErrorCode::llm_unavailable: return "chat";
        case ErrorCode::reranker_unavailable: return "reranker";
        default: return "";
    }
}

std::optional<std::int64_t> timestamp_from_json(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    const auto& v = j.at(key);
    if (v.is_number()) return v.get<std::int64_t>();
    if (v.is_string()) return parse_iso8601_ms(v.get<std::string>());
    return std::nullopt;
}

} // namespace

MemoryService::MemoryService(MemoryEngine& engine)
    : engine_(engine), server_(std::make_unique<httplib::Server>()) {
    wire_routes();
}

MemoryService::~MemoryService() { stop(); }

void MemoryService::wire_routes() {
    auto& svr = *server_;

    auto with_body = [](const httplib::Request& req, httplib::Response& res,
                        const RequestContext& ctx,
                        auto&& handler) {
        nlohmann::json body;
        try {
            body = req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception& e) {
            send_error(res, 400, "parse_error", e.what(), ctx);
            return;
        }
        handler(body);
    };

    svr.Get("/v2/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(nlohmann::json{{"status", "ok"}}.dump(), "application/json");
    });

    svr.Post("/v2/memories", [this, with_body](const httplib::Request& req,
                                               httplib::Response& res) {
        RequestContext ctx{random_hex(8)};
        with_body(req, res, ctx, [&](const nlohmann::json& body) {
            auto scope = scope_from_request_json(body);
            if (!scope) {
                send_error(res, 400, "scope_invalid", "scope requires all five components", ctx);
                return;
            }
            auto producer = producer_from_string(body.value("producer", "user"));
            if (!producer) {
                send_error(res, 400, "parse_error", "producer must be user|agent|system", ctx);
                return;
            }
            auto ts = timestamp_from_json(body, "timestamp");
            if (!ts) {
                send_error(res, 400, "parse_error",
                           "timestamp must be epoch ms or ISO-8601 UTC", ctx);
                return;
            }
            std::map<std::string, std::string> metadata;
            if (body.contains("metadata")) {
                try {
                    metadata = body.at("metadata").get<std::map<std::string, std::string>>();
                } catch (const nlohmann::json::exception&) {
                    send_error(res, 400, "parse_error", "metadata must map strings to strings",
                               ctx);
                    return;
                }
            }
            try {
                Episode ep = engine_.add_episode(*scope, body.value("content", ""), *producer,
                                                 *ts, std::move(metadata));
                nlohmann::json out{{"id", ep.id},
                                   {"sequence", ep.sequence},
                                   {"request_id", ctx.request_id}};
                res.status = 201;
                res.set_content(out.dump(), "application/json");
            } catch (const Error& e) {
                send_error(res, status_for(e.code()), to_string(e.code()), e.what(), ctx,
                           port_for(e.code()));
            }
        });
    });

    svr.Post("/v2/memories/search", [this, with_body](const httplib::Request& req,
                                                      httplib::Response& res) {
        RequestContext ctx{random_hex(8)};
        with_body(req, res, ctx, [&](const nlohmann::json& body) {
            auto scope = scope_from_request_json(body);
            if (!scope) {
                send_error(res, 400, "scope_invalid", "scope requires all five components", ctx);
                return;
            }
            MemoryEngine::SearchRequest request;
            request.query = body.value("query", "");
            request.agent_mode = body.value("agent_mode", false);
            request.cfg = engine_.config().retrieval;
            if (body.contains("config")) {
                const auto& c = body.at("config");
                request.cfg.nucleus_k = c.value("nucleus_k", request.cfg.nucleus_k);
                request.cfg.cluster_top_k = c.value("cluster_top_k", request.cfg.cluster_top_k);
                request.cfg.neighbors_before =
                    c.value("neighbors_before", request.cfg.neighbors_before);
                request.cfg.neighbors_after =
                    c.value("neighbors_after", request.cfg.neighbors_after);
                request.cfg.user_query_prefix =
                    c.value("user_query_prefix", request.cfg.user_query_prefix);
                if (c.contains("format")) {
                    auto f = context_format_from_string(c.at("format").get<std::string>());
                    if (!f) {
                        send_error(res, 400, "bad_config",
                                   "format must be plain|structured_lines", ctx);
                        return;
                    }
                    request.cfg.format = *f;
                }
            }
            if (body.contains("filter")) {
                const auto& f = body.at("filter");
                if (f.contains("time_lo_ms")) {
                    request.filter.time_lo_ms = f.at("time_lo_ms").get<std::int64_t>();
                }
                if (f.contains("time_hi_ms")) {
                    request.filter.time_hi_ms = f.at("time_hi_ms").get<std::int64_t>();
                }
                if (f.contains("metadata")) {
                    request.filter.metadata_equals =
                        f.at("metadata").get<std::map<std::string, std::string>>();
                }
            }
            try {
                auto result = engine_.search(*scope, request);
                nlohmann::json out = search_result_to_json(result, engine_.store());
                out["request_id"] = ctx.request_id;
                res.status = 200;
                res.set_content(out.dump(), "application/json");
            } catch (const Error& e) {
                send_error(res, status_for(e.code()), to_string(e.code()), e.what(), ctx,
                           port_for(e.code()));
            }
        });
    });

    svr.Get("/v2/profile", [this](const httplib::Request& req, httplib::Response& res) {
        RequestContext ctx{random_hex(8)};
        std::string org = req.get_param_value("org_id");
        std::string project = req.get_param_value("project_id");
        std::string user = req.get_param_value("user_id");
        if (org.empty() || project.empty() || user.empty()) {
            send_error(res, 400, "scope_invalid", "org_id, project_id and user_id are required",
                       ctx);
            return;
        }
        std::optional<ProfileCategory> category;
        if (req.has_param("category")) {
            category = profile_category_from_string(req.get_param_value("category"));
            if (!category) {
                send_error(res, 400, "parse_error", "unknown profile category", ctx);
                return;
            }
        }
        std::optional<std::string> key;
        if (req.has_param("key")) key = req.get_param_value("key");

        nlohmann::json out = nlohmann::json::array();
        for (const auto& entry : engine_.query_profile(org, project, user, category, key)) {
            out.push_back(profile_entry_to_json(entry));
        }
        res.set_content(out.dump(), "application/json");
    });

    svr.Delete("/v2/sessions", [this, with_body](const httplib::Request& req,
                                                 httplib::Response& res) {
        RequestContext ctx{random_hex(8)};
        with_body(req, res, ctx, [&](nlohmann::json body) {
            // Scope may arrive in the body or as query parameters.
            if (body.empty()) {
                for (const char* k :
                     {"org_id", "project_id", "user_id", "agent_id", "session_id"}) {
                    if (req.has_param(k)) body[k] = req.get_param_value(k);
                }
            }
            auto scope = scope_from_request_json(body);
            if (!scope) {
                send_error(res, 400, "scope_invalid", "scope requires all five components", ctx);
                return;
            }
            std::size_t removed = engine_.delete_session(*scope);
            nlohmann::json out{{"removed", removed}, {"request_id", ctx.request_id}};
            res.set_content(out.dump(), "application/json");
        });
    });
}

bool MemoryService::listen(const std::string& host, int port) {
    return server_->listen(host, port);
}

int MemoryService::start(const std::string& host) {
    int port = server_->bind_to_any_port(host);
    if (port <= 0) return -1;
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port;
}

void MemoryService::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace memoir
