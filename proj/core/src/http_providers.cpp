#include <memoir/error.hpp>
#include <memoir/http_providers.hpp>

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <thread>

namespace memoir {
namespace detail {

void InFlightGate::acquire() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [this] { return active_ < limit_; });
    ++active_;
}

void InFlightGate::release() {
    {
        std::lock_guard<std::mutex> lock(mu_);
        --active_;
    }
    cv_.notify_one();
}

std::string post_json(const HttpEndpoint& endpoint, const std::string& path,
                      const std::string& body, InFlightGate& gate) {
    gate.acquire();
    struct Release {
        InFlightGate& g;
        ~Release() { g.release(); }
    } release{gate};

    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(0, endpoint.timeout_ms * 1000);
    client.set_read_timeout(endpoint.timeout_ms / 1000, (endpoint.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (!endpoint.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + endpoint.api_key);
    }

    std::string last_error;
    constexpr int kAttempts = 3;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(endpoint.retry_base_ms << (attempt - 1)));
        }
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 401 || res->status == 403) {
            raise(ErrorCode::auth_failure,
                  "provider rejected credentials (" + std::to_string(res->status) + ")");
        }
        if (res->status >= 200 && res->status < 300) {
            return res->body;
        }
        last_error = "status " + std::to_string(res->status);
    }
    raise(ErrorCode::provider_unavailable,
          "provider unreachable after " + std::to_string(kAttempts) + " attempts (" +
              last_error + ")");
}

} // namespace detail

// ---------------------------------------------------------------------------
// HttpEmbedder
// ---------------------------------------------------------------------------

HttpEmbedder::HttpEmbedder(HttpEndpoint endpoint, std::size_t dimension, std::string id)
    : endpoint_(std::move(endpoint)), dim_(dimension), id_(std::move(id)),
      gate_(endpoint_.max_in_flight) {}

std::vector<std::vector<float>> HttpEmbedder::embed(const std::vector<std::string>& texts) {
    nlohmann::json req{{"model", endpoint_.model}, {"input", texts}};
    std::string body;
    try {
        body = detail::post_json(endpoint_, "/v1/embeddings", req.dump(), gate_);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::provider_unavailable) {
            raise(ErrorCode::embedder_unavailable, e.what());
        }
        throw;
    }
    try {
        nlohmann::json j = nlohmann::json::parse(body);
        std::vector<std::vector<float>> out;
        out.reserve(texts.size());
        for (const auto& item : j.at("data")) {
            out.push_back(item.at("embedding").get<std::vector<float>>());
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::embedder_unavailable,
              std::string("malformed embeddings response: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// HttpChat
// ---------------------------------------------------------------------------

HttpChat::HttpChat(HttpEndpoint endpoint, std::string id)
    : endpoint_(std::move(endpoint)), id_(std::move(id)), gate_(endpoint_.max_in_flight) {}

ChatCompletion HttpChat::complete(const std::string& prompt) {
    nlohmann::json req{{"model", endpoint_.model},
                       {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
    std::string body;
    try {
        body = detail::post_json(endpoint_, "/v1/chat/completions", req.dump(), gate_);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::provider_unavailable) {
            raise(ErrorCode::llm_unavailable, e.what());
        }
        throw;
    }
    try {
        nlohmann::json j = nlohmann::json::parse(body);
        ChatCompletion c;
        c.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (j.contains("usage")) {
            c.input_tokens = j.at("usage").value("prompt_tokens", 0ULL);
            c.output_tokens = j.at("usage").value("completion_tokens", 0ULL);
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::llm_unavailable, std::string("malformed chat response: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// HttpReranker
// ---------------------------------------------------------------------------

HttpReranker::HttpReranker(HttpEndpoint endpoint, std::string id)
    : endpoint_(std::move(endpoint)), id_(std::move(id)), gate_(endpoint_.max_in_flight) {}

std::vector<double> HttpReranker::score(const std::string& query,
                                        const std::vector<std::string>& passages) {
    nlohmann::json req{{"model", endpoint_.model}, {"query", query}, {"documents", passages}};
    std::string body;
    try {
        body = detail::post_json(endpoint_, "/v1/rerank", req.dump(), gate_);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::provider_unavailable) {
            raise(ErrorCode::reranker_unavailable, e.what());
        }
        throw;
    }
    try {
        nlohmann::json j = nlohmann::json::parse(body);
        std::vector<double> scores(passages.size(), 0.0);
        for (const auto& item : j.at("results")) {
            std::size_t index = item.at("index").get<std::size_t>();
            if (index < scores.size()) {
                scores[index] = item.at("relevance_score").get<double>();
            }
        }
        return scores;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::reranker_unavailable,
              std::string("malformed rerank response: ") + e.what());
    }
}

} // namespace memoir
