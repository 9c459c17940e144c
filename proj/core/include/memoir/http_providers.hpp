#pragma once

#include <memoir/providers.hpp>

#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace memoir {

struct HttpEndpoint {
    std::string base_url;  // scheme://host:port
    std::string model;
    std::string api_key;   // sent as "Authorization: Bearer <key>" when set
    int timeout_ms = 30000;
    int retry_base_ms = 100;  // backoff doubles per attempt, 3 attempts
    int max_in_flight = 4;
};

namespace detail {

/// Counting gate bounding concurrent requests per adapter.
class InFlightGate {
public:
    explicit InFlightGate(int limit) : limit_(limit < 1 ? 1 : limit) {}
    void acquire();
    void release();

private:
    int limit_;
    int active_ = 0;
    std::mutex mu_;
    std::condition_variable cv_;
};

/// POSTs JSON with retry/backoff and error mapping shared by the adapters.
/// 401/403 raise auth_failure immediately; anything else retries up to
/// three attempts and then raises provider_unavailable.
std::string post_json(const HttpEndpoint& endpoint, const std::string& path,
                      const std::string& body, InFlightGate& gate);

} // namespace detail

/// Embeddings over the de-facto JSON shape:
///   POST /v1/embeddings {"model": ..., "input": [texts]}
///   -> {"data": [{"embedding": [...]}, ...]}
class HttpEmbedder final : public EmbedderPort {
public:
    HttpEmbedder(HttpEndpoint endpoint, std::size_t dimension, std::string id = "http_embedder");
    const std::string& id() const override { return id_; }
    std::size_t dimension() const override { return dim_; }
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;

private:
    HttpEndpoint endpoint_;
    std::size_t dim_;
    std::string id_;
    detail::InFlightGate gate_;
};

/// Chat completions over the de-facto JSON shape:
///   POST /v1/chat/completions {"model": ..., "messages": [{"role":"user","content": prompt}]}
///   -> {"choices":[{"message":{"content": ...}}], "usage":{"prompt_tokens","completion_tokens"}}
class HttpChat final : public ChatPort {
public:
    HttpChat(HttpEndpoint endpoint, std::string id = "http_chat");
    const std::string& id() const override { return id_; }
    ChatCompletion complete(const std::string& prompt) override;

private:
    HttpEndpoint endpoint_;
    std::string id_;
    detail::InFlightGate gate_;
};

/// Reranking over a Cohere-style shape:
///   POST /v1/rerank {"model": ..., "query": ..., "documents": [...]}
///   -> {"results":[{"index": i, "relevance_score": s}, ...]}
class HttpReranker final : public RerankerPort {
public:
    HttpReranker(HttpEndpoint endpoint, std::string id = "http_reranker");
    const std::string& id() const override { return id_; }
    std::vector<double> score(const std::string& query,
                              const std::vector<std::string>& passages) override;

private:
    HttpEndpoint endpoint_;
    std::string id_;
    detail::InFlightGate gate_;
};

} // namespace memoir
