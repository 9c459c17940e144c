#include <doctest.h>

#include <memoir/error.hpp>
#include <memoir/http_providers.hpp>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <thread>

using namespace memoir;

namespace {

// In-process stub provider speaking the documented wire shapes.
struct StubServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> embed_calls{0};
    std::atomic<int> fail_embeds{0};  // respond 500 for this many calls
    std::string last_auth;

    StubServer() {
        server.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            ++embed_calls;
            last_auth = req.get_header_value("Authorization");
            if (fail_embeds > 0) {
                --fail_embeds;
                res.status = 500;
                return;
            }
            auto body = nlohmann::json::parse(req.body);
            nlohmann::json data = nlohmann::json::array();
            for (const auto& text : body.at("input")) {
                float seed = static_cast<float>(text.get<std::string>().size());
                data.push_back({{"embedding", std::vector<float>{seed, 1.0f, 0.0f, 0.0f}}});
            }
            res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
        });
        server.Post("/v1/chat/completions",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        last_auth = req.get_header_value("Authorization");
                        auto body = nlohmann::json::parse(req.body);
                        std::string prompt =
                            body.at("messages").at(0).at("content").get<std::string>();
                        nlohmann::json reply{
                            {"choices",
                             {{{"message", {{"content", "echo: " + prompt.substr(0, 10)}}}}}},
                            {"usage", {{"prompt_tokens", 7}, {"completion_tokens", 3}}}};
                        res.set_content(reply.dump(), "application/json");
                    });
        server.Post("/v1/rerank", [](const httplib::Request& req, httplib::Response& res) {
            auto body = nlohmann::json::parse(req.body);
            nlohmann::json results = nlohmann::json::array();
            std::size_t n = body.at("documents").size();
            for (std::size_t i = 0; i < n; ++i) {
                results.push_back(
                    {{"index", i}, {"relevance_score", 1.0 - 0.1 * static_cast<double>(i)}});
            }
            res.set_content(nlohmann::json{{"results", results}}.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~StubServer() {
        server.stop();
        thread.join();
    }

    HttpEndpoint endpoint() const {
        HttpEndpoint ep;
        ep.base_url = "http://127.0.0.1:" + std::to_string(port);
        ep.model = "stub-model";
        ep.api_key = "sekrit";
        ep.retry_base_ms = 1;
        return ep;
    }
};

} // namespace

TEST_CASE("embedding round trip against the stub server") {
    StubServer stub;
    HttpEmbedder embedder(stub.endpoint(), 4);
    auto vectors = embedder.embed({"hello", "wider text"});
    REQUIRE(vectors.size() == 2);
    CHECK(vectors[0] == std::vector<float>{5.0f, 1.0f, 0.0f, 0.0f});
    CHECK(vectors[1][0] == 10.0f);
    CHECK(stub.last_auth == "Bearer sekrit");
}

TEST_CASE("chat and rerank adapters parse the documented shapes") {
    StubServer stub;
    HttpChat chat(stub.endpoint());
    auto reply = chat.complete("summarize this conversation");
    CHECK(reply.text.rfind("echo: ", 0) == 0);
    CHECK(reply.input_tokens == 7);
    CHECK(reply.output_tokens == 3);

    HttpReranker reranker(stub.endpoint());
    auto scores = reranker.score("q", {"p1", "p2", "p3"});
    REQUIRE(scores.size() == 3);
    CHECK(scores[0] == doctest::Approx(1.0));
    CHECK(scores[2] == doctest::Approx(0.8));
}

TEST_CASE("transient failures are retried then succeed") {
    StubServer stub;
    stub.fail_embeds = 2;  // two 500s, third attempt lands
    HttpEmbedder embedder(stub.endpoint(), 4);
    auto vectors = embedder.embed({"abc"});
    CHECK(vectors.size() == 1);
    CHECK(stub.embed_calls == 3);
}

TEST_CASE("three failed attempts raise unavailable") {
    StubServer stub;
    stub.fail_embeds = 100;
    HttpEmbedder embedder(stub.endpoint(), 4);
    CHECK_THROWS_AS(embedder.embed({"abc"}), Error);
    CHECK(stub.embed_calls == 3);
    try {
        stub.embed_calls = 0;
        embedder.embed({"abc"});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::embedder_unavailable);
    }
}

TEST_CASE("unreachable endpoint raises unavailable after three attempts") {
    HttpEndpoint ep;
    ep.base_url = "http://127.0.0.1:1";  // nothing listens there
    ep.retry_base_ms = 1;
    ep.timeout_ms = 200;
    HttpChat chat(ep);
    try {
        chat.complete("anyone home?");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::llm_unavailable);
    }
}

TEST_CASE("auth failures surface immediately without retries") {
    httplib::Server server;
    std::atomic<int> calls{0};
    server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 401;
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpEndpoint ep;
    ep.base_url = "http://127.0.0.1:" + std::to_string(port);
    ep.retry_base_ms = 1;
    HttpChat chat(ep);
    try {
        chat.complete("hi");
        FAIL("expected auth failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::auth_failure);
    }
    CHECK(calls == 1);

    server.stop();
    t.join();
}
