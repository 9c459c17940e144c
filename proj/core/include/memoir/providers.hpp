#pragma once

#include <memoir/error.hpp>

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace memoir {

class EmbedderPort {
public:
    virtual ~EmbedderPort() = default;
    virtual const std::string& id() const = 0;
    virtual std::size_t dimension() const = 0;
    /// One vector per input text. Identical input must yield identical output
    /// within one provider version.
    virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) = 0;
};

struct ChatCompletion {
    std::string text;
    std::uint64_t input_tokens = 0;
    std::uint64_t output_tokens = 0;
};

class ChatPort {
public:
    virtual ~ChatPort() = default;
    virtual const std::string& id() const = 0;
    /// Token counts are reported on every call.
    virtual ChatCompletion complete(const std::string& prompt) = 0;
};

class RerankerPort {
public:
    virtual ~RerankerPort() = default;
    virtual const std::string& id() const = 0;
    /// One finite score per passage.
    virtual std::vector<double> score(const std::string& query,
                                      const std::vector<std::string>& passages) = 0;
};

/// Deterministic embedding double: a seeded pseudo-random unit vector keyed
/// by a stable 64-bit hash of the text. A seed table can pin designated
/// phrases to designated vectors so fixtures can plant nearest-neighbor
/// structure.
class HashEmbedder final : public EmbedderPort {
public:
    explicit HashEmbedder(std::size_t dimension, std::string id = "hash64");

    const std::string& id() const override { return id_; }
    std::size_t dimension() const override { return dim_; }
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;

    /// Pins `text` to the given vector (normalized copy is stored).
    void seed_phrase(const std::string& text, std::vector<float> vec);

    static std::vector<float> unit_axis(std::size_t dim, std::size_t axis);
    /// v + epsilon * e_axis, renormalized.
    static std::vector<float> nudge(std::vector<float> v, std::size_t axis, float epsilon);
    static void normalize(std::vector<float>& v);

private:
    std::vector<float> embed_one(const std::string& text) const;

    std::size_t dim_;
    std::string id_;
    std::map<std::string, std::vector<float>> seeded_;
    mutable std::mutex mu_;
};

/// Scripted chat double. Responses come from substring patterns (checked in
/// insertion order), then a FIFO queue, then an optional fallback handler.
/// Captured prompts and call counts are exposed to tests. Tokens are
/// whitespace-delimited counts, which is not equivalent to any real
/// tokenizer and only feeds ledger arithmetic.
class ScriptedChat final : public ChatPort {
public:
    using Handler = std::function<std::string(const std::string& prompt)>;

    explicit ScriptedChat(std::string id = "scripted");

    const std::string& id() const override { return id_; }
    ChatCompletion complete(const std::string& prompt) override;

    void push_response(std::string text);
    void on_pattern(std::string substring, Handler handler);
    void on_pattern(std::string substring, std::string response);
    void set_fallback(Handler handler);
    /// The next `n` calls throw Error(llm_unavailable).
    void fail_next(std::size_t n);

    std::size_t call_count() const;
    std::vector<std::string> captured_prompts() const;

private:
    std::string id_;
    std::vector<std::pair<std::string, Handler>> patterns_;
    std::deque<std::string> queue_;
    Handler fallback_;
    std::size_t fail_next_ = 0;
    std::size_t calls_ = 0;
    std::vector<std::string> captured_;
    mutable std::mutex mu_;
};

/// Deterministic lexical reranker:
///   score = |tokens(q) ∩ tokens(p)| / sqrt(|tokens(q)| * |tokens(p)|)
/// over lowercased alphanumeric token sets.
class TokenOverlapReranker final : public RerankerPort {
public:
    explicit TokenOverlapReranker(std::string id = "token_overlap");
    const std::string& id() const override { return id_; }
    std::vector<double> score(const std::string& query,
                              const std::vector<std::string>& passages) override;

private:
    std::string id_;
};

/// Records every call, then delegates to an inner reranker (or scores zero
/// when none is given). Test instrumentation.
class CapturingReranker final : public RerankerPort {
public:
    struct Call {
        std::string query;
        std::vector<std::string> passages;
    };

    explicit CapturingReranker(std::shared_ptr<RerankerPort> inner = nullptr,
                               std::string id = "capturing");
    const std::string& id() const override { return id_; }
    std::vector<double> score(const std::string& query,
                              const std::vector<std::string>& passages) override;

    std::vector<Call> calls() const;
    void fail_next(std::size_t n);

private:
    std::string id_;
    std::shared_ptr<RerankerPort> inner_;
    std::vector<Call> calls_;
    std::size_t fail_next_ = 0;
    mutable std::mutex mu_;
};

/// Named registry so config can resolve provider ids.
class ProviderRegistry {
public:
    void register_embedder(std::shared_ptr<EmbedderPort> p);
    void register_chat(std::shared_ptr<ChatPort> p);
    void register_reranker(std::shared_ptr<RerankerPort> p);

    std::shared_ptr<EmbedderPort> embedder(const std::string& id) const;
    std::shared_ptr<ChatPort> chat(const std::string& id) const;
    std::shared_ptr<RerankerPort> reranker(const std::string& id) const;

private:
    std::map<std::string, std::shared_ptr<EmbedderPort>> embedders_;
    std::map<std::string, std::shared_ptr<ChatPort>> chats_;
    std::map<std::string, std::shared_ptr<RerankerPort>> rerankers_;
};

} // namespace memoir
