#include <memoir/providers.hpp>
#include <memoir/util.hpp>

#include <algorithm>
#include <cmath>

namespace memoir {

// ---------------------------------------------------------------------------
// HashEmbedder
// ---------------------------------------------------------------------------

HashEmbedder::HashEmbedder(std::size_t dimension, std::string id)
    : dim_(dimension), id_(std::move(id)) {}

void HashEmbedder::normalize(std::vector<float>& v) {
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        if (!v.empty()) v[0] = 1.0f;
        return;
    }
    for (float& x : v) x = static_cast<float>(x / norm);
}

std::vector<float> HashEmbedder::unit_axis(std::size_t dim, std::size_t axis) {
    std::vector<float> v(dim, 0.0f);
    v[axis % dim] = 1.0f;
    return v;
}

std::vector<float> HashEmbedder::nudge(std::vector<float> v, std::size_t axis, float epsilon) {
    v[axis % v.size()] += epsilon;
    normalize(v);
    return v;
}

std::vector<float> HashEmbedder::embed_one(const std::string& text) const {
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = seeded_.find(text);
        if (it != seeded_.end()) return it->second;
    }
    std::uint64_t state = fnv1a64(text);
    std::vector<float> v(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        std::uint64_t r = splitmix64(state);
        // Map to [-1, 1).
        v[i] = static_cast<float>(static_cast<double>(r) / 9223372036854775808.0 - 1.0);
    }
    normalize(v);
    return v;
}

std::vector<std::vector<float>> HashEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

void HashEmbedder::seed_phrase(const std::string& text, std::vector<float> vec) {
    vec.resize(dim_, 0.0f);
    normalize(vec);
    std::lock_guard<std::mutex> lock(mu_);
    seeded_[text] = std::move(vec);
}

// ---------------------------------------------------------------------------
// ScriptedChat
// ---------------------------------------------------------------------------

ScriptedChat::ScriptedChat(std::string id) : id_(std::move(id)) {}

ChatCompletion ScriptedChat::complete(const std::string& prompt) {
    std::lock_guard<std::mutex> lock(mu_);
    if (fail_next_ > 0) {
        --fail_next_;
        raise(ErrorCode::llm_unavailable, "scripted chat: unavailable");
    }
    ++calls_;
    captured_.push_back(prompt);

    std::string text;
    bool matched = false;
    for (const auto& [pat, handler] : patterns_) {
        if (prompt.find(pat) != std::string::npos) {
            text = handler(prompt);
            matched = true;
            break;
        }
    }
    if (!matched) {
        if (!queue_.empty()) {
            text = std::move(queue_.front());
            queue_.pop_front();
        } else if (fallback_) {
            text = fallback_(prompt);
        } else {
            raise(ErrorCode::script_exhausted, "scripted chat: no response configured");
        }
    }

    ChatCompletion c;
    c.text = std::move(text);
    c.input_tokens = whitespace_token_count(prompt);
    c.output_tokens = whitespace_token_count(c.text);
    return c;
}

void ScriptedChat::push_response(std::string text) {
    std::lock_guard<std::mutex> lock(mu_);
    queue_.push_back(std::move(text));
}

void ScriptedChat::on_pattern(std::string substring, Handler handler) {
    std::lock_guard<std::mutex> lock(mu_);
    patterns_.emplace_back(std::move(substring), std::move(handler));
}

void ScriptedChat::on_pattern(std::string substring, std::string response) {
    on_pattern(std::move(substring),
               [response = std::move(response)](const std::string&) { return response; });
}

void ScriptedChat::set_fallback(Handler handler) {
    std::lock_guard<std::mutex> lock(mu_);
    fallback_ = std::move(handler);
}

void ScriptedChat::fail_next(std::size_t n) {
    std::lock_guard<std::mutex> lock(mu_);
    fail_next_ = n;
}

std::size_t ScriptedChat::call_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
}

std::vector<std::string> ScriptedChat::captured_prompts() const {
    std::lock_guard<std::mutex> lock(mu_);
    return captured_;
}

// ---------------------------------------------------------------------------
// TokenOverlapReranker
// ---------------------------------------------------------------------------

TokenOverlapReranker::TokenOverlapReranker(std::string id) : id_(std::move(id)) {}

std::vector<double> TokenOverlapReranker::score(const std::string& query,
                                                const std::vector<std::string>& passages) {
    auto q = token_set(query);
    std::vector<double> out;
    out.reserve(passages.size());
    for (const auto& p : passages) {
        auto pt = token_set(p);
        if (q.empty() || pt.empty()) {
            out.push_back(0.0);
            continue;
        }
        std::size_t common = 0;
        for (const auto& tok : q) {
            if (pt.count(tok)) ++common;
        }
        out.push_back(static_cast<double>(common) /
                      std::sqrt(static_cast<double>(q.size()) * static_cast<double>(pt.size())));
    }
    return out;
}

// ---------------------------------------------------------------------------
// CapturingReranker
// ---------------------------------------------------------------------------

CapturingReranker::CapturingReranker(std::shared_ptr<RerankerPort> inner, std::string id)
    : id_(std::move(id)), inner_(std::move(inner)) {}

std::vector<double> CapturingReranker::score(const std::string& query,
                                             const std::vector<std::string>& passages) {
    {
        std::lock_guard<std::mutex> lock(mu_);
        if (fail_next_ > 0) {
            --fail_next_;
            raise(ErrorCode::reranker_unavailable, "capturing reranker: unavailable");
        }
        calls_.push_back({query, passages});
    }
    if (inner_) return inner_->score(query, passages);
    return std::vector<double>(passages.size(), 0.0);
}

std::vector<CapturingReranker::Call> CapturingReranker::calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
}

void CapturingReranker::fail_next(std::size_t n) {
    std::lock_guard<std::mutex> lock(mu_);
    fail_next_ = n;
}

// ---------------------------------------------------------------------------
// ProviderRegistry
// ---------------------------------------------------------------------------

void ProviderRegistry::register_embedder(std::shared_ptr<EmbedderPort> p) {
    embedders_[p->id()] = std::move(p);
}
void ProviderRegistry::register_chat(std::shared_ptr<ChatPort> p) {
    chats_[p->id()] = std::move(p);
}
void ProviderRegistry::register_reranker(std::shared_ptr<RerankerPort> p) {
    rerankers_[p->id()] = std::move(p);
}

std::shared_ptr<EmbedderPort> ProviderRegistry::embedder(const std::string& id) const {
    auto it = embedders_.find(id);
    return it == embedders_.end() ? nullptr : it->second;
}
std::shared_ptr<ChatPort> ProviderRegistry::chat(const std::string& id) const {
    auto it = chats_.find(id);
    return it == chats_.end() ? nullptr : it->second;
}
std::shared_ptr<RerankerPort> ProviderRegistry::reranker(const std::string& id) const {
    auto it = rerankers_.find(id);
    return it == rerankers_.end() ? nullptr : it->second;
}

} // namespace memoir
