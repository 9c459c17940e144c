#include <memoir/error.hpp>
#include <memoir/ltm_index.hpp>

#include <algorithm>
#include <cmath>
#include <queue>

namespace memoir {

bool SearchFilter::admits(const SentenceRecord& r) const {
    if (time_lo_ms && r.timestamp_ms < *time_lo_ms) return false;
    if (time_hi_ms && r.timestamp_ms > *time_hi_ms) return false;
    for (const auto& [key, value] : metadata_equals) {
        auto it = r.metadata.find(key);
        if (it == r.metadata.end() || it->second != value) return false;
    }
    return true;
}

LtmIndex::LtmIndex(IndexConfig cfg, std::shared_ptr<EmbedderPort> embedder)
    : cfg_(std::move(cfg)), embedder_(std::move(embedder)) {
    if (!embedder_) {
        throw std::invalid_argument("ltm index requires an embedder port");
    }
}

std::vector<SentenceRecord> LtmIndex::build_records(const Episode& episode) const {
    std::vector<std::string> texts;
    if (cfg_.chunking_enabled) {
        texts = segment_sentences(episode.content, cfg_.abbreviations);
    } else {
        texts.push_back(episode.content);
    }

    auto vectors = embedder_->embed(texts);
    if (vectors.size() != texts.size()) {
        raise(ErrorCode::embedder_unavailable, "embedder returned wrong batch size");
    }

    std::vector<SentenceRecord> records;
    records.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        SentenceRecord r;
        r.text = std::move(texts[i]);
        r.parent_episode = episode.id;
        r.position = static_cast<std::uint32_t>(i);
        r.scope = episode.scope;
        r.timestamp_ms = episode.timestamp_ms;
        r.producer = episode.producer;
        r.metadata = episode.metadata;
        r.embedding = std::move(vectors[i]);
        if (r.embedding.size() != embedder_->dimension()) {
            raise(ErrorCode::embedder_unavailable, "embedder returned wrong dimension");
        }
        HashEmbedder::normalize(r.embedding);
        records.push_back(std::move(r));
    }
    return records;
}

void LtmIndex::insert_records(std::vector<SentenceRecord>& records) {
    if (records.empty()) return;
    std::unique_lock lock(mu_);
    auto& store = sessions_[records.front().scope.session_key()];
    for (auto& r : records) {
        r.id = next_id_.fetch_add(1);
        store.push_back(r);
    }
}

std::vector<SentenceRecord> LtmIndex::index_episode(const Episode& episode) {
    std::vector<SentenceRecord> records;
    try {
        records = build_records(episode);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::embedder_unavailable ||
            e.code() == ErrorCode::provider_unavailable) {
            std::lock_guard<std::mutex> lock(queue_mu_);
            reindex_queue_.push_back(episode);
            return {};
        }
        throw;
    }
    insert_records(records);
    return records;
}

std::vector<ScoredSentence> LtmIndex::knn_search(const MemoryScope& scope,
                                                 const std::vector<float>& query_vector,
                                                 std::size_t k,
                                                 const SearchFilter& filter) const {
    if (k == 0) {
        throw std::invalid_argument("k must be at least 1");
    }
    if (query_vector.size() != embedder_->dimension()) {
        raise(ErrorCode::dimension_mismatch,
              "query dimension " + std::to_string(query_vector.size()) + " != index dimension " +
                  std::to_string(embedder_->dimension()));
    }

    std::vector<float> q = query_vector;
    HashEmbedder::normalize(q);

    // Candidate heap keyed worst-first: lowest similarity out first, and for
    // equal similarity the higher record id leaves first (ties break toward
    // the lower id in the final order).
    struct Candidate {
        float sim;
        SentenceId id;
        const SentenceRecord* rec;
    };
    auto worse = [](const Candidate& a, const Candidate& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return a.id < b.id;
    };
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(worse)> heap(worse);

    std::shared_lock lock(mu_);
    auto it = sessions_.find(scope.session_key());
    if (it == sessions_.end()) return {};

    for (const auto& rec : it->second) {
        if (!filter.admits(rec)) continue;
        double dot = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            dot += static_cast<double>(q[i]) * static_cast<double>(rec.embedding[i]);
        }
        Candidate c{static_cast<float>(dot), rec.id, &rec};
        if (heap.size() < k) {
            heap.push(c);
        } else if (worse(c, heap.top())) {
            heap.pop();
            heap.push(c);
        }
    }

    std::vector<ScoredSentence> out;
    out.reserve(heap.size());
    while (!heap.empty()) {
        out.push_back({*heap.top().rec, heap.top().sim});
        heap.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<float> LtmIndex::embed_query(const std::string& text) const {
    auto vecs = embedder_->embed({text});
    if (vecs.size() != 1 || vecs[0].size() != embedder_->dimension()) {
        raise(ErrorCode::embedder_unavailable, "embedder returned wrong query embedding");
    }
    HashEmbedder::normalize(vecs[0]);
    return vecs[0];
}

std::size_t LtmIndex::drain_reindex_queue() {
    std::vector<Episode> pending;
    {
        std::lock_guard<std::mutex> lock(queue_mu_);
        pending.swap(reindex_queue_);
    }
    std::size_t indexed = 0;
    for (const auto& ep : pending) {
        if (!index_episode(ep).empty()) ++indexed;
    }
    return indexed;
}

std::size_t LtmIndex::pending_reindex() const {
    std::lock_guard<std::mutex> lock(queue_mu_);
    return reindex_queue_.size();
}

void LtmIndex::remove_session(const MemoryScope& scope) {
    std::unique_lock lock(mu_);
    sessions_.erase(scope.session_key());
}

std::size_t LtmIndex::record_count(const MemoryScope& scope) const {
    std::shared_lock lock(mu_);
    auto it = sessions_.find(scope.session_key());
    return it == sessions_.end() ? 0 : it->second.size();
}

std::size_t LtmIndex::total_records() const {
    std::shared_lock lock(mu_);
    std::size_t n = 0;
    for (const auto& [key, store] : sessions_) n += store.size();
    return n;
}

std::vector<SentenceRecord> LtmIndex::session_records(const MemoryScope& scope) const {
    std::shared_lock lock(mu_);
    auto it = sessions_.find(scope.session_key());
    return it == sessions_.end() ? std::vector<SentenceRecord>{} : it->second;
}

} // namespace memoir
