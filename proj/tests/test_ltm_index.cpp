#include <doctest.h>

#include <memoir/error.hpp>
#include <memoir/ltm_index.hpp>

#include <algorithm>
#include <random>

using namespace memoir;

namespace {

MemoryScope scope_a() { return {"org", "proj", "ada", "agent", "s1"}; }

Episode make_ep(int i, const std::string& content,
                std::map<std::string, std::string> meta = {}) {
    Episode ep;
    ep.id = 1 + i;
    ep.sequence = i;
    ep.timestamp_ms = 1700000000000 + i * 1000;
    ep.scope = scope_a();
    ep.content = content;
    ep.producer = i % 2 ? Producer::agent : Producer::user;
    ep.metadata = std::move(meta);
    return ep;
}

// Independent oracle: full scan, descending cosine, ties toward lower id.
std::vector<std::pair<SentenceId, double>> brute_force_topk(
    const std::vector<SentenceRecord>& records, const std::vector<float>& query,
    std::size_t k, const SearchFilter& filter = {}) {
    std::vector<float> q = query;
    double norm = 0.0;
    for (float x : q) norm += double(x) * double(x);
    norm = std::sqrt(norm);
    for (float& x : q) x = static_cast<float>(x / norm);

    std::vector<std::pair<SentenceId, double>> scored;
    for (const auto& r : records) {
        if (!filter.admits(r)) continue;
        double dot = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            dot += double(q[i]) * double(r.embedding[i]);
        }
        scored.emplace_back(r.id, static_cast<double>(static_cast<float>(dot)));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

} // namespace

TEST_CASE("chunking on: one record per sentence with positions") {
    LtmIndex index({}, std::make_shared<HashEmbedder>(16));
    auto records = index.index_episode(make_ep(0, "First point. Second point. Third one?"));
    REQUIRE(records.size() == 3);
    CHECK(records[0].position == 0);
    CHECK(records[1].position == 1);
    CHECK(records[2].position == 2);
    CHECK(records[0].text == "First point.");
    for (const auto& r : records) {
        CHECK(r.parent_episode == make_ep(0, "").id);
        CHECK(r.embedding.size() == 16);
    }
}

TEST_CASE("chunking off: one record for the whole episode") {
    IndexConfig cfg;
    cfg.chunking_enabled = false;
    LtmIndex index(cfg, std::make_shared<HashEmbedder>(16));
    auto records = index.index_episode(make_ep(0, "First point. Second point. Third one?"));
    REQUIRE(records.size() == 1);
    CHECK(records[0].text == "First point. Second point. Third one?");
}

TEST_CASE("records inherit producer, timestamp and metadata") {
    LtmIndex index({}, std::make_shared<HashEmbedder>(8));
    auto ep = make_ep(3, "Inherit me.", {{"topic", "travel"}});
    auto records = index.index_episode(ep);
    REQUIRE(records.size() == 1);
    CHECK(records[0].producer == ep.producer);
    CHECK(records[0].timestamp_ms == ep.timestamp_ms);
    CHECK(records[0].metadata.at("topic") == "travel");
    CHECK(records[0].scope == ep.scope);
}

TEST_CASE("self retrieval returns similarity one") {
    auto embedder = std::make_shared<HashEmbedder>(16);
    LtmIndex index({}, embedder);
    index.index_episode(make_ep(0, "A very particular sentence."));
    index.index_episode(make_ep(1, "Noise sentence."));

    auto q = embedder->embed({"A very particular sentence."})[0];
    auto hits = index.knn_search(scope_a(), q, 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].record.text == "A very particular sentence.");
    CHECK(hits[0].similarity == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("k larger than the corpus returns everything sorted") {
    auto embedder = std::make_shared<HashEmbedder>(16);
    LtmIndex index({}, embedder);
    index.index_episode(make_ep(0, "One. Two. Three."));
    auto hits = index.knn_search(scope_a(), embedder->embed({"Two"})[0], 50);
    CHECK(hits.size() == 3);
    for (std::size_t i = 1; i < hits.size(); ++i) {
        CHECK(hits[i - 1].similarity >= hits[i].similarity);
    }
}

TEST_CASE("exact knn equals the brute-force oracle on random corpora") {
    std::mt19937 rng(31);
    const std::vector<std::string> vocab = {"alpha", "bravo", "charlie", "delta", "echo",
                                            "fox",   "golf",  "hotel",   "india", "juliet"};
    for (int trial = 0; trial < 8; ++trial) {
        auto embedder = std::make_shared<HashEmbedder>(24);
        LtmIndex index({}, embedder);
        int n_eps = 10 + static_cast<int>(rng() % 50);
        for (int i = 0; i < n_eps; ++i) {
            std::string content;
            int sentences = 1 + rng() % 4;
            for (int s = 0; s < sentences; ++s) {
                content += vocab[rng() % vocab.size()] + " " + vocab[rng() % vocab.size()] +
                           " " + std::to_string(rng() % 1000) + ". ";
            }
            index.index_episode(make_ep(i, content));
        }
        auto records = index.session_records(scope_a());
        std::size_t k = 1 + rng() % 20;
        auto qv = embedder->embed({vocab[rng() % vocab.size()]})[0];

        auto got = index.knn_search(scope_a(), qv, k);
        auto want = brute_force_topk(records, qv, k);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].record.id == want[i].first);
        }
    }
}

TEST_CASE("temporal and metadata filters restrict results") {
    auto embedder = std::make_shared<HashEmbedder>(16);
    LtmIndex index({}, embedder);
    index.index_episode(make_ep(0, "early fact.", {{"room", "a"}}));
    index.index_episode(make_ep(5, "middle fact.", {{"room", "b"}}));
    index.index_episode(make_ep(9, "late fact.", {{"room", "a"}}));

    auto qv = embedder->embed({"fact"})[0];

    SearchFilter window;
    window.time_lo_ms = 1700000000000 + 1000;
    window.time_hi_ms = 1700000000000 + 8000;
    auto hits = index.knn_search(scope_a(), qv, 10, window);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].record.text == "middle fact.");
    for (const auto& h : hits) {
        CHECK(h.record.timestamp_ms >= *window.time_lo_ms);
        CHECK(h.record.timestamp_ms <= *window.time_hi_ms);
    }

    SearchFilter meta;
    meta.metadata_equals = {{"room", "a"}};
    auto room_hits = index.knn_search(scope_a(), qv, 10, meta);
    CHECK(room_hits.size() == 2);
}

TEST_CASE("dimension mismatch and bad k are rejected") {
    LtmIndex index({}, std::make_shared<HashEmbedder>(16));
    index.index_episode(make_ep(0, "something."));
    std::vector<float> wrong(8, 0.5f);
    CHECK_THROWS_AS(index.knn_search(scope_a(), wrong, 3), Error);
    std::vector<float> right(16, 0.5f);
    CHECK_THROWS_AS(index.knn_search(scope_a(), right, 0), std::invalid_argument);
}

TEST_CASE("unavailable embedder queues episodes for re-indexing") {
    struct FlakyEmbedder : EmbedderPort {
        std::string id_ = "flaky";
        HashEmbedder inner{16};
        int failures = 0;
        const std::string& id() const override { return id_; }
        std::size_t dimension() const override { return 16; }
        std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override {
            if (failures > 0) {
                --failures;
                raise(ErrorCode::embedder_unavailable, "flaky");
            }
            return inner.embed(texts);
        }
    };
    auto embedder = std::make_shared<FlakyEmbedder>();
    embedder->failures = 1;
    LtmIndex index({}, embedder);

    CHECK(index.index_episode(make_ep(0, "queued sentence.")).empty());
    CHECK(index.pending_reindex() == 1);
    CHECK(index.record_count(scope_a()) == 0);

    CHECK(index.drain_reindex_queue() == 1);
    CHECK(index.pending_reindex() == 0);
    CHECK(index.record_count(scope_a()) == 1);
}

TEST_CASE("referential integrity under random ingest/delete interleavings") {
    auto embedder = std::make_shared<HashEmbedder>(8);
    LtmIndex index({}, embedder);
    std::mt19937 rng(77);

    std::map<std::string, std::vector<Episode>> sessions;
    std::set<EpisodeId> live;
    EpisodeId next_id = 1;
    for (int step = 0; step < 300; ++step) {
        std::string sid = "s" + std::to_string(rng() % 4);
        MemoryScope scope = scope_a();
        scope.session_id = sid;
        if (rng() % 5 == 0 && !sessions[sid].empty()) {
            index.remove_session(scope);
            for (const auto& ep : sessions[sid]) live.erase(ep.id);
            sessions[sid].clear();
        } else {
            Episode ep = make_ep(static_cast<int>(sessions[sid].size()), "text here.");
            ep.id = next_id++;
            ep.scope = scope;
            sessions[sid].push_back(ep);
            live.insert(ep.id);
            index.index_episode(ep);
        }
        for (const auto& [name, eps] : sessions) {
            MemoryScope s = scope_a();
            s.session_id = name;
            for (const auto& r : index.session_records(s)) {
                CHECK(live.count(r.parent_episode) == 1);
            }
        }
    }
}
