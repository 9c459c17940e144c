#include <doctest.h>

#include <memoir/agent.hpp>
#include <memoir/error.hpp>

#include <algorithm>
#include <set>

using namespace memoir;

namespace {

MemoryScope scope_a() { return {"org", "proj", "ada", "agent", "s1"}; }

constexpr std::int64_t kT0 = 1700000000000;

struct Rig {
    std::shared_ptr<HashEmbedder> embedder = std::make_shared<HashEmbedder>(32);
    std::shared_ptr<CapturingReranker> reranker =
        std::make_shared<CapturingReranker>(std::make_shared<TokenOverlapReranker>());
    std::shared_ptr<ScriptedChat> chat = std::make_shared<ScriptedChat>();
    EpisodeStore store;
    ShortTermMemory stm;
    LtmIndex index{{}, embedder};
    RecallPipeline recall{store, index, stm, reranker};
    RetrievalAgent agent{recall, chat, {}};

    explicit Rig(std::size_t stm_capacity = 2)
        : stm({.capacity = stm_capacity, .summary_enabled = false}, nullptr) {
        store.add_append_sink([this](const Episode& ep) { stm.append(ep.scope, ep); });
        store.add_append_sink([this](const Episode& ep) { index.index_episode(ep); });
    }

    Episode add(const std::string& content) {
        return store.add_episode(
            scope_a(), content, Producer::user,
            kT0 + 1000 * static_cast<std::int64_t>(store.session_size(scope_a())));
    }

    std::set<SequenceNo> retrieved_seqs(const RetrievalOutcome& outcome) const {
        std::set<SequenceNo> seqs;
        for (const auto& c : outcome.ltm_clusters) {
            for (EpisodeId id : c.members) {
                if (auto ep = store.find_episode(id)) seqs.insert(ep->sequence);
            }
        }
        return seqs;
    }
};

// Three facts whose embeddings sit on separate axes; queries for each hop are
// nudged onto the owning axis so retrieval resolves exactly one hop at a time.
struct ThreeHopFixture {
    std::string q0 = "What is the current employer of the spouse of the CEO of Acme?";
    std::string q1 = "Who is the spouse of Xavier Stone?";
    std::string q2 = "Where does Yolanda Stone work?";
    SequenceNo fact0 = 2, fact1 = 5, fact2 = 8;

    void plant(Rig& rig) const {
        const std::string f0 = "The CEO of Acme is Xavier Stone.";
        const std::string f1 = "Xavier Stone's spouse is Yolanda Stone.";
        const std::string f2 = "Yolanda Stone works at Zenith Labs.";
        rig.embedder->seed_phrase(f0, HashEmbedder::unit_axis(32, 0));
        rig.embedder->seed_phrase(f1, HashEmbedder::unit_axis(32, 1));
        rig.embedder->seed_phrase(f2, HashEmbedder::unit_axis(32, 2));
        rig.embedder->seed_phrase(q0, HashEmbedder::nudge(HashEmbedder::unit_axis(32, 0), 3, 0.05f));
        rig.embedder->seed_phrase(q1, HashEmbedder::nudge(HashEmbedder::unit_axis(32, 1), 3, 0.05f));
        rig.embedder->seed_phrase(q2, HashEmbedder::nudge(HashEmbedder::unit_axis(32, 2), 3, 0.05f));

        for (int i = 0; i < 12; ++i) {
            if (i == static_cast<int>(fact0)) {
                rig.add(f0);
            } else if (i == static_cast<int>(fact1)) {
                rig.add(f1);
            } else if (i == static_cast<int>(fact2)) {
                rig.add(f2);
            } else {
                rig.add("Filler chatter number " + std::to_string(i) + ".");
            }
        }
    }

    void script(Rig& rig) const {
        rig.chat->on_pattern("Classify the query", "ROUTE: chain\nRATIONALE: dependent lookups");
        rig.chat->on_pattern("SUFFICIENT:", [this](const std::string& prompt) -> std::string {
            // Entity-grounded rewrites: only mention names present in evidence.
            if (prompt.find("Zenith Labs") != std::string::npos) {
                return "SUFFICIENT: yes\nCONFIDENCE: 0.95\nNEXT_QUERY: " + q2;
            }
            if (prompt.find("Yolanda") != std::string::npos) {
                return "SUFFICIENT: no\nCONFIDENCE: 0.5\nNEXT_QUERY: " + q2;
            }
            if (prompt.find("Xavier") != std::string::npos) {
                return "SUFFICIENT: no\nCONFIDENCE: 0.3\nNEXT_QUERY: " + q1;
            }
            return "SUFFICIENT: no\nCONFIDENCE: 0.1\nNEXT_QUERY: " + q0;
        });
    }

    RetrievalConfig cfg() const {
        RetrievalConfig c;
        c.nucleus_k = 1;
        c.cluster_top_k = 1;
        return c;
    }
};

} // namespace

TEST_CASE("route parses the tagged line") {
    Rig rig;
    rig.chat->push_response("ROUTE: chain\nRATIONALE: three ordered resolution steps");
    auto decision = rig.agent.route("employer of the spouse of the CEO");
    CHECK(decision.route == Route::chain);
    CHECK(decision.rationale == "three ordered resolution steps");
    CHECK(decision.router_tokens.input > 0);
    CHECK_FALSE(decision.fallback);

    rig.chat->push_response("route: split");
    CHECK(rig.agent.route("capitals of France and Japan").route == Route::split);

    rig.chat->push_response("ROUTE: direct");
    CHECK(rig.agent.route("when did I mention the launch code").route == Route::direct);
}

TEST_CASE("router prompt ships the calibration examples") {
    AgentConfig cfg;
    CHECK(cfg.router_prompt.find("spouse of the CEO of Acme") != std::string::npos);
    CHECK(cfg.router_prompt.find("capitals of France and Japan") != std::string::npos);
    CHECK(cfg.router_prompt.find("launch code") != std::string::npos);
    CHECK(cfg.router_prompt.find("ROUTE: chain") != std::string::npos);
    CHECK(cfg.router_prompt.find("ROUTE: split") != std::string::npos);
    CHECK(cfg.router_prompt.find("ROUTE: direct") != std::string::npos);
}

TEST_CASE("unparseable router output retries once then defaults to chain") {
    Rig rig;
    rig.add("Anything at all.");
    rig.chat->push_response("no idea what you mean");
    rig.chat->push_response("still garbage");
    rig.chat->on_pattern("SUFFICIENT:", "SUFFICIENT: yes\nCONFIDENCE: 1.0\nNEXT_QUERY: same");

    auto result = rig.agent.search(scope_a(), "some query", ThreeHopFixture{}.cfg());
    CHECK(result.decision.route == Route::chain);
    CHECK(result.decision.fallback);
    // Two router calls happened before the default.
    CHECK(rig.chat->captured_prompts()[0].find("Classify") != std::string::npos);
    CHECK(rig.chat->captured_prompts()[1] == rig.chat->captured_prompts()[0]);
}

TEST_CASE("router LLM unavailable falls back to direct") {
    Rig rig;
    rig.add("Some fact.");
    rig.chat->fail_next(1);
    auto result = rig.agent.search(scope_a(), "plain question", ThreeHopFixture{}.cfg());
    CHECK(result.decision.route == Route::direct);
    CHECK(result.decision.fallback);
    CHECK(result.outcome.ledger.total().input == 0);
}

TEST_CASE("direct route delegates to recall.search byte-for-byte") {
    Rig rig;
    for (int i = 0; i < 8; ++i) rig.add("Observation " + std::to_string(i) + ".");
    RetrievalConfig cfg;
    cfg.nucleus_k = 4;
    cfg.cluster_top_k = 4;

    rig.chat->push_response("ROUTE: direct");
    auto agent_result = rig.agent.search(scope_a(), "observation", cfg);
    auto plain = rig.recall.search(scope_a(), "observation", cfg);

    CHECK(agent_result.outcome.rendered_context == plain.rendered_context);
    CHECK(agent_result.outcome.stm_summary == plain.stm_summary);
    REQUIRE(agent_result.outcome.ltm_clusters.size() == plain.ltm_clusters.size());
    for (std::size_t i = 0; i < plain.ltm_clusters.size(); ++i) {
        CHECK(agent_result.outcome.ltm_clusters[i].members == plain.ltm_clusters[i].members);
        CHECK(agent_result.outcome.ltm_clusters[i].score == plain.ltm_clusters[i].score);
    }

    // Ledger: chain/split rows zero; total input equals router input.
    const auto& ledger = agent_result.outcome.ledger;
    CHECK(ledger.chain.zero());
    CHECK(ledger.split.zero());
    CHECK(ledger.direct.zero());
    CHECK(ledger.total().input == ledger.router.input);
    CHECK(ledger.total().output == ledger.router.output);
    CHECK(ledger.router.input > 0);
}

TEST_CASE("split pools independent sub-query results") {
    Rig rig;
    const std::string fa = "Fact about planet Kepler speed.";
    const std::string fb = "Fact about composer Mahler tempo.";
    rig.embedder->seed_phrase(fa, HashEmbedder::unit_axis(32, 0));
    rig.embedder->seed_phrase(fb, HashEmbedder::unit_axis(32, 1));
    rig.embedder->seed_phrase("kepler speed?",
                              HashEmbedder::nudge(HashEmbedder::unit_axis(32, 0), 2, 0.05f));
    rig.embedder->seed_phrase("mahler tempo?",
                              HashEmbedder::nudge(HashEmbedder::unit_axis(32, 1), 2, 0.05f));
    for (int i = 0; i < 44; ++i) {
        if (i == 3) {
            rig.add(fa);
        } else if (i == 40) {
            rig.add(fb);
        } else {
            rig.add("Noise line " + std::to_string(i) + ".");
        }
    }

    RetrievalConfig cfg;
    cfg.nucleus_k = 1;
    cfg.cluster_top_k = 1;
    cfg.neighbors_before = 0;
    cfg.neighbors_after = 0;

    rig.chat->push_response("ROUTE: split");
    rig.chat->push_response("SUBQUERY: kepler speed?\nSUBQUERY: mahler tempo?");
    auto split_result =
        rig.agent.search(scope_a(), "kepler speed and mahler tempo?", cfg);
    CHECK(split_result.decision.route == Route::split);
    auto seqs = rig.retrieved_seqs(split_result.outcome);
    CHECK(seqs.count(3) == 1);
    CHECK(seqs.count(40) == 1);

    // A direct search with the same cluster_top_k holds at most one fact.
    rig.embedder->seed_phrase("kepler speed and mahler tempo?",
                              HashEmbedder::nudge(HashEmbedder::unit_axis(32, 0), 2, 0.1f));
    auto direct = rig.recall.search(scope_a(), "kepler speed and mahler tempo?", cfg);
    auto direct_seqs = rig.retrieved_seqs(direct);
    CHECK(static_cast<int>(direct_seqs.count(3)) + static_cast<int>(direct_seqs.count(40)) <= 1);

    CHECK(split_result.outcome.ledger.split.input > 0);
    CHECK(split_result.outcome.ledger.chain.zero());
}

TEST_CASE("split clamps oversized decompositions and notes it") {
    Rig rig;
    for (int i = 0; i < 10; ++i) rig.add("Topic " + std::to_string(i) + " text.");
    rig.chat->push_response("ROUTE: split");
    std::string subs;
    for (int i = 0; i < 7; ++i) subs += "SUBQUERY: topic " + std::to_string(i) + "\n";
    rig.chat->push_response(subs);

    auto result = rig.agent.search(scope_a(), "all the topics", ThreeHopFixture{}.cfg());
    CHECK(result.issued_queries.size() == 1 + 6);  // original + clamped six
    bool noted = false;
    for (const auto& n : result.outcome.ledger.notes) {
        if (n.find("clamped") != std::string::npos) noted = true;
    }
    CHECK(noted);
}

TEST_CASE("degenerate decomposition falls back to direct") {
    Rig rig;
    rig.add("Only fact.");
    rig.chat->push_response("ROUTE: split");
    rig.chat->push_response("SUBQUERY: just one");
    auto result = rig.agent.search(scope_a(), "only question", ThreeHopFixture{}.cfg());
    CHECK(result.decision.route == Route::split);
    CHECK(result.decision.fallback);
    bool noted = false;
    for (const auto& n : result.outcome.ledger.notes) {
        if (n == "split_fallback_direct") noted = true;
    }
    CHECK(noted);
    CHECK(result.issued_queries == std::vector<std::string>{"only question"});
}

TEST_CASE("three-hop chain accumulates all fact episodes; direct retrieves one") {
    Rig rig;
    ThreeHopFixture fixture;
    fixture.plant(rig);
    fixture.script(rig);

    auto result = rig.agent.search(scope_a(), fixture.q0, fixture.cfg());
    CHECK(result.decision.route == Route::chain);
    CHECK(result.chain.iterations == 3);
    CHECK(result.chain.query_history ==
          std::vector<std::string>{fixture.q0, fixture.q1, fixture.q2});

    auto seqs = rig.retrieved_seqs(result.outcome);
    CHECK(seqs.count(fixture.fact0) == 1);
    CHECK(seqs.count(fixture.fact1) == 1);
    CHECK(seqs.count(fixture.fact2) == 1);

    auto direct = rig.recall.search(scope_a(), fixture.q0, fixture.cfg());
    auto direct_seqs = rig.retrieved_seqs(direct);
    int facts = static_cast<int>(direct_seqs.count(fixture.fact0)) +
                static_cast<int>(direct_seqs.count(fixture.fact1)) +
                static_cast<int>(direct_seqs.count(fixture.fact2));
    CHECK(facts <= 1);
}

TEST_CASE("chain stops early at confident sufficiency") {
    Rig rig;
    ThreeHopFixture fixture;
    fixture.plant(rig);
    rig.chat->on_pattern("Classify the query", "ROUTE: chain");
    rig.chat->on_pattern("SUFFICIENT:", "SUFFICIENT: yes\nCONFIDENCE: 0.9\nNEXT_QUERY: same");

    auto before = rig.recall.search_call_count();
    auto result = rig.agent.search(scope_a(), fixture.q0, fixture.cfg());
    CHECK(result.chain.stopped_early);
    CHECK(result.chain.iterations == 1);
    CHECK(result.chain.confidence == doctest::Approx(0.9));
    CHECK(rig.recall.search_call_count() - before == 1);
}

TEST_CASE("chain respects the confidence threshold") {
    Rig rig;
    ThreeHopFixture fixture;
    fixture.plant(rig);
    rig.chat->on_pattern("Classify the query", "ROUTE: chain");
    // Sufficient but under 0.8: the loop must continue to exhaustion.
    rig.chat->on_pattern("SUFFICIENT:", "SUFFICIENT: yes\nCONFIDENCE: 0.5\nNEXT_QUERY: same");

    auto result = rig.agent.search(scope_a(), fixture.q0, fixture.cfg());
    CHECK_FALSE(result.chain.stopped_early);
    CHECK(result.chain.iterations == 3);
}

TEST_CASE("confidence values clamp to [0,1] and missing confidence reads zero") {
    Rig rig;
    rig.add("Something.");
    rig.chat->on_pattern("Classify the query", "ROUTE: chain");
    rig.chat->on_pattern("SUFFICIENT:", "SUFFICIENT: yes\nCONFIDENCE: 17\nNEXT_QUERY: same");
    auto result = rig.agent.search(scope_a(), "q", ThreeHopFixture{}.cfg());
    CHECK(result.chain.confidence == doctest::Approx(1.0));
    CHECK(result.chain.stopped_early);

    Rig rig2;
    rig2.add("Something.");
    rig2.chat->on_pattern("Classify the query", "ROUTE: chain");
    rig2.chat->on_pattern("SUFFICIENT:", "SUFFICIENT: yes\nNEXT_QUERY: same");
    auto r2 = rig2.agent.search(scope_a(), "q", ThreeHopFixture{}.cfg());
    CHECK(r2.chain.confidence == 0.0);
    CHECK_FALSE(r2.chain.stopped_early);
}

TEST_CASE("unparseable sufficiency retries once then terminates") {
    Rig rig;
    rig.add("Something.");
    rig.chat->on_pattern("Classify the query", "ROUTE: chain");
    int sufficiency_calls = 0;
    rig.chat->on_pattern("Original query:", [&](const std::string&) {
        ++sufficiency_calls;
        return "word salad";
    });
    auto result = rig.agent.search(scope_a(), "q", ThreeHopFixture{}.cfg());
    CHECK(sufficiency_calls == 2);      // first try + one retry
    CHECK(result.chain.iterations == 1);  // terminated, no second search
}

TEST_CASE("chain evidence grows monotonically across iterations") {
    Rig rig;
    ThreeHopFixture fixture;
    fixture.plant(rig);
    fixture.script(rig);

    // Instrumented run: watch evidence size by re-running with growing budgets.
    std::vector<std::size_t> sizes;
    for (std::size_t budget = 1; budget <= 3; ++budget) {
        Rig fresh;
        fixture.plant(fresh);
        fixture.script(fresh);
        AgentConfig cfg;
        cfg.max_iterations = budget;
        RetrievalAgent agent(fresh.recall, fresh.chat, cfg);
        auto result = agent.search(scope_a(), fixture.q0, fixture.cfg());
        std::set<EpisodeId> ids;
        for (const auto& c : result.outcome.ltm_clusters) {
            for (EpisodeId id : c.members) ids.insert(id);
        }
        sizes.push_back(ids.size());
    }
    CHECK(sizes[0] <= sizes[1]);
    CHECK(sizes[1] <= sizes[2]);
    CHECK(sizes[2] >= 3);
}

TEST_CASE("multi-query rerank sees every issued query exactly once") {
    Rig rig;
    ThreeHopFixture fixture;
    fixture.plant(rig);
    fixture.script(rig);

    auto result = rig.agent.search(scope_a(), fixture.q0, fixture.cfg());
    auto calls = rig.reranker->calls();
    REQUIRE_FALSE(calls.empty());
    // The last call is the final multi-query rerank; its concatenated query
    // holds each issued query on its own line, exactly once.
    std::vector<std::string> lines;
    std::string q = calls.back().query;
    std::size_t start = 0;
    while (start <= q.size()) {
        auto nl = q.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(q.substr(start));
            break;
        }
        lines.push_back(q.substr(start, nl - start));
        start = nl + 1;
    }
    std::multiset<std::string> got(lines.begin(), lines.end());
    std::multiset<std::string> want(result.issued_queries.begin(), result.issued_queries.end());
    CHECK(got == want);
}

TEST_CASE("all strategies share the recall entry point") {
    Rig rig;
    ThreeHopFixture fixture;
    fixture.plant(rig);

    // Queue-driven routes first (patterns would shadow them).
    auto base = rig.recall.search_call_count();
    rig.chat->push_response("ROUTE: direct");
    rig.agent.search(scope_a(), "plain lookup", fixture.cfg());
    CHECK(rig.recall.search_call_count() - base == 1);

    rig.chat->push_response("ROUTE: split");
    rig.chat->push_response("SUBQUERY: one thing\nSUBQUERY: other thing");
    rig.agent.search(scope_a(), "one thing and another", fixture.cfg());
    CHECK(rig.recall.search_call_count() - base == 3);

    fixture.script(rig);
    rig.agent.search(scope_a(), fixture.q0, fixture.cfg());  // chain: 3 searches
    CHECK(rig.recall.search_call_count() - base == 6);
}

TEST_CASE("bounded LLM calls per query") {
    Rig rig;
    ThreeHopFixture fixture;
    fixture.plant(rig);
    fixture.script(rig);
    const AgentConfig& cfg = rig.agent.config();
    const std::size_t bound =
        2 + std::max<std::size_t>(1, cfg.max_iterations + 1);

    auto before = rig.chat->call_count();
    rig.agent.search(scope_a(), fixture.q0, fixture.cfg());
    CHECK(rig.chat->call_count() - before <= bound);

    Rig direct_rig;  // fresh double, no patterns in the way
    direct_rig.add("Simple fact.");
    direct_rig.chat->push_response("ROUTE: direct");
    before = direct_rig.chat->call_count();
    direct_rig.agent.search(scope_a(), "simple", fixture.cfg());
    CHECK(direct_rig.chat->call_count() - before == 1);  // routing only
}

TEST_CASE("tool tree is built once with advisory cost profiles") {
    Rig rig;
    const auto& tree = rig.agent.tool_tree();
    REQUIRE(tree.size() == 4);
    CHECK(tree[0].name == "router");
    for (const auto& node : tree) {
        CHECK(node.cost.accuracy_score >= 0.0);
        CHECK(node.cost.token_cost >= 0.0);
        CHECK(node.cost.time_cost >= 0.0);
    }
}

TEST_CASE("account renders a fixed-column report whose totals match") {
    TokenLedger ledger;
    ledger.router = {10, 2};
    ledger.chain = {100, 30};
    auto text = RetrievalAgent::account(ledger);
    CHECK(text.find("router") != std::string::npos);
    CHECK(text.find("110") != std::string::npos);  // total input
    CHECK(text.find("32") != std::string::npos);   // total output

    TokenLedger empty;
    auto empty_text = RetrievalAgent::account(empty);
    CHECK(empty_text.find("total") != std::string::npos);
    CHECK(empty.total().input == 0);
    CHECK(empty.total().output == 0);
}
