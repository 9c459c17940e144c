#include <doctest.h>

#include <memoir/harness.hpp>
#include <memoir/sentence_split.hpp>

#include <sstream>

using namespace memoir;

namespace {

EngineConfig doubles_config(std::size_t stm_capacity = 4) {
    EngineConfig cfg;
    cfg.embedder.dimension = 16;
    cfg.stm.capacity = stm_capacity;
    cfg.stm.summary_enabled = false;
    cfg.profile.enabled = false;
    return cfg;
}

std::string jsonl_line(const std::string& session, int i, const std::string& content,
                       const std::string& producer = "user") {
    nlohmann::json j{{"session_id", session},
                     {"producer", producer},
                     {"timestamp", 1700000000000 + i * 1000},
                     {"content", content}};
    return j.dump() + "\n";
}

} // namespace

TEST_CASE("three-line fixture ingests three episodes") {
    MemoryEngine engine(doubles_config());
    Harness harness(engine);
    std::istringstream in(jsonl_line("s1", 0, "First message.") +
                          jsonl_line("s1", 1, "Second message.", "agent") +
                          jsonl_line("s1", 2, "Third message."));
    auto report = harness.ingest(in, {});
    CHECK(report.episodes == 3);
    CHECK(report.sessions == 1);
    CHECK(report.sentences == 3);
    CHECK(engine.store().session_size({"default", "default", "user", "agent", "s1"}) == 3);
}

TEST_CASE("malformed line is reported by number and nothing ingests") {
    MemoryEngine engine(doubles_config());
    Harness harness(engine);
    std::istringstream in(jsonl_line("s1", 0, "fine") + "{broken json\n" +
                          jsonl_line("s1", 2, "also fine"));
    try {
        harness.ingest(in, {});
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK(engine.store().session_size({"default", "default", "user", "agent", "s1"}) == 0);
}

TEST_CASE("synthetic thousand-line transcript matches the segmenter oracle") {
    MemoryEngine engine(doubles_config());
    Harness harness(engine);

    std::string transcript;
    std::size_t oracle_sentences = 0;
    for (int i = 0; i < 1000; ++i) {
        std::string content = "Message number " + std::to_string(i) +
                              ". It has a second sentence! Maybe a third?";
        oracle_sentences += segment_sentences(content).size();
        transcript += jsonl_line("s" + std::to_string(i % 5), i, content);
    }
    std::istringstream in(transcript);
    auto report = harness.ingest(in, {});
    CHECK(report.episodes == 1000);
    CHECK(report.sessions == 5);
    CHECK(report.sentences == oracle_sentences);
}

TEST_CASE("evaluate scores a planted-fact suite at full recall") {
    MemoryEngine engine(doubles_config(2));
    auto embedder = std::dynamic_pointer_cast<HashEmbedder>(engine.embedder_port());
    REQUIRE(embedder);

    std::string transcript;
    std::vector<QuerySpec> queries;
    for (int f = 0; f < 10; ++f) {
        std::string fact = "fact token" + std::to_string(f) + " lives here";
        std::string query = "where does token" + std::to_string(f) + " live";
        embedder->seed_phrase(fact, HashEmbedder::unit_axis(16, f));
        embedder->seed_phrase(query,
                              HashEmbedder::nudge(HashEmbedder::unit_axis(16, f), 15, 0.05f));
        QuerySpec spec;
        spec.query = query;
        spec.gold_episode_ids = {"s1#" + std::to_string(f * 4)};
        queries.push_back(spec);
    }
    for (int i = 0; i < 40; ++i) {
        int f = i / 4;
        bool is_fact = (i % 4 == 0);
        transcript += jsonl_line(
            "s1", i, is_fact ? "fact token" + std::to_string(f) + " lives here"
                             : "filler chatter " + std::to_string(i) + " goes on.");
    }

    Harness harness(engine);
    std::istringstream in(transcript);
    harness.ingest(in, {});

    auto report = harness.evaluate(queries, "memory", {});
    CHECK(report.evaluated == 10);
    CHECK(report.skipped == 0);
    CHECK(report.mean_recall == doctest::Approx(1.0));
    CHECK(report.hit_rate == doctest::Approx(1.0));
    CHECK(report.route_counts.at("none") == 10);
}

TEST_CASE("adjacency-placed gold shows the neighbor-expansion benefit") {
    auto build_report = [](std::size_t before, std::size_t after) {
        MemoryEngine engine(doubles_config(2));
        auto embedder = std::dynamic_pointer_cast<HashEmbedder>(engine.embedder_port());
        std::string transcript;
        std::vector<QuerySpec> queries;
        for (int f = 0; f < 8; ++f) {
            // The sentence matching the query is the turn BEFORE the gold fact.
            std::string lead = "let me tell you about marker" + std::to_string(f);
            std::string gold = "the marker" + std::to_string(f) + " value is " +
                               std::to_string(1000 + f);
            std::string query = "what is the marker" + std::to_string(f) + " value";
            embedder->seed_phrase(lead, HashEmbedder::unit_axis(16, f));
            embedder->seed_phrase(query,
                                  HashEmbedder::nudge(HashEmbedder::unit_axis(16, f), 15, 0.05f));
            QuerySpec spec;
            spec.query = query;
            spec.gold_episode_ids = {"s1#" + std::to_string(f * 4 + 1)};
            nlohmann::json overrides{{"nucleus_k", 2},
                                     {"cluster_top_k", 2},
                                     {"neighbors_before", before},
                                     {"neighbors_after", after}};
            spec.config_overrides = overrides;
            queries.push_back(spec);
        }
        std::string lines;
        for (int i = 0; i < 32; ++i) {
            int f = i / 4;
            std::string content;
            if (i % 4 == 0) {
                content = "let me tell you about marker" + std::to_string(f);
            } else if (i % 4 == 1) {
                content = "the marker" + std::to_string(f) + " value is " +
                          std::to_string(1000 + f);
            } else {
                content = "irrelevant filler " + std::to_string(i) + " text.";
            }
            lines += jsonl_line("s1", i, content);
        }
        Harness harness(engine);
        std::istringstream in(lines);
        harness.ingest(in, {});
        return Harness::report_json(harness.evaluate(queries, "memory", {}));
    };

    auto bare = build_report(0, 0);
    auto expanded = build_report(1, 2);
    CHECK(bare.at("aggregate").at("mean_recall").get<double>() <
          expanded.at("aggregate").at("mean_recall").get<double>());
    CHECK(expanded.at("aggregate").at("mean_recall").get<double>() == doctest::Approx(1.0));

    auto delta = Harness::diff(bare, expanded);
    double recall_delta = 0;
    for (const auto& row : delta.at("metrics")) {
        if (row.at("metric") == "mean_recall") recall_delta = row.at("delta").get<double>();
    }
    CHECK(recall_delta > 0.0);
}

TEST_CASE("missing gold ids skip the query with a warning") {
    MemoryEngine engine(doubles_config());
    Harness harness(engine);
    std::istringstream in(jsonl_line("s1", 0, "only line."));
    harness.ingest(in, {});

    QuerySpec good{"only line", {"s1#0"}, "", std::nullopt, std::nullopt};
    QuerySpec bad{"nothing", {"s1#99"}, "", std::nullopt, std::nullopt};
    auto report = harness.evaluate({good, bad}, "memory", {});
    CHECK(report.evaluated == 1);
    CHECK(report.skipped == 1);
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].find("s1#99") != std::string::npos);
}

TEST_CASE("evaluate twice yields byte-identical JSON reports") {
    MemoryEngine engine(doubles_config());
    Harness harness(engine);
    std::string transcript;
    for (int i = 0; i < 20; ++i) {
        transcript += jsonl_line("s1", i, "Some words " + std::to_string(i) + " here.");
    }
    std::istringstream in(transcript);
    harness.ingest(in, {});

    std::vector<QuerySpec> queries;
    for (int i = 0; i < 5; ++i) {
        QuerySpec q;
        q.query = "words " + std::to_string(i);
        q.gold_episode_ids = {"s1#" + std::to_string(i)};
        queries.push_back(q);
    }
    auto a = Harness::report_json(harness.evaluate(queries, "memory", {})).dump();
    auto b = Harness::report_json(harness.evaluate(queries, "memory", {})).dump();
    CHECK(a == b);

    auto parallel =
        Harness::report_json(harness.evaluate(queries, "memory", {}, 4)).dump();
    CHECK(a == parallel);
}

TEST_CASE("report totals equal the sum over queries") {
    MemoryEngine engine(doubles_config());
    Harness harness(engine);
    std::istringstream in(jsonl_line("s1", 0, "alpha.") + jsonl_line("s1", 1, "beta."));
    harness.ingest(in, {});
    std::vector<QuerySpec> queries = {{"alpha", {"s1#0"}, "", std::nullopt, std::nullopt},
                                      {"beta", {"s1#1"}, "", std::nullopt, std::nullopt}};
    auto report = harness.evaluate(queries, "memory", {});
    double sum_in = 0;
    for (const auto& q : report.queries) sum_in += double(q.ledger.total().input);
    CHECK(report.mean_input_tokens * double(report.evaluated) == doctest::Approx(sum_in));
}

TEST_CASE("diff demands matching query sets and zero-diffs identical reports") {
    MemoryEngine engine(doubles_config());
    Harness harness(engine);
    std::istringstream in(jsonl_line("s1", 0, "alpha."));
    harness.ingest(in, {});
    std::vector<QuerySpec> queries = {{"alpha", {"s1#0"}, "", std::nullopt, std::nullopt}};
    auto a = Harness::report_json(harness.evaluate(queries, "memory", {}));

    auto delta = Harness::diff(a, a);
    REQUIRE(delta.at("metrics").size() == 6);  // one row per metric
    for (const auto& row : delta.at("metrics")) {
        CHECK(row.at("delta").get<double>() == 0.0);
    }
    auto table = Harness::diff_table(delta);
    CHECK(table.find("mean_recall") != std::string::npos);

    std::vector<QuerySpec> other = {{"beta", {"s1#0"}, "", std::nullopt, std::nullopt}};
    auto b = Harness::report_json(harness.evaluate(other, "memory", {}));
    CHECK_THROWS_AS(Harness::diff(a, b), Error);
}

TEST_CASE("answer/judge hook runs only with a chat provider and a reference") {
    auto run = [](std::shared_ptr<ScriptedChat> chat) {
        auto cfg = doubles_config();
        MemoryEngine engine(cfg, nullptr, chat);
        Harness harness(engine);
        std::istringstream in(jsonl_line("s1", 0, "the door code is 4412."));
        harness.ingest(in, {});
        QuerySpec spec;
        spec.query = "what is the door code";
        spec.gold_episode_ids = {"s1#0"};
        spec.reference_answer = "4412";
        return harness.evaluate({spec}, "memory", {});
    };

    SUBCASE("with a scripted judge") {
        auto chat = std::make_shared<ScriptedChat>();
        chat->on_pattern("Reply with the answer only", "The code is 4412");
        chat->on_pattern("SCORE:", "SCORE: 1");
        auto report = run(chat);
        REQUIRE(report.judged == 1);
        CHECK(report.mean_judge_score == doctest::Approx(1.0));
        CHECK(report.queries[0].answer == "The code is 4412");
        CHECK(report.queries[0].answer_f1 > 0.0);
        CHECK(report.queries[0].judge_tokens.input > 0);
        // Judge spend stays out of the engine-side ledger.
        CHECK(report.queries[0].ledger.total().input == 0);
        // The answer prompt carried the rendered context.
        bool saw_context = false;
        for (const auto& p : chat->captured_prompts()) {
            if (p.find("door code is 4412") != std::string::npos &&
                p.find("Reply with the answer only") != std::string::npos) {
                saw_context = true;
            }
        }
        CHECK(saw_context);
    }

    SUBCASE("without a chat provider the hook is disabled") {
        auto report = run(nullptr);
        CHECK(report.judged == 0);
        CHECK(report.evaluated == 1);
        CHECK(report.mean_recall == doctest::Approx(1.0));
    }
}

TEST_CASE("token F1 reflects answer overlap") {
    auto chat = std::make_shared<ScriptedChat>();
    chat->on_pattern("Reply with the answer only", "wrong thing entirely");
    chat->on_pattern("SCORE:", "SCORE: 0");
    auto cfg = doubles_config();
    MemoryEngine engine(cfg, nullptr, chat);
    Harness harness(engine);
    std::istringstream in(jsonl_line("s1", 0, "alpha."));
    harness.ingest(in, {});
    QuerySpec spec;
    spec.query = "alpha";
    spec.gold_episode_ids = {"s1#0"};
    spec.reference_answer = "completely different words";
    auto report = harness.evaluate({spec}, "memory", {});
    REQUIRE(report.judged == 1);
    CHECK(report.mean_judge_score == 0.0);
    CHECK(report.queries[0].answer_f1 == 0.0);
}

TEST_CASE("queries file parsing validates entries") {
    auto specs = Harness::parse_queries(nlohmann::json::parse(
        R"([{"query":"q1","gold":["s1#0"],"agent_mode":true,"config":{"nucleus_k":8}}])"));
    REQUIRE(specs.size() == 1);
    CHECK(specs[0].agent_mode == true);
    CHECK(specs[0].config_overrides->at("nucleus_k") == 8);
    CHECK_THROWS_AS(Harness::parse_queries(nlohmann::json::parse(R"([{"gold":[]}])")), Error);
    CHECK_THROWS_AS(Harness::parse_queries(nlohmann::json::object()), Error);
}
