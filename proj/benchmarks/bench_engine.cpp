#include <memoir/engine.hpp>

#include <benchmark/benchmark.h>

namespace {

using namespace memoir;

MemoryScope bench_scope() { return {"org", "proj", "bench", "agent", "s"}; }

EngineConfig bench_config() {
    EngineConfig cfg;
    cfg.embedder.dimension = 64;
    cfg.stm.summary_enabled = false;
    cfg.profile.enabled = false;
    return cfg;
}

// Full ingestion fan-out: store append, window maintenance, segmentation,
// embedding, index insert.
void BM_AddEpisode(benchmark::State& state) {
    MemoryEngine engine(bench_config());
    std::int64_t i = 0;
    for (auto _ : state) {
        auto ep = engine.add_episode(
            bench_scope(),
            "Turn " + std::to_string(i) + " of the conversation. It mentions a detail.",
            Producer::user, 1700000000000 + i);
        benchmark::DoNotOptimize(ep);
        ++i;
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}

void BM_RecallSearch(benchmark::State& state) {
    MemoryEngine engine(bench_config());
    for (std::int64_t i = 0; i < state.range(0); ++i) {
        engine.add_episode(bench_scope(),
                           "Turn " + std::to_string(i) + " talks about topic " +
                               std::to_string(i % 13) + ". A second sentence follows.",
                           Producer::user, 1700000000000 + i);
    }
    MemoryEngine::SearchRequest request;
    request.query = "what was said about topic 7";
    for (auto _ : state) {
        auto result = engine.search(bench_scope(), request);
        benchmark::DoNotOptimize(result);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}

} // namespace

BENCHMARK(BM_AddEpisode);
BENCHMARK(BM_RecallSearch)->Arg(500)->Arg(5000);

BENCHMARK_MAIN();
