#include <memoir/ltm_index.hpp>

#include <benchmark/benchmark.h>

#include <memory>
#include <random>

namespace {

using namespace memoir;

MemoryScope bench_scope() { return {"org", "proj", "bench", "agent", "s"}; }

struct IndexFixture {
    std::shared_ptr<HashEmbedder> embedder;
    std::unique_ptr<LtmIndex> index;

    IndexFixture(std::size_t records, std::size_t dim) {
        embedder = std::make_shared<HashEmbedder>(dim);
        index = std::make_unique<LtmIndex>(IndexConfig{}, embedder);
        std::mt19937 rng(7);
        for (std::size_t i = 0; i < records; ++i) {
            Episode ep;
            ep.id = i + 1;
            ep.sequence = i;
            ep.timestamp_ms = 1700000000000 + static_cast<std::int64_t>(i);
            ep.scope = bench_scope();
            ep.content = "record " + std::to_string(rng()) + " data " + std::to_string(i);
            index->index_episode(ep);
        }
    }
};

void BM_KnnSearch(benchmark::State& state) {
    IndexFixture fixture(static_cast<std::size_t>(state.range(0)), 64);
    auto query = fixture.embedder->embed({"probe record data"})[0];
    std::size_t k = static_cast<std::size_t>(state.range(1));
    for (auto _ : state) {
        auto hits = fixture.index->knn_search(bench_scope(), query, k);
        benchmark::DoNotOptimize(hits);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}

void BM_IndexEpisode(benchmark::State& state) {
    auto embedder = std::make_shared<HashEmbedder>(64);
    LtmIndex index({}, embedder);
    std::size_t i = 0;
    for (auto _ : state) {
        Episode ep;
        ep.id = ++i;
        ep.sequence = i;
        ep.timestamp_ms = 1700000000000 + static_cast<std::int64_t>(i);
        ep.scope = bench_scope();
        ep.content = "First point about " + std::to_string(i) +
                     ". Second point follows! Third asks why?";
        auto records = index.index_episode(ep);
        benchmark::DoNotOptimize(records);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}

} // namespace

BENCHMARK(BM_KnnSearch)->Args({1000, 10})->Args({10000, 10})->Args({10000, 50});
BENCHMARK(BM_IndexEpisode);
