#include <memoir/sentence_split.hpp>

#include <benchmark/benchmark.h>

#include <random>
#include <string>

namespace {

std::string make_text(std::size_t sentences) {
    static const char* bits[] = {
        "The pipeline finished without incident",
        "Dr. Ramos asked for the follow-up numbers",
        "We shipped version 2.0 to the U.S. region",
        "Retries, e.g. exponential backoff, were enabled",
        "Is the cache warm",
    };
    static const char terminals[] = {'.', '!', '?'};
    std::mt19937 rng(42);
    std::string text;
    for (std::size_t i = 0; i < sentences; ++i) {
        text += bits[rng() % 5];
        text += terminals[rng() % 3];
        text += ' ';
    }
    return text;
}

void BM_SegmentSentences(benchmark::State& state) {
    std::string text = make_text(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto segments = memoir::segment_sentences(text);
        benchmark::DoNotOptimize(segments);
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(text.size()));
}

} // namespace

BENCHMARK(BM_SegmentSentences)->Arg(8)->Arg(64)->Arg(512);
