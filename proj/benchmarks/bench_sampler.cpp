#include "bsg/random.hpp"
#include "bsg/sampler.hpp"
#include "bsg/synth.hpp"

#include <benchmark/benchmark.h>

#include <numeric>

namespace {

struct Fixture {
    bsg::SynthData data;
    bsg::SimilarityIndex sims;
    std::vector<bsg::NodeId> starts;
};

const Fixture& fixture() {
    static const Fixture f = [] {
        auto cfg = bsg::SynthConfig::mixed_pattern();
        cfg.n = 5000;
        auto data = bsg::generate(cfg);
        bsg::Rng rng(1);
        bsg::Matrix h(static_cast<Eigen::Index>(cfg.n), 32);
        for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = bsg::standard_normal(rng);
        std::vector<bsg::NodeId> starts(512);
        std::iota(starts.begin(), starts.end(), 0);
        return Fixture{std::move(data), bsg::SimilarityIndex(h), starts};
    }();
    return f;
}

void BM_BiasedSubgraphs(benchmark::State& state) {
    const auto& f = fixture();
    bsg::SamplerConfig cfg;
    cfg.k = static_cast<std::size_t>(state.range(0));
    const auto workers = static_cast<std::size_t>(state.range(1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(bsg::build_biased_subgraphs(f.data.graph, f.sims, f.starts, cfg, workers));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.starts.size()));
}
BENCHMARK(BM_BiasedSubgraphs)->Args({16, 1})->Args({32, 1})->Args({32, 4})->Unit(benchmark::kMillisecond);

void BM_SelectTopK(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    bsg::Rng rng(2);
    std::vector<bsg::Candidate> c(m);
    for (std::size_t i = 0; i < m; ++i) c[i] = {static_cast<bsg::NodeId>(i), bsg::uniform01(rng), bsg::uniform01(rng)};
    for (auto _ : state) benchmark::DoNotOptimize(bsg::select_top_k(c, 32));
}
BENCHMARK(BM_SelectTopK)->Arg(100)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
