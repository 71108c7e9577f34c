#include "bsg/ppr.hpp"
#include "bsg/random.hpp"

#include <benchmark/benchmark.h>

namespace {

bsg::HeteroGraph random_graph(std::size_t n, double degree, std::uint64_t seed) {
    bsg::Rng rng(seed);
    std::vector<bsg::Edge> edges;
    const auto m = static_cast<std::size_t>(degree * static_cast<double>(n));
    for (std::size_t e = 0; e < m; ++e) {
        const auto a = static_cast<bsg::NodeId>(bsg::uniform_index(rng, n));
        const auto b = static_cast<bsg::NodeId>(bsg::uniform_index(rng, n));
        if (a != b) edges.push_back({a, b, 0});
    }
    return bsg::HeteroGraph(n, {"r"}, edges);
}

void BM_ApproxPpr(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const double eps = 1.0 / static_cast<double>(state.range(1));
    const auto g = random_graph(n, 8.0, 1);
    bsg::PprWorkspace ws(n);
    bsg::NodeId start = 0;
    std::size_t pushes = 0;
    for (auto _ : state) {
        auto pr = bsg::approx_ppr(g.relation(0), start, 0.15, eps, bsg::Direction::Out, ws);
        pushes += pr.pushes;
        benchmark::DoNotOptimize(pr);
        start = static_cast<bsg::NodeId>((start + 7919) % n);
    }
    state.counters["pushes"] = benchmark::Counter(static_cast<double>(pushes), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_ApproxPpr)->Args({10000, 10000})->Args({100000, 10000})->Args({100000, 100000});

void BM_ExactPprOracle(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto g = random_graph(n, 8.0, 2);
    for (auto _ : state) benchmark::DoNotOptimize(bsg::exact_ppr_oracle(g.relation(0), 0, 0.15));
}
BENCHMARK(BM_ExactPprOracle)->Arg(200)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
