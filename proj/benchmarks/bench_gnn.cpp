#include "bsg/gnn.hpp"
#include "bsg/random.hpp"
#include "bsg/sampler.hpp"

#include <benchmark/benchmark.h>

#include <numeric>

namespace {

struct Fixture {
    bsg::Matrix features;
    std::vector<bsg::PreparedSubgraph> prepared;
};

const Fixture& fixture() {
    static const Fixture f = [] {
        const std::size_t n = 3000;
        bsg::Rng rng(3);
        std::vector<bsg::Edge> edges;
        for (std::size_t r = 0; r < 2; ++r) {
            for (std::size_t e = 0; e < 10 * n; ++e) {
                edges.push_back({static_cast<bsg::NodeId>(bsg::uniform_index(rng, n)),
                                 static_cast<bsg::NodeId>(bsg::uniform_index(rng, n)), r});
            }
        }
        bsg::HeteroGraph g(n, {"a", "b"}, edges);
        bsg::Matrix x(static_cast<Eigen::Index>(n), 40);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = bsg::standard_normal(rng);
        bsg::SimilarityIndex sims(x);
        std::vector<bsg::NodeId> starts(64);
        std::iota(starts.begin(), starts.end(), 0);
        Fixture out{x, {}};
        for (const auto& s : bsg::build_biased_subgraphs(g, sims, starts, bsg::SamplerConfig{})) {
            out.prepared.push_back(bsg::prepare_subgraph(s, static_cast<int>(s.start % 2)));
        }
        return out;
    }();
    return f;
}

void BM_TrainingBatch(benchmark::State& state) {
    const auto& f = fixture();
    bsg::GnnConfig arch;
    arch.hidden = static_cast<std::size_t>(state.range(0));
    arch.attention = arch.hidden / 2;
    const auto m = bsg::init_gnn(40, 2, arch, 1);
    std::vector<const bsg::PreparedSubgraph*> batch;
    for (const auto& p : f.prepared) batch.push_back(&p);
    bsg::BatchOptions opts;
    opts.training = true;
    opts.reg_lambda = 1e-5;
    opts.workers = static_cast<std::size_t>(state.range(1));
    bsg::GnnParams grad;
    for (auto _ : state) {
        ++opts.dropout_seed;
        benchmark::DoNotOptimize(bsg::run_batch(m, f.features, batch, opts, &grad));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_TrainingBatch)->Args({32, 1})->Args({64, 1})->Args({64, 4})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
