#include "bsg/error.hpp"
#include "bsg/homophily.hpp"
#include "bsg/preclassifier.hpp"
#include "bsg/synth.hpp"

#include "tmpdir.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

namespace bsg {
namespace {

SynthConfig small(std::uint64_t seed, std::size_t n = 300) {
    SynthConfig cfg = SynthConfig::mixed_pattern();
    cfg.n = n;
    cfg.seed = seed;
    cfg.tweets_per_user = 20;
    cfg.categories = 5;
    return cfg;
}

TEST(Synth, LabelCountAndSplits) {
    auto cfg = small(1);
    auto d = generate(cfg);
    std::size_t bots = 0;
    for (auto l : d.labels.labels()) bots += l == Label::Bot;
    EXPECT_LE(std::abs(static_cast<double>(bots) - 0.3 * 300.0), 1.0);
    EXPECT_EQ(d.labels.train().size(), 210u);
    EXPECT_EQ(d.labels.val().size(), 30u);
    EXPECT_EQ(d.labels.test().size(), 60u);
    EXPECT_EQ(d.features.rows(), 300u);
    EXPECT_EQ(d.features.width(), 8u + 8u + 4u + 2u + 6u + 12u);
}

TEST(Synth, BlockEdgeCountsWithinFourSigma) {
    auto cfg = small(2, 600);
    auto d = generate(cfg);
    std::size_t nc[2] = {0, 0};
    for (auto l : d.labels.labels()) ++nc[l == Label::Bot ? 1 : 0];
    for (std::size_t r = 0; r < cfg.relations.size(); ++r) {
        std::size_t count[2][2] = {{0, 0}, {0, 0}};
        for (const auto& e : d.graph.edges()) {
            if (e.relation != r) continue;
            ++count[d.labels.label(e.src) == Label::Bot][d.labels.label(e.dst) == Label::Bot];
        }
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                const double pairs = static_cast<double>(nc[a]) * static_cast<double>(nc[b] - (a == b ? 1 : 0));
                const double p = cfg.relations[r].p[a][b];
                const double mean = pairs * p;
                const double sd = std::sqrt(pairs * p * (1.0 - p));
                EXPECT_LE(std::abs(static_cast<double>(count[a][b]) - mean), 4.0 * sd + 1e-9)
                    << cfg.relations[r].name << " " << a << b;
            }
        }
    }
    for (const auto& e : d.graph.edges()) EXPECT_NE(e.src, e.dst);
}

TEST(Synth, NoInterClassEdgesMeansPerfectHomophily) {
    auto cfg = small(3);
    cfg.relations = {{"r", {{{0.02, 0.0}, {0.0, 0.02}}}}};
    auto d = generate(cfg);
    EXPECT_EQ(graph_homophily(d.graph, d.labels), 1.0);
}

TEST(Synth, UniformBlocksGiveChanceHomophily) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto cfg = small(seed, 400);
        cfg.bot_fraction = 0.5;
        cfg.relations = {{"r", {{{0.02, 0.02}, {0.02, 0.02}}}}};
        total += graph_homophily(generate(cfg).graph, generate(cfg).labels);
    }
    EXPECT_NEAR(total / 20.0, 0.5, 0.03);
}

TEST(Synth, ZeroSeparationIsUninformative) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto cfg = small(seed, 400);
        cfg.bot_fraction = 0.5;
        cfg.separation = 0.0;
        auto d = generate(cfg);
        MlpConfig mc;
        mc.hidden = 16;
        mc.epochs = 50;
        mc.seed = seed;
        auto res = train_mlp(d.features, d.labels, mc);
        auto probs = predict_proba(res.model, d.features.values);
        std::size_t correct = 0;
        for (NodeId v : d.labels.test()) {
            const int pred = probs(v, 1) > probs(v, 0) ? 1 : 0;
            correct += pred == static_cast<int>(d.labels.label(v));
        }
        total += static_cast<double>(correct) / static_cast<double>(d.labels.test().size());
    }
    EXPECT_NEAR(total / 10.0, 0.5, 0.05);
}

TEST(Synth, Deterministic) {
    auto a = generate(small(5));
    auto b = generate(small(5));
    EXPECT_EQ(a.graph.edges(), b.graph.edges());
    EXPECT_EQ(a.features.values, b.features.values);
    EXPECT_EQ(a.labels.train(), b.labels.train());
    auto c = generate(small(6));
    EXPECT_NE(a.graph.edges(), c.graph.edges());
}

TEST(Synth, Validation) {
    auto cfg = small(0);
    cfg.n = 2;
    EXPECT_THROW(generate(cfg), Error);
    cfg = small(0);
    cfg.relations[0].p[0][1] = 1.5;
    EXPECT_THROW(generate(cfg), Error);
    cfg = small(0);
    cfg.relations.clear();
    EXPECT_THROW(generate(cfg), Error);
    cfg = small(0);
    cfg.bot_topics = 0;
    EXPECT_THROW(generate(cfg), Error);
    cfg = small(0);
    cfg.separation = -1.0;
    EXPECT_THROW(generate(cfg), Error);
}

TEST(Synth, FromConfig) {
    auto kv = KeyValueConfig::parse_string("n = 50\nrelations = a,b\np.a = 0.1,0,0,0.1\np.b = 0,0.2,0.2,0\nseed = 4\n");
    auto cfg = SynthConfig::from_config(kv);
    EXPECT_EQ(cfg.n, 50u);
    ASSERT_EQ(cfg.relations.size(), 2u);
    EXPECT_EQ(cfg.relations[1].name, "b");
    EXPECT_EQ(cfg.relations[1].p[1][0], 0.2);
    EXPECT_THROW(SynthConfig::from_config(KeyValueConfig::parse_string("bogus = 1\n")), Error);
    EXPECT_THROW(SynthConfig::from_config(KeyValueConfig::parse_string("relations = x\n")), Error);
    EXPECT_THROW(SynthConfig::from_config(KeyValueConfig::parse_string("relations = a\np.a = 1,2\n")), Error);
    EXPECT_THROW(SynthConfig::from_config(KeyValueConfig::parse_string("preset = other\n")), Error);
    auto dflt = SynthConfig::from_config(KeyValueConfig::parse_string(""));
    EXPECT_EQ(dflt.relations.size(), 2u);
}

TEST(Synth, WriteProducesPipelineInputs) {
    testing::TempDir dir;
    auto cfg = small(7, 60);
    auto d = generate(cfg);
    write_synth(d, cfg, dir.path().string());
    for (const char* f : {"edges.tsv", "labels.tsv", "splits.txt", "features.bin", "tweets.bin", "tweet_owners.tsv",
                          "monthly.tsv", "pipeline.cfg", "description.bin"}) {
        EXPECT_TRUE(std::filesystem::exists(dir.path() / f)) << f;
    }
    auto kv = KeyValueConfig::parse_file(dir.file("pipeline.cfg"));
    EXPECT_EQ(kv.get_size("n", 0), 60u);
    auto g = load_graph(kv.require_string("edges"), 60, {"follow", "mention"});
    EXPECT_EQ(g.edges(), d.graph.edges());
}

}  // namespace
}  // namespace bsg
