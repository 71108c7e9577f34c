#include "bsg/error.hpp"
#include "bsg/homophily.hpp"
#include "bsg/sampler.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

namespace bsg {
namespace {

HeteroGraph undirected(std::size_t n, std::vector<std::pair<NodeId, NodeId>> pairs) {
    std::vector<Edge> edges;
    for (auto [a, b] : pairs) edges.push_back({a, b, 0});
    return HeteroGraph(n, {"r"}, edges);
}

LabelSet labeled(std::vector<int> ys) {
    std::vector<Label> l;
    for (int y : ys) l.push_back(y < 0 ? Label::Unlabeled : static_cast<Label>(y));
    return LabelSet(l, {}, {}, {});
}

TEST(NodeHomophily, Cases) {
    auto labels = labeled({1, 1, 0, 1, 0});
    const std::vector<NodeId> four{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(*node_homophily(four, labels, 0), 0.5);
    EXPECT_FALSE(node_homophily({}, labels, 0).has_value());
    auto partial = labeled({1, -1, 1});
    const std::vector<NodeId> two{1, 2};
    EXPECT_DOUBLE_EQ(*node_homophily(two, partial, 0), 1.0);
    EXPECT_THROW(node_homophily(two, partial, 1), Error);
}

TEST(GraphHomophily, TriangleAndPath) {
    auto tri = undirected(3, {{0, 1}, {1, 2}, {2, 0}});
    EXPECT_DOUBLE_EQ(graph_homophily(tri, labeled({1, 1, 1})), 1.0);

    auto path = undirected(3, {{0, 1}, {1, 2}});
    auto labels = labeled({1, 0, 1});
    auto report = homophily_report(path, labels);
    EXPECT_DOUBLE_EQ(report.h, 0.0);
    EXPECT_EQ(report.histogram, (std::array<std::size_t, 4>{3, 0, 0, 0}));
    for (const auto& [v, h] : report.per_node) EXPECT_EQ(h, 0.0);
}

TEST(GraphHomophily, NoDefinedNodeIsAnError) {
    auto g = undirected(3, {});
    EXPECT_THROW(graph_homophily(g, labeled({1, 0, 1})), Error);
}

TEST(HomophilyReport, AllBotCliqueOmitsHumanMean) {
    auto g = undirected(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
    auto report = homophily_report(g, labeled({1, 1, 1, 1}));
    ASSERT_TRUE(report.bot_mean.has_value());
    EXPECT_EQ(*report.bot_mean, 1.0);
    EXPECT_FALSE(report.human_mean.has_value());
    auto j = nlohmann::json::parse(to_json(report));
    EXPECT_TRUE(j["human_mean"].is_null());
    EXPECT_EQ(j["h"].get<double>(), 1.0);
}

TEST(HomophilyReport, HistogramBins) {
    EXPECT_EQ(histogram_bin(0.0), 0u);
    EXPECT_EQ(histogram_bin(0.25), 1u);
    EXPECT_EQ(histogram_bin(0.5), 2u);
    EXPECT_EQ(histogram_bin(0.75), 3u);
    EXPECT_EQ(histogram_bin(1.0), 3u);
}

TEST(GraphHomophily, MatchesEdgeListOracle) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const std::size_t n = 5 + seed % 46;
        auto g = testing::random_graph(n, 2.5, 1 + seed % 3, seed);
        auto labels = testing::random_labels(n, 0.4, seed + 1000);
        const auto edges = g.edges();
        for (NodeId v = 0; v < n; ++v) {
            EXPECT_EQ(node_homophily(undirected_neighbors(g, v), labels, v),
                      testing::brute_node_homophily(edges, labels.labels(), v));
        }
        auto oracle = testing::brute_graph_homophily(edges, labels.labels());
        if (oracle) {
            EXPECT_EQ(graph_homophily(g, labels), *oracle);
        } else {
            EXPECT_THROW(graph_homophily(g, labels), Error);
        }
    }
}

TEST(SubgraphHomophily, UsesSelectedSet) {
    BiasedSubgraph sub;
    sub.start = 0;
    sub.nodes = {0, 1, 2, 3};
    sub.relations.resize(2);
    sub.relations[0].selected = {1, 2};
    sub.relations[1].selected = {2, 3};
    auto labels = labeled({1, 1, 0, 0});
    std::vector<BiasedSubgraph> subs{sub};
    EXPECT_DOUBLE_EQ(graph_homophily(subs, labels), 1.0 / 3.0);
}

}  // namespace
}  // namespace bsg
