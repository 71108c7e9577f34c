#include "bsg/error.hpp"
#include "bsg/ppr.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace bsg {
namespace {

HeteroGraph from_edges(std::size_t n, std::vector<std::pair<NodeId, NodeId>> pairs) {
    std::vector<Edge> edges;
    for (auto [s, d] : pairs) edges.push_back({s, d, 0});
    return HeteroGraph(n, {"r"}, edges);
}

double l1(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().sum(); }

TEST(ExactPpr, TwoNodeCycle) {
    auto g = from_edges(2, {{0, 1}, {1, 0}});
    const Vector pi = exact_ppr_oracle(g.relation(0), 0, 0.5);
    EXPECT_NEAR(pi[0], 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(pi[1], 1.0 / 3.0, 1e-12);
}

TEST(ExactPpr, UnreachableNodeIsZeroAndMassIsOne) {
    auto g = from_edges(4, {{0, 1}, {1, 2}, {2, 0}, {3, 0}});
    const Vector pi = exact_ppr_oracle(g.relation(0), 0, 0.15);
    EXPECT_EQ(pi[3], 0.0);
    EXPECT_NEAR(pi.sum(), 1.0, 1e-9);
}

TEST(ExactPpr, GuardsLargeGraphs) {
    auto g = from_edges(kDenseOracleLimit + 1, {});
    EXPECT_THROW(exact_ppr_oracle(g.relation(0), 0, 0.15), Error);
}

TEST(ApproxPpr, TwoNodeCycleConverges) {
    auto g = from_edges(2, {{0, 1}, {1, 0}});
    auto r = approx_ppr(g.relation(0), 0, 0.5, 1e-12);
    EXPECT_NEAR(r.estimate(0), 2.0 / 3.0, 1e-10);
    EXPECT_NEAR(r.estimate(1), 1.0 / 3.0, 1e-10);
}

TEST(ApproxPpr, StarLeavesTie) {
    auto g = from_edges(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 0}, {2, 0}, {3, 0}, {4, 0}});
    const Vector pi = exact_ppr_oracle(g.relation(0), 0, 0.15);
    for (int u = 1; u <= 4; ++u) {
        EXPECT_GT(pi[0], pi[u]);
        EXPECT_NEAR(pi[u], pi[1], 1e-12);
    }
    auto r = approx_ppr(g.relation(0), 0, 0.15, 1e-10);
    EXPECT_LT(l1(r.dense(5), pi), 1e-8);
    auto top = ranked(r);
    EXPECT_EQ(top.front().first, 0u);
}

TEST(ApproxPpr, SelfLoopKeepsAllMass) {
    auto g = from_edges(1, {{0, 0}});
    for (double eps : {1e-2, 1e-4, 1e-8}) {
        auto r = approx_ppr(g.relation(0), 0, 0.3, eps);
        EXPECT_GE(r.estimate(0), 1.0 - eps);
    }
}

TEST(ApproxPpr, DanglingMassReturnsToStart) {
    auto g = from_edges(2, {{0, 1}});
    const Vector pi = exact_ppr_oracle(g.relation(0), 0, 0.5);
    auto r = approx_ppr(g.relation(0), 0, 0.5, 1e-12);
    EXPECT_LT(l1(r.dense(2), pi), 1e-9);
}

TEST(ApproxPpr, StoppingRuleHolds) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto g = testing::random_graph(100, 5.0, 1, seed);
        auto view = g.relation(0);
        const double eps = 1e-4;
        auto r = approx_ppr(view, static_cast<NodeId>(seed % 100), 0.15, eps);
        for (const auto& [u, res] : r.residuals) {
            EXPECT_GE(res, 0.0);
            EXPECT_LT(res, eps * std::max<double>(1.0, static_cast<double>(view.degree(u))));
        }
        for (const auto& [u, est] : r.estimates) EXPECT_GT(est, 0.0);
        EXPECT_NEAR(r.estimate_mass() + r.residual_mass(), 1.0, 1e-9);
    }
}

TEST(ApproxPpr, MassConservedAtEveryPush) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto g = testing::random_graph(150, 4.0, 1, seed);
        PprWorkspace ws(g.num_nodes());
        std::vector<double> trace;
        auto r = approx_ppr(g.relation(0), 3, 0.15, 1e-6, Direction::Out, ws, &trace);
        ASSERT_EQ(trace.size(), r.pushes);
        for (double m : trace) EXPECT_NEAR(m, 1.0, 1e-9);
    }
}

TEST(ApproxPpr, MatchesOracleWithinPushBound) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const std::size_t n = 20 + seed * 3;
        auto g = testing::random_graph(n, 1.0 + static_cast<double>(seed % 7), 1, seed);
        auto view = g.relation(0);
        for (double alpha : {0.15, 0.5}) {
            const double eps = 1e-6;
            const auto v = static_cast<NodeId>(seed % n);
            const double err = l1(approx_ppr(view, v, alpha, eps).dense(n), exact_ppr_oracle(view, v, alpha));
            EXPECT_LE(err, 2.0 * eps * static_cast<double>(view.num_edges())) << "seed " << seed;
        }
    }
}

TEST(ApproxPpr, ShrinkingEpsNeverLowersEstimates) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto g = testing::random_graph(80, 4.0, 1, seed);
        auto view = g.relation(0);
        const auto v = static_cast<NodeId>(seed % 80);
        Vector prev = approx_ppr(view, v, 0.15, 1e-2).dense(80);
        for (double eps : {1e-3, 1e-4, 1e-5, 1e-6}) {
            const Vector cur = approx_ppr(view, v, 0.15, eps).dense(80);
            for (Eigen::Index u = 0; u < 80; ++u) EXPECT_GE(cur[u], prev[u]) << "seed " << seed << " eps " << eps;
            prev = cur;
        }
    }
}

TEST(ApproxPpr, InDirectionWalksReversedEdges) {
    auto g = testing::random_graph(40, 3.0, 1, 5);
    std::vector<Edge> reversed;
    for (const auto& e : g.edges()) reversed.push_back({e.dst, e.src, 0});
    HeteroGraph rg(40, {"r0"}, reversed);
    auto a = approx_ppr(g.relation(0), 2, 0.2, 1e-7, Direction::In);
    auto b = approx_ppr(rg.relation(0), 2, 0.2, 1e-7, Direction::Out);
    EXPECT_EQ(a.estimates, b.estimates);
}

TEST(ApproxPpr, RejectsBadParameters) {
    auto g = from_edges(2, {{0, 1}});
    EXPECT_THROW(approx_ppr(g.relation(0), 0, 0.0, 1e-4), Error);
    EXPECT_THROW(approx_ppr(g.relation(0), 0, 1.0, 1e-4), Error);
    EXPECT_THROW(approx_ppr(g.relation(0), 0, 0.15, 0.0), Error);
    EXPECT_THROW(approx_ppr(g.relation(0), 5, 0.15, 1e-4), Error);
}

TEST(ApproxPpr, WorkspaceReuseIsTransparent) {
    auto g = testing::random_graph(60, 4.0, 1, 8);
    PprWorkspace ws(60);
    for (NodeId v = 0; v < 10; ++v) {
        auto a = approx_ppr(g.relation(0), v, 0.15, 1e-5, Direction::Out, ws);
        auto b = approx_ppr(g.relation(0), v, 0.15, 1e-5);
        EXPECT_EQ(a.estimates, b.estimates);
        EXPECT_EQ(a.residuals, b.residuals);
    }
}

}  // namespace
}  // namespace bsg
