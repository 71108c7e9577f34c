#include "bsg/error.hpp"
#include "bsg/graph.hpp"

#include "oracles.hpp"
#include "tmpdir.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <tuple>

namespace bsg {
namespace {

using testing::TempDir;

HeteroGraph small_graph(const TempDir& dir) {
    auto path = dir.write("e.tsv", "0\t1\tfollow\n1\t0\tfollow\n0\t2\treply\n");
    return load_graph(path, 3, {"follow", "reply"});
}

TEST(LoadGraph, BucketsEdgesByRelation) {
    TempDir dir;
    auto g = small_graph(dir);
    EXPECT_EQ(g.num_nodes(), 3u);
    EXPECT_EQ(g.num_edges(0), 2u);
    EXPECT_EQ(g.num_edges(1), 1u);
    EXPECT_EQ(g.total_edges(), 3u);
}

TEST(LoadGraph, EmptyFileGivesIsolatedNodes) {
    TempDir dir;
    auto g = load_graph(dir.write("e.tsv", ""), 5, {"follow"});
    EXPECT_EQ(g.num_nodes(), 5u);
    EXPECT_EQ(g.num_edges(0), 0u);
    for (NodeId v = 0; v < 5; ++v) EXPECT_EQ(g.relation(0).degree(v), 0u);
}

TEST(LoadGraph, RejectsOutOfRangeNode) {
    TempDir dir;
    auto path = dir.write("e.tsv", "0\t9\tfollow\n");
    try {
        load_graph(path, 3, {"follow"});
        FAIL() << "expected an error";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("node id out of range"), std::string::npos);
        EXPECT_EQ(e.line(), 1u);
    }
}

TEST(LoadGraph, ReportsLineOfMalformedRow) {
    TempDir dir;
    auto path = dir.write("e.tsv", "0\t1\tfollow\n0\tx\tfollow\n");
    try {
        load_graph(path, 3, {"follow"});
        FAIL() << "expected an error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(LoadGraph, RejectsUnknownRelation) {
    TempDir dir;
    EXPECT_THROW(load_graph(dir.write("e.tsv", "0\t1\tlike\n"), 3, {"follow"}), Error);
}

TEST(LoadGraph, DeduplicatesAndKeepsSelfLoops) {
    TempDir dir;
    auto g = load_graph(dir.write("e.tsv", "0 1 follow\n0 1 follow\n2 2 follow\n"), 3, {"follow"});
    EXPECT_EQ(g.num_edges(0), 2u);
    EXPECT_TRUE(g.relation(0).has_edge(2, 2));
}

TEST(HeteroGraph, RejectsDuplicateRelationNames) {
    std::vector<Edge> none;
    EXPECT_THROW(HeteroGraph(2, {"a", "a"}, none), Error);
}

TEST(RelationView, Queries) {
    TempDir dir;
    auto g = small_graph(dir);
    auto follow = g.relation("follow");
    ASSERT_EQ(follow.out_neighbors(0).size(), 1u);
    EXPECT_EQ(follow.out_neighbors(0)[0], 1u);
    EXPECT_EQ(g.relation("reply").degree(1), 0u);
    EXPECT_THROW(g.relation("like"), Error);
}

TEST(HeteroGraph, DegreeSumsAndDirectionsAgree) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto g = testing::random_graph(40, 4.0, 3, seed);
        for (std::size_t r = 0; r < g.num_relations(); ++r) {
            auto view = g.relation(r);
            std::size_t out_sum = 0, in_sum = 0;
            for (NodeId v = 0; v < g.num_nodes(); ++v) {
                out_sum += view.degree(v);
                in_sum += view.in_degree(v);
                for (NodeId u : view.out_neighbors(v)) {
                    auto in = view.in_neighbors(u);
                    EXPECT_TRUE(std::binary_search(in.begin(), in.end(), v));
                }
                for (NodeId u : view.in_neighbors(v)) {
                    auto out = view.out_neighbors(u);
                    EXPECT_TRUE(std::binary_search(out.begin(), out.end(), v));
                }
            }
            EXPECT_EQ(out_sum, view.num_edges());
            EXPECT_EQ(in_sum, view.num_edges());
        }
    }
}

TEST(HeteroGraph, WriteThenLoadRoundTrips) {
    TempDir dir;
    auto g = testing::random_graph(30, 3.0, 2, 7);
    write_graph(g, dir.file("g.tsv"));
    auto back = load_graph(dir.file("g.tsv"), g.num_nodes(), g.relation_names());
    EXPECT_EQ(g.edges(), back.edges());
}

TEST(ScanEdgeFile, RelationsInFirstAppearanceOrder) {
    TempDir dir;
    auto s = scan_edge_file(dir.write("e.tsv", "0 4 reply\n1 0 follow\n2 1 reply\n"));
    EXPECT_EQ(s.relations, (std::vector<std::string>{"reply", "follow"}));
    EXPECT_EQ(s.min_nodes, 5u);
}

TEST(LoadLabels, ValidSet) {
    TempDir dir;
    auto labels = load_labels(dir.write("l.tsv", "0\t1\n1\t0\n"), dir.write("s.txt", "[train]\n0\n[test]\n1\n"), 3);
    EXPECT_EQ(labels.label(0), Label::Bot);
    EXPECT_EQ(labels.label(1), Label::Human);
    EXPECT_EQ(labels.label(2), Label::Unlabeled);
    EXPECT_EQ(labels.train(), std::vector<NodeId>{0});
    EXPECT_EQ(labels.test(), std::vector<NodeId>{1});
    EXPECT_TRUE(labels.val().empty());
}

TEST(LoadLabels, RejectsOverlappingSplits) {
    TempDir dir;
    try {
        load_labels(dir.write("l.tsv", "0\t1\n"), dir.write("s.txt", "[train]\n0\n[test]\n0\n"), 2);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("overlapping splits"), std::string::npos);
    }
}

TEST(LoadLabels, RejectsUnlabeledSplitMember) {
    TempDir dir;
    try {
        load_labels(dir.write("l.tsv", "0\t1\n"), dir.write("s.txt", "[train]\n2\n"), 3);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("unlabeled split member"), std::string::npos);
    }
}

TEST(LoadLabels, RejectsLabeledIdOutOfRange) {
    TempDir dir;
    EXPECT_THROW(load_labels(dir.write("l.tsv", "7\t1\n"), dir.write("s.txt", ""), 3), Error);
}

TEST(LoadLabels, WriteThenLoadRoundTrips) {
    TempDir dir;
    LabelSet labels({Label::Bot, Label::Human, Label::Unlabeled, Label::Human}, {0}, {1}, {3});
    write_labels(labels, dir.file("l.tsv"), dir.file("s.txt"));
    auto back = load_labels(dir.file("l.tsv"), dir.file("s.txt"), 4);
    EXPECT_EQ(back.labels(), labels.labels());
    EXPECT_EQ(back.train(), labels.train());
    EXPECT_EQ(back.val(), labels.val());
    EXPECT_EQ(back.test(), labels.test());
}

TEST(Split, NamesRoundTrip) {
    for (auto s : {Split::Train, Split::Val, Split::Test}) EXPECT_EQ(parse_split(split_name(s)), s);
    EXPECT_THROW(parse_split("dev"), Error);
}

}  // namespace
}  // namespace bsg
