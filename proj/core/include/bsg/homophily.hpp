#pragma once

#include "bsg/graph.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bsg {

struct BiasedSubgraph;

/// Fraction of the labeled entries of `neighbors` whose label equals v's.
/// Unlabeled neighbors are ignored; nullopt when none are labeled. Throws if
/// v itself is unlabeled.
std::optional<double> node_homophily(std::span<const NodeId> neighbors, const LabelSet& labels, NodeId v);

/// Union over relations of in- and out-neighbors, without v, sorted.
std::vector<NodeId> undirected_neighbors(const HeteroGraph& g, NodeId v);

/// Mean of the defined node homophilies over labeled nodes.
double graph_homophily(const HeteroGraph& g, const LabelSet& labels);

/// Mean over labeled start nodes of homophily within their selected set.
double graph_homophily(std::span<const BiasedSubgraph> subgraphs, const LabelSet& labels);

struct HomophilyReport {
    std::vector<std::pair<NodeId, double>> per_node;  // defined values only
    double h = 0.0;
    /// Counts over [0,.25), [.25,.5), [.5,.75), [.75,1].
    std::array<std::size_t, 4> histogram{};
    std::optional<double> bot_mean;
    std::optional<double> human_mean;
};

HomophilyReport homophily_report(const HeteroGraph& g, const LabelSet& labels);
HomophilyReport homophily_report(std::span<const BiasedSubgraph> subgraphs, const LabelSet& labels);

std::size_t histogram_bin(double h);

/// JSON object with h, per-class means, histogram counts and defined count.
std::string to_json(const HomophilyReport& report);

}  // namespace bsg
