#include "bsg/homophily.hpp"

#include "bsg/error.hpp"
#include "bsg/sampler.hpp"

#include <json.hpp>

#include <algorithm>

namespace bsg {

std::optional<double> node_homophily(std::span<const NodeId> neighbors, const LabelSet& labels, NodeId v) {
    if (!labels.is_labeled(v)) throw Error("node_homophily: node " + std::to_string(v) + " is unlabeled");
    const Label own = labels.label(v);
    std::size_t labeled = 0;
    std::size_t same = 0;
    for (NodeId u : neighbors) {
        if (!labels.is_labeled(u)) continue;
        ++labeled;
        same += labels.label(u) == own;
    }
    if (labeled == 0) return std::nullopt;
    return static_cast<double>(same) / static_cast<double>(labeled);
}

std::vector<NodeId> undirected_neighbors(const HeteroGraph& g, NodeId v) {
    std::vector<NodeId> out;
    for (std::size_t r = 0; r < g.num_relations(); ++r) {
        const auto view = g.relation(r);
        for (NodeId u : view.out_neighbors(v)) out.push_back(u);
        for (NodeId u : view.in_neighbors(v)) out.push_back(u);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    out.erase(std::remove(out.begin(), out.end(), v), out.end());
    return out;
}

std::size_t histogram_bin(double h) {
    if (h < 0.25) return 0;
    if (h < 0.5) return 1;
    if (h < 0.75) return 2;
    return 3;
}

namespace {

HomophilyReport summarize(std::vector<std::pair<NodeId, double>> per_node, const LabelSet& labels) {
    if (per_node.empty()) throw Error("homophily: no node has a labeled neighbor");
    HomophilyReport report;
    double total = 0.0;
    double bot = 0.0, human = 0.0;
    std::size_t n_bot = 0, n_human = 0;
    for (const auto& [v, h] : per_node) {
        total += h;
        ++report.histogram[histogram_bin(h)];
        if (labels.label(v) == Label::Bot) {
            bot += h;
            ++n_bot;
        } else {
            human += h;
            ++n_human;
        }
    }
    report.h = total / static_cast<double>(per_node.size());
    if (n_bot) report.bot_mean = bot / static_cast<double>(n_bot);
    if (n_human) report.human_mean = human / static_cast<double>(n_human);
    report.per_node = std::move(per_node);
    return report;
}

}  // namespace

HomophilyReport homophily_report(const HeteroGraph& g, const LabelSet& labels) {
    if (labels.num_nodes() != g.num_nodes()) throw Error("homophily_report: label count does not match graph");
    std::vector<std::pair<NodeId, double>> per_node;
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        if (!labels.is_labeled(v)) continue;
        const auto nbrs = undirected_neighbors(g, v);
        if (auto h = node_homophily(nbrs, labels, v)) per_node.emplace_back(v, *h);
    }
    return summarize(std::move(per_node), labels);
}

HomophilyReport homophily_report(std::span<const BiasedSubgraph> subgraphs, const LabelSet& labels) {
    std::vector<std::pair<NodeId, double>> per_node;
    for (const auto& sub : subgraphs) {
        if (!labels.is_labeled(sub.start)) continue;
        const auto selected = sub.selected_union();
        if (auto h = node_homophily(selected, labels, sub.start)) per_node.emplace_back(sub.start, *h);
    }
    return summarize(std::move(per_node), labels);
}

double graph_homophily(const HeteroGraph& g, const LabelSet& labels) {
    return homophily_report(g, labels).h;
}

double graph_homophily(std::span<const BiasedSubgraph> subgraphs, const LabelSet& labels) {
    return homophily_report(subgraphs, labels).h;
}

std::string to_json(const HomophilyReport& report) {
    nlohmann::json j;
    j["h"] = report.h;
    j["homophilic"] = report.h > 0.5;
    j["defined"] = report.per_node.size();
    j["bot_mean"] = report.bot_mean ? nlohmann::json(*report.bot_mean) : nlohmann::json(nullptr);
    j["human_mean"] = report.human_mean ? nlohmann::json(*report.human_mean) : nlohmann::json(nullptr);
    j["histogram"] = {{"bins", {"[0,0.25)", "[0.25,0.5)", "[0.5,0.75)", "[0.75,1]"}},
                      {"counts", report.histogram}};
    return j.dump(2);
}

}  // namespace bsg
