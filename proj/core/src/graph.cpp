#include "bsg/graph.hpp"

#include "bsg/error.hpp"
#include "text.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

namespace bsg {

namespace {

Csr build_csr(std::size_t n, std::vector<std::pair<NodeId, NodeId>>& pairs) {
    std::sort(pairs.begin(), pairs.end());
    Csr csr;
    csr.offsets.assign(n + 1, 0);
    csr.targets.reserve(pairs.size());
    for (const auto& [from, to] : pairs) {
        ++csr.offsets[from + 1];
        csr.targets.push_back(to);
    }
    for (std::size_t i = 0; i < n; ++i) csr.offsets[i + 1] += csr.offsets[i];
    return csr;
}

}  // namespace

HeteroGraph::HeteroGraph(std::size_t n, std::vector<std::string> relation_names, std::span<const Edge> edges)
    : n_(n), names_(std::move(relation_names)) {
    std::unordered_set<std::string> seen;
    for (const auto& name : names_) {
        if (!seen.insert(name).second) throw Error("duplicate relation name '" + name + "'");
    }
    std::vector<std::vector<std::pair<NodeId, NodeId>>> fwd(names_.size());
    for (const auto& e : edges) {
        if (e.src >= n || e.dst >= n) {
            throw Error("node id out of range: edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                        " with n=" + std::to_string(n));
        }
        if (e.relation >= names_.size()) throw Error("unknown relation index " + std::to_string(e.relation));
        fwd[e.relation].emplace_back(e.src, e.dst);
    }
    out_.reserve(names_.size());
    in_.reserve(names_.size());
    for (auto& pairs : fwd) {
        std::sort(pairs.begin(), pairs.end());
        pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
        std::vector<std::pair<NodeId, NodeId>> rev;
        rev.reserve(pairs.size());
        for (const auto& [s, d] : pairs) rev.emplace_back(d, s);
        out_.push_back(build_csr(n, pairs));
        in_.push_back(build_csr(n, rev));
    }
}

std::optional<std::size_t> HeteroGraph::find_relation(std::string_view name) const {
    for (std::size_t r = 0; r < names_.size(); ++r) {
        if (names_[r] == name) return r;
    }
    return std::nullopt;
}

std::size_t HeteroGraph::total_edges() const {
    std::size_t total = 0;
    for (const auto& csr : out_) total += csr.targets.size();
    return total;
}

RelationView HeteroGraph::relation(std::size_t r) const {
    if (r >= names_.size()) throw Error("unknown relation index " + std::to_string(r));
    return RelationView(*this, r);
}

RelationView HeteroGraph::relation(std::string_view name) const {
    auto r = find_relation(name);
    if (!r) throw Error("unknown relation '" + std::string(name) + "'");
    return RelationView(*this, *r);
}

std::vector<Edge> HeteroGraph::edges() const {
    std::vector<Edge> all;
    all.reserve(total_edges());
    for (std::size_t r = 0; r < names_.size(); ++r) {
        for (NodeId v = 0; v < n_; ++v) {
            for (NodeId u : out_[r].row(v)) all.push_back({v, u, r});
        }
    }
    return all;
}

bool RelationView::has_edge(NodeId src, NodeId dst) const {
    auto row = out_neighbors(src);
    return std::binary_search(row.begin(), row.end(), dst);
}

HeteroGraph load_graph(const std::string& path, std::size_t n, const std::vector<std::string>& relation_names) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open edge file '" + path + "'");
    std::vector<Edge> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto fields = detail::split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() != 3) throw ParseError(path, lineno, "malformed edge row (expected src, dst, relation)");
        auto src = detail::parse_uint(fields[0]);
        auto dst = detail::parse_uint(fields[1]);
        if (!src || !dst) throw ParseError(path, lineno, "malformed node id");
        if (*src >= n || *dst >= n) throw ParseError(path, lineno, "node id out of range");
        auto it = std::find(relation_names.begin(), relation_names.end(), fields[2]);
        if (it == relation_names.end()) {
            throw ParseError(path, lineno, "unknown relation '" + std::string(fields[2]) + "'");
        }
        edges.push_back({static_cast<NodeId>(*src), static_cast<NodeId>(*dst),
                         static_cast<std::size_t>(it - relation_names.begin())});
    }
    return HeteroGraph(n, relation_names, edges);
}

EdgeFileSummary scan_edge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open edge file '" + path + "'");
    EdgeFileSummary summary;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto fields = detail::split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() != 3) throw ParseError(path, lineno, "malformed edge row (expected src, dst, relation)");
        auto src = detail::parse_uint(fields[0]);
        auto dst = detail::parse_uint(fields[1]);
        if (!src || !dst) throw ParseError(path, lineno, "malformed node id");
        summary.min_nodes = std::max<std::size_t>(summary.min_nodes, std::max(*src, *dst) + 1);
        std::string rel(fields[2]);
        if (std::find(summary.relations.begin(), summary.relations.end(), rel) == summary.relations.end()) {
            summary.relations.push_back(std::move(rel));
        }
    }
    return summary;
}

void write_graph(const HeteroGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write edge file '" + path + "'");
    for (const auto& e : g.edges()) {
        out << e.src << '\t' << e.dst << '\t' << g.relation_names()[e.relation] << '\n';
    }
}

// ---------------------------------------------------------------------------

std::string_view split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    throw Error("unknown split '" + std::string(name) + "'");
}

LabelSet::LabelSet(std::vector<Label> labels, std::vector<NodeId> train, std::vector<NodeId> val,
                   std::vector<NodeId> test)
    : labels_(std::move(labels)), train_(std::move(train)), val_(std::move(val)), test_(std::move(test)) {
    std::vector<std::int8_t> owner(labels_.size(), -1);
    int tag = 0;
    for (const auto* mask : {&train_, &val_, &test_}) {
        for (NodeId v : *mask) {
            if (v >= labels_.size()) throw Error("split member " + std::to_string(v) + " out of range");
            if (owner[v] != -1) throw Error("overlapping splits: node " + std::to_string(v));
            if (labels_[v] == Label::Unlabeled) throw Error("unlabeled split member: node " + std::to_string(v));
            owner[v] = static_cast<std::int8_t>(tag);
        }
        ++tag;
    }
}

const std::vector<NodeId>& LabelSet::split(Split s) const {
    switch (s) {
        case Split::Train: return train_;
        case Split::Val: return val_;
        case Split::Test: return test_;
    }
    return test_;
}

LabelSet load_labels(const std::string& labels_path, const std::string& splits_path, std::size_t n) {
    std::vector<Label> labels(n, Label::Unlabeled);
    {
        std::ifstream in(labels_path);
        if (!in) throw Error("cannot open labels file '" + labels_path + "'");
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto fields = detail::split_fields(line);
            if (fields.empty()) continue;
            if (fields.size() != 2) throw ParseError(labels_path, lineno, "malformed label row");
            auto id = detail::parse_uint(fields[0]);
            if (!id) throw ParseError(labels_path, lineno, "malformed node id");
            if (*id >= n) throw ParseError(labels_path, lineno, "labeled id out of range");
            if (fields[1] == "0") {
                labels[*id] = Label::Human;
            } else if (fields[1] == "1") {
                labels[*id] = Label::Bot;
            } else {
                throw ParseError(labels_path, lineno, "label must be 0 or 1");
            }
        }
    }
    std::vector<NodeId> masks[3];
    if (!splits_path.empty()) {
        std::ifstream in(splits_path);
        if (!in) throw Error("cannot open splits file '" + splits_path + "'");
        std::string line;
        std::size_t lineno = 0;
        int section = -1;
        while (std::getline(in, line)) {
            ++lineno;
            auto fields = detail::split_fields(line);
            if (fields.empty()) continue;
            if (fields.size() != 1) throw ParseError(splits_path, lineno, "expected one token per line");
            const auto tok = fields[0];
            if (tok == "[train]") {
                section = 0;
            } else if (tok == "[val]") {
                section = 1;
            } else if (tok == "[test]") {
                section = 2;
            } else {
                if (section < 0) throw ParseError(splits_path, lineno, "node id before any section header");
                auto id = detail::parse_uint(tok);
                if (!id) throw ParseError(splits_path, lineno, "malformed node id");
                if (*id >= n) throw ParseError(splits_path, lineno, "split id out of range");
                masks[section].push_back(static_cast<NodeId>(*id));
            }
        }
    }
    return LabelSet(std::move(labels), std::move(masks[0]), std::move(masks[1]), std::move(masks[2]));
}

void write_labels(const LabelSet& labels, const std::string& labels_path, const std::string& splits_path) {
    {
        std::ofstream out(labels_path);
        if (!out) throw Error("cannot write labels file '" + labels_path + "'");
        for (NodeId v = 0; v < labels.num_nodes(); ++v) {
            if (labels.is_labeled(v)) out << v << '\t' << static_cast<int>(labels.label(v)) << '\n';
        }
    }
    std::ofstream out(splits_path);
    if (!out) throw Error("cannot write splits file '" + splits_path + "'");
    for (Split s : {Split::Train, Split::Val, Split::Test}) {
        out << '[' << split_name(s) << "]\n";
        for (NodeId v : labels.split(s)) out << v << '\n';
    }
}

}  // namespace bsg
