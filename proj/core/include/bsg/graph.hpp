#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bsg {

using NodeId = std::uint32_t;

struct Edge {
    NodeId src;
    NodeId dst;
    std::size_t relation;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Compressed adjacency for one relation, stored twice (by source and by
/// destination) so both neighbor directions are O(output).
struct Csr {
    std::vector<std::size_t> offsets;  // n + 1 entries, non-decreasing
    std::vector<NodeId> targets;       // sorted within each row

    std::span<const NodeId> row(NodeId v) const {
        return {targets.data() + offsets[v], targets.data() + offsets[v + 1]};
    }
};

enum class Direction { Out, In };

class HeteroGraph;

/// Read-only window onto one relation of a HeteroGraph. Cheap to copy; the
/// parent graph must outlive it.
class RelationView {
public:
    std::size_t num_nodes() const noexcept;
    std::size_t num_edges() const noexcept;
    const std::string& name() const noexcept;
    std::size_t index() const noexcept { return relation_; }

    std::span<const NodeId> out_neighbors(NodeId v) const;
    std::span<const NodeId> in_neighbors(NodeId v) const;
    std::span<const NodeId> neighbors(NodeId v, Direction dir) const {
        return dir == Direction::Out ? out_neighbors(v) : in_neighbors(v);
    }

    std::size_t degree(NodeId v) const { return out_neighbors(v).size(); }
    std::size_t in_degree(NodeId v) const { return in_neighbors(v).size(); }
    bool has_edge(NodeId src, NodeId dst) const;

private:
    friend class HeteroGraph;
    RelationView(const HeteroGraph& g, std::size_t r) : graph_(&g), relation_(r) {}

    const HeteroGraph* graph_;
    std::size_t relation_;
};

/// Immutable directed multi-relation graph over dense node ids [0, n).
/// Edges are deduplicated per relation; self-loops are kept.
class HeteroGraph {
public:
    HeteroGraph(std::size_t n, std::vector<std::string> relation_names, std::span<const Edge> edges);

    std::size_t num_nodes() const noexcept { return n_; }
    std::size_t num_relations() const noexcept { return names_.size(); }
    const std::vector<std::string>& relation_names() const noexcept { return names_; }
    std::optional<std::size_t> find_relation(std::string_view name) const;

    std::size_t num_edges(std::size_t r) const { return out_[r].targets.size(); }
    std::size_t total_edges() const;

    RelationView relation(std::size_t r) const;
    RelationView relation(std::string_view name) const;

    /// Every edge, relation-major then by (src, dst).
    std::vector<Edge> edges() const;

private:
    friend class RelationView;

    std::size_t n_;
    std::vector<std::string> names_;
    std::vector<Csr> out_;
    std::vector<Csr> in_;
};

inline std::size_t RelationView::num_nodes() const noexcept { return graph_->n_; }
inline std::size_t RelationView::num_edges() const noexcept { return graph_->num_edges(relation_); }
inline const std::string& RelationView::name() const noexcept { return graph_->names_[relation_]; }
inline std::span<const NodeId> RelationView::out_neighbors(NodeId v) const { return graph_->out_[relation_].row(v); }
inline std::span<const NodeId> RelationView::in_neighbors(NodeId v) const { return graph_->in_[relation_].row(v); }

/// Reads `src<TAB>dst<TAB>relation` rows. Every relation string must be in
/// `relation_names`, which also fixes relation order.
HeteroGraph load_graph(const std::string& path, std::size_t n, const std::vector<std::string>& relation_names);

/// Relation names in order of first appearance and the largest node id + 1.
struct EdgeFileSummary {
    std::vector<std::string> relations;
    std::size_t min_nodes = 0;
};
EdgeFileSummary scan_edge_file(const std::string& path);

void write_graph(const HeteroGraph& g, const std::string& path);

// ---------------------------------------------------------------------------
// Labels and splits

enum class Label : std::int8_t { Human = 0, Bot = 1, Unlabeled = -1 };

enum class Split { Train, Val, Test };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

class LabelSet {
public:
    LabelSet(std::vector<Label> labels, std::vector<NodeId> train, std::vector<NodeId> val, std::vector<NodeId> test);

    std::size_t num_nodes() const noexcept { return labels_.size(); }
    Label label(NodeId v) const { return labels_[v]; }
    bool is_labeled(NodeId v) const { return labels_[v] != Label::Unlabeled; }
    const std::vector<Label>& labels() const noexcept { return labels_; }

    const std::vector<NodeId>& train() const noexcept { return train_; }
    const std::vector<NodeId>& val() const noexcept { return val_; }
    const std::vector<NodeId>& test() const noexcept { return test_; }
    const std::vector<NodeId>& split(Split s) const;

private:
    std::vector<Label> labels_;
    std::vector<NodeId> train_;
    std::vector<NodeId> val_;
    std::vector<NodeId> test_;
};

/// An empty `splits_path` yields empty masks.
LabelSet load_labels(const std::string& labels_path, const std::string& splits_path, std::size_t n);
void write_labels(const LabelSet& labels, const std::string& labels_path, const std::string& splits_path);

}  // namespace bsg
