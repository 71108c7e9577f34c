#pragma once

#include "bsg/features.hpp"
#include "bsg/graph.hpp"
#include "bsg/matrix.hpp"
#include "bsg/ppr.hpp"
#include "bsg/preclassifier.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bsg {

using LocalId = std::uint32_t;
using LocalEdge = std::pair<LocalId, LocalId>;

/// One relation's share of a biased subgraph.
struct RelationSelection {
    std::vector<NodeId> selected;  // global ids, best first; never the start node
    std::vector<double> scores;    // combined score of each selected node
    std::vector<LocalEdge> edges;  // sorted, in subgraph-local ids

    friend bool operator==(const RelationSelection&, const RelationSelection&) = default;
};

/// Start node plus its per-relation top-k selections. Local id 0 is always
/// the start node; `nodes` maps local ids to global ids.
struct BiasedSubgraph {
    NodeId start = 0;
    std::size_t k = 0;
    std::vector<NodeId> nodes;
    std::vector<RelationSelection> relations;

    /// Selected nodes across all relations, without the start node.
    std::vector<NodeId> selected_union() const;

    friend bool operator==(const BiasedSubgraph&, const BiasedSubgraph&) = default;
};

struct SamplerConfig {
    std::size_t k = 32;
    double alpha = 0.15;
    double eps = 1e-4;
    double lambda = 0.5;
    Direction direction = Direction::Out;
};

/// p_j = lambda * ppr_j + (1 - lambda) * sim_j, aligned with the inputs.
std::vector<double> combined_scores(std::span<const double> ppr, std::span<const double> sims, double lambda);

struct Candidate {
    NodeId node;
    double score;
    double ppr;
};

/// Indices of the k best candidates: higher score, then higher PPR, then
/// lower node id.
std::vector<std::size_t> select_top_k(std::span<const Candidate> candidates, std::size_t k);

/// Pairwise similarity against precomputed pre-classifier hidden rows.
class SimilarityIndex {
public:
    SimilarityIndex(Matrix hidden);
    SimilarityIndex(const MlpModel& model, const FeatureMatrix& features,
                    HiddenMode mode = HiddenMode::PreActivation);

    double similarity(NodeId a, NodeId b) const;
    std::size_t num_nodes() const { return static_cast<std::size_t>(hidden_.rows()); }

private:
    Matrix hidden_;
    Vector norms_;
};

/// Per relation: push PPR from v, score its support as λ·π + (1−λ)·s against v's
/// pre-classifier similarity, keep the top k (v excluded), retain original
/// edges among {v} and the kept nodes, and add a star edge v -> u for every
/// kept u.
BiasedSubgraph build_biased_subgraph(const HeteroGraph& g, const SimilarityIndex& sims, NodeId v,
                                     const SamplerConfig& cfg, PprWorkspace& ws);
BiasedSubgraph build_biased_subgraph(const HeteroGraph& g, const SimilarityIndex& sims, NodeId v,
                                     const SamplerConfig& cfg);

/// Builds subgraphs for `starts` on up to `workers` threads; output order
/// follows `starts`.
std::vector<BiasedSubgraph> build_biased_subgraphs(const HeteroGraph& g, const SimilarityIndex& sims,
                                                   std::span<const NodeId> starts, const SamplerConfig& cfg,
                                                   std::size_t workers = 1);

// ---------------------------------------------------------------------------
// Subgraph cache

struct SubgraphCache {
    std::vector<std::string> relation_names;
    std::vector<BiasedSubgraph> subgraphs;

    /// Index into `subgraphs` per global node id (or npos), sized to `n`.
    std::vector<std::size_t> index(std::size_t n) const;
};

inline constexpr std::size_t kNoSubgraph = static_cast<std::size_t>(-1);

/// Binary layout (little endian):
///   "BSGSUB01", u32 version, u32 R, R x (u32 len, bytes), u64 record count
///   record: u64 v, u32 k, u32 R, u32 m, m x u32 global id,
///           R x (u32 s, s x u32 selected, s x f64 score, u32 e, e x (u32, u32))
void write_subgraph_cache(const std::string& path, const std::vector<std::string>& relation_names,
                          std::span<const BiasedSubgraph> subgraphs);
SubgraphCache read_subgraph_cache(const std::string& path);

}  // namespace bsg
