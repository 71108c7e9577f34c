#pragma once

#include "bsg/graph.hpp"
#include "bsg/matrix.hpp"

#include <utility>
#include <vector>

namespace bsg {

using SparseScores = std::vector<std::pair<NodeId, double>>;  // sorted by node id

struct PprVector {
    NodeId start = 0;
    double alpha = 0.0;
    double eps = 0.0;
    SparseScores estimates;  // nonzero estimates only
    SparseScores residuals;  // nonzero residuals only
    std::size_t pushes = 0;

    double estimate_mass() const;
    double residual_mass() const;
    double estimate(NodeId v) const;
    /// Dense copy of the estimates.
    Vector dense(std::size_t n) const;
};

/// Scratch space reused across approx_ppr calls on graphs of the same size.
class PprWorkspace {
public:
    explicit PprWorkspace(std::size_t n = 0) { resize(n); }
    void resize(std::size_t n);

private:
    friend PprVector approx_ppr(const RelationView&, NodeId, double, double, Direction, PprWorkspace&,
                                std::vector<double>*);
    std::vector<double> estimate_;
    std::vector<double> residual_;
    std::vector<bool> touched_flag_;
    std::vector<NodeId> touched_;
};

/// Forward-push approximate Personalized PageRank from `start`.
///
/// Starts with all residual on `start`. While some node u holds residual
/// r(u) >= eps * max(1, deg(u)), the lowest such node id is pushed: alpha*r(u)
/// moves to its estimate and (1-alpha)*r(u) is split evenly over its
/// neighbors in direction `dir`; a node without neighbors returns that share
/// to `start`. If `mass_trace` is set, the total estimate+residual mass is
/// appended after every push.
PprVector approx_ppr(const RelationView& view, NodeId start, double alpha, double eps,
                     Direction dir = Direction::Out);
PprVector approx_ppr(const RelationView& view, NodeId start, double alpha, double eps, Direction dir,
                     PprWorkspace& ws, std::vector<double>* mass_trace = nullptr);

inline constexpr std::size_t kDenseOracleLimit = 2000;

/// Dense solve of pi = alpha (I - (1-alpha) P^T)^{-1} e_start where P is the
/// row-stochastic walk matrix over `dir` neighbors and rows of nodes without
/// neighbors point back at `start`. Limited to kDenseOracleLimit nodes.
Vector exact_ppr_oracle(const RelationView& view, NodeId start, double alpha, Direction dir = Direction::Out);

/// Estimates sorted by descending score, ties by node id.
SparseScores ranked(const PprVector& ppr);

}  // namespace bsg
