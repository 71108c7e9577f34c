#include "bsg/ppr.hpp"

#include "bsg/error.hpp"

#include <algorithm>
#include <set>

namespace bsg {

double PprVector::estimate_mass() const {
    double total = 0.0;
    for (const auto& [v, s] : estimates) total += s;
    return total;
}

double PprVector::residual_mass() const {
    double total = 0.0;
    for (const auto& [v, s] : residuals) total += s;
    return total;
}

double PprVector::estimate(NodeId v) const {
    auto it = std::lower_bound(estimates.begin(), estimates.end(), v,
                               [](const auto& e, NodeId id) { return e.first < id; });
    return it != estimates.end() && it->first == v ? it->second : 0.0;
}

Vector PprVector::dense(std::size_t n) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(n));
    for (const auto& [v, s] : estimates) out[v] = s;
    return out;
}

void PprWorkspace::resize(std::size_t n) {
    estimate_.assign(n, 0.0);
    residual_.assign(n, 0.0);
    touched_flag_.assign(n, false);
    touched_.clear();
}

PprVector approx_ppr(const RelationView& view, NodeId start, double alpha, double eps, Direction dir) {
    PprWorkspace ws(view.num_nodes());
    return approx_ppr(view, start, alpha, eps, dir, ws);
}

PprVector approx_ppr(const RelationView& view, NodeId start, double alpha, double eps, Direction dir,
                     PprWorkspace& ws, std::vector<double>* mass_trace) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("approx_ppr: alpha must lie in (0, 1)");
    if (!(eps > 0.0)) throw Error("approx_ppr: eps must be positive");
    const std::size_t n = view.num_nodes();
    if (start >= n) throw Error("approx_ppr: start node out of range");
    if (ws.residual_.size() != n) ws.resize(n);

    auto& est = ws.estimate_;
    auto& res = ws.residual_;
    auto touch = [&](NodeId u) {
        if (!ws.touched_flag_[u]) {
            ws.touched_flag_[u] = true;
            ws.touched_.push_back(u);
        }
    };
    auto threshold = [&](NodeId u) {
        return eps * static_cast<double>(std::max<std::size_t>(1, view.neighbors(u, dir).size()));
    };

    std::set<NodeId> active;
    res[start] = 1.0;
    touch(start);
    active.insert(start);

    PprVector out;
    out.start = start;
    out.alpha = alpha;
    out.eps = eps;
    double est_mass = 0.0;

    while (!active.empty()) {
        const NodeId u = *active.begin();
        active.erase(active.begin());
        const double r = res[u];
        res[u] = 0.0;
        est[u] += alpha * r;
        est_mass += alpha * r;
        ++out.pushes;

        const double spread = (1.0 - alpha) * r;
        auto nbrs = view.neighbors(u, dir);
        if (nbrs.empty()) {
            res[start] += spread;
            if (res[start] >= threshold(start)) active.insert(start);
        } else {
            const double share = spread / static_cast<double>(nbrs.size());
            for (NodeId w : nbrs) {
                res[w] += share;
                touch(w);
                if (res[w] >= threshold(w)) active.insert(w);
            }
        }
        if (mass_trace) {
            double res_mass = 0.0;
            for (NodeId t : ws.touched_) res_mass += res[t];
            mass_trace->push_back(est_mass + res_mass);
        }
    }

    std::sort(ws.touched_.begin(), ws.touched_.end());
    for (NodeId t : ws.touched_) {
        if (est[t] > 0.0) out.estimates.emplace_back(t, est[t]);
        if (res[t] > 0.0) out.residuals.emplace_back(t, res[t]);
        est[t] = 0.0;
        res[t] = 0.0;
        ws.touched_flag_[t] = false;
    }
    ws.touched_.clear();
    return out;
}

Vector exact_ppr_oracle(const RelationView& view, NodeId start, double alpha, Direction dir) {
    const std::size_t n = view.num_nodes();
    if (n > kDenseOracleLimit) {
        throw Error("exact_ppr_oracle: n=" + std::to_string(n) + " exceeds dense limit " +
                    std::to_string(kDenseOracleLimit));
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("exact_ppr_oracle: alpha must lie in (0, 1)");
    if (start >= n) throw Error("exact_ppr_oracle: start node out of range");

    // M = I - (1 - alpha) P^T, column u of P^T is the walk distribution out of u.
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (NodeId u = 0; u < n; ++u) {
        auto nbrs = view.neighbors(u, dir);
        if (nbrs.empty()) {
            m(start, u) -= 1.0 - alpha;
        } else {
            const double w = (1.0 - alpha) / static_cast<double>(nbrs.size());
            for (NodeId v : nbrs) m(v, u) -= w;
        }
    }
    Vector rhs = Vector::Zero(static_cast<Eigen::Index>(n));
    rhs[start] = alpha;
    return m.partialPivLu().solve(rhs);
}

SparseScores ranked(const PprVector& ppr) {
    SparseScores out = ppr.estimates;
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
}

}  // namespace bsg
