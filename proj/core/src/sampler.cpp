#include "bsg/sampler.hpp"

#include "binary_io.hpp"
#include "bsg/error.hpp"

#include <algorithm>
#include <fstream>
#include <thread>
#include <unordered_map>

namespace bsg {

namespace {

constexpr std::string_view kCacheMagic = "BSGSUB01";
constexpr std::uint32_t kCacheVersion = 1;

}  // namespace

std::vector<NodeId> BiasedSubgraph::selected_union() const {
    std::vector<NodeId> out;
    for (const auto& rel : relations) out.insert(out.end(), rel.selected.begin(), rel.selected.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<double> combined_scores(std::span<const double> ppr, std::span<const double> sims, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("combined_scores: lambda must lie in [0, 1]");
    if (ppr.size() != sims.size()) throw Error("combined_scores: score vectors differ in length");
    std::vector<double> out(ppr.size());
    for (std::size_t i = 0; i < ppr.size(); ++i) out[i] = lambda * ppr[i] + (1.0 - lambda) * sims[i];
    return out;
}

std::vector<std::size_t> select_top_k(std::span<const Candidate> candidates, std::size_t k) {
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto better = [&](std::size_t a, std::size_t b) {
        const auto& ca = candidates[a];
        const auto& cb = candidates[b];
        if (ca.score != cb.score) return ca.score > cb.score;
        if (ca.ppr != cb.ppr) return ca.ppr > cb.ppr;
        return ca.node < cb.node;
    };
    const auto keep = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), better);
    order.resize(keep);
    return order;
}

SimilarityIndex::SimilarityIndex(Matrix hidden) : hidden_(std::move(hidden)) {
    norms_ = hidden_.rowwise().norm();
}

SimilarityIndex::SimilarityIndex(const MlpModel& model, const FeatureMatrix& features, HiddenMode mode)
    : SimilarityIndex(hidden_matrix(model, features.values, mode)) {}

double SimilarityIndex::similarity(NodeId a, NodeId b) const {
    const double na = norms_[a];
    const double nb = norms_[b];
    double cos = 0.0;
    if (na > 0.0 && nb > 0.0) cos = std::clamp(hidden_.row(a).dot(hidden_.row(b)) / (na * nb), -1.0, 1.0);
    return 0.5 * (1.0 + cos);
}

BiasedSubgraph build_biased_subgraph(const HeteroGraph& g, const SimilarityIndex& sims, NodeId v,
                                     const SamplerConfig& cfg, PprWorkspace& ws) {
    if (v >= g.num_nodes()) throw Error("build_biased_subgraph: start node out of range");
    if (cfg.k < 1) throw Error("build_biased_subgraph: k must be at least 1");
    if (sims.num_nodes() != g.num_nodes()) throw Error("build_biased_subgraph: similarity index size mismatch");

    BiasedSubgraph sub;
    sub.start = v;
    sub.k = cfg.k;
    sub.nodes.push_back(v);
    std::unordered_map<NodeId, LocalId> local{{v, 0}};
    auto local_of = [&](NodeId u) {
        auto [it, inserted] = local.try_emplace(u, static_cast<LocalId>(sub.nodes.size()));
        if (inserted) sub.nodes.push_back(u);
        return it->second;
    };

    for (std::size_t r = 0; r < g.num_relations(); ++r) {
        const auto view = g.relation(r);
        const auto ppr = approx_ppr(view, v, cfg.alpha, cfg.eps, cfg.direction, ws);

        std::vector<double> pi;
        std::vector<double> s;
        std::vector<NodeId> ids;
        for (const auto& [u, score] : ppr.estimates) {
            if (u == v) continue;
            ids.push_back(u);
            pi.push_back(score);
            s.push_back(cfg.lambda < 1.0 ? sims.similarity(v, u) : 0.0);
        }
        const auto p = combined_scores(pi, s, cfg.lambda);
        std::vector<Candidate> cands(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) cands[i] = {ids[i], p[i], pi[i]};

        RelationSelection sel;
        for (auto idx : select_top_k(cands, cfg.k)) {
            sel.selected.push_back(cands[idx].node);
            sel.scores.push_back(cands[idx].score);
        }

        // Members are v plus the selection; keep original edges among them.
        std::vector<NodeId> members = sel.selected;
        members.push_back(v);
        std::sort(members.begin(), members.end());
        for (NodeId a : members) {
            for (NodeId b : view.out_neighbors(a)) {
                if (std::binary_search(members.begin(), members.end(), b)) {
                    sel.edges.emplace_back(local_of(a), local_of(b));
                }
            }
        }
        for (NodeId u : sel.selected) sel.edges.emplace_back(0, local_of(u));
        std::sort(sel.edges.begin(), sel.edges.end());
        sel.edges.erase(std::unique(sel.edges.begin(), sel.edges.end()), sel.edges.end());
        sub.relations.push_back(std::move(sel));
    }
    return sub;
}

BiasedSubgraph build_biased_subgraph(const HeteroGraph& g, const SimilarityIndex& sims, NodeId v,
                                     const SamplerConfig& cfg) {
    PprWorkspace ws(g.num_nodes());
    return build_biased_subgraph(g, sims, v, cfg, ws);
}

std::vector<BiasedSubgraph> build_biased_subgraphs(const HeteroGraph& g, const SimilarityIndex& sims,
                                                   std::span<const NodeId> starts, const SamplerConfig& cfg,
                                                   std::size_t workers) {
    std::vector<BiasedSubgraph> out(starts.size());
    workers = std::max<std::size_t>(1, std::min(workers, starts.size()));
    auto run = [&](std::size_t begin, std::size_t end) {
        PprWorkspace ws(g.num_nodes());
        for (std::size_t i = begin; i < end; ++i) out[i] = build_biased_subgraph(g, sims, starts[i], cfg, ws);
    };
    if (workers == 1) {
        run(0, starts.size());
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (starts.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const auto begin = std::min(starts.size(), w * chunk);
        const auto end = std::min(starts.size(), begin + chunk);
        pool.emplace_back([&, w, begin, end] {
            try {
                run(begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> SubgraphCache::index(std::size_t n) const {
    std::vector<std::size_t> idx(n, kNoSubgraph);
    for (std::size_t i = 0; i < subgraphs.size(); ++i) {
        if (subgraphs[i].start < n) idx[subgraphs[i].start] = i;
    }
    return idx;
}

void write_subgraph_cache(const std::string& path, const std::vector<std::string>& relation_names,
                          std::span<const BiasedSubgraph> subgraphs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write subgraph cache '" + path + "'");
    out.write(kCacheMagic.data(), kCacheMagic.size());
    detail::put<std::uint32_t>(out, kCacheVersion);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(relation_names.size()));
    for (const auto& name : relation_names) detail::put_string(out, name);
    detail::put<std::uint64_t>(out, subgraphs.size());
    for (const auto& sub : subgraphs) {
        if (sub.relations.size() != relation_names.size()) {
            throw Error("write_subgraph_cache: subgraph relation count does not match header");
        }
        detail::put<std::uint64_t>(out, sub.start);
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(sub.k));
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(sub.relations.size()));
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(sub.nodes.size()));
        for (NodeId u : sub.nodes) detail::put<std::uint32_t>(out, u);
        for (const auto& rel : sub.relations) {
            detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(rel.selected.size()));
            for (NodeId u : rel.selected) detail::put<std::uint32_t>(out, u);
            detail::put_doubles(out, rel.scores.data(), rel.scores.size());
            detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(rel.edges.size()));
            for (const auto& [a, b] : rel.edges) {
                detail::put<std::uint32_t>(out, a);
                detail::put<std::uint32_t>(out, b);
            }
        }
    }
    if (!out) throw Error("failed writing subgraph cache '" + path + "'");
}

SubgraphCache read_subgraph_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open subgraph cache '" + path + "'");
    detail::expect_magic(in, kCacheMagic, path);
    const auto version = detail::get<std::uint32_t>(in, path);
    if (version != kCacheVersion) throw Error(path + ": unsupported cache version " + std::to_string(version));
    SubgraphCache cache;
    const auto r = detail::get<std::uint32_t>(in, path);
    for (std::uint32_t i = 0; i < r; ++i) cache.relation_names.push_back(detail::get_string(in, path));
    const auto count = detail::get<std::uint64_t>(in, path);
    cache.subgraphs.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        BiasedSubgraph sub;
        sub.start = static_cast<NodeId>(detail::get<std::uint64_t>(in, path));
        sub.k = detail::get<std::uint32_t>(in, path);
        const auto rr = detail::get<std::uint32_t>(in, path);
        if (rr != r) throw Error(path + ": record relation count disagrees with header");
        const auto m = detail::get<std::uint32_t>(in, path);
        sub.nodes.resize(m);
        for (auto& u : sub.nodes) u = detail::get<std::uint32_t>(in, path);
        if (m == 0 || sub.nodes[0] != sub.start) throw Error(path + ": record does not start with its root");
        sub.relations.resize(rr);
        for (auto& rel : sub.relations) {
            const auto s = detail::get<std::uint32_t>(in, path);
            rel.selected.resize(s);
            for (auto& u : rel.selected) u = detail::get<std::uint32_t>(in, path);
            rel.scores.resize(s);
            detail::get_doubles(in, rel.scores.data(), s, path);
            const auto e = detail::get<std::uint32_t>(in, path);
            rel.edges.resize(e);
            for (auto& [a, b] : rel.edges) {
                a = detail::get<std::uint32_t>(in, path);
                b = detail::get<std::uint32_t>(in, path);
                if (a >= m || b >= m) throw Error(path + ": local edge id out of range");
            }
        }
        cache.subgraphs.push_back(std::move(sub));
    }
    return cache;
}

}  // namespace bsg
