#include "oracles.hpp"

#include "bsg/random.hpp"

#include <cmath>
#include <map>
#include <set>

namespace bsg::testing {

HeteroGraph random_graph(std::size_t n, double avg_degree, std::size_t relations, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::string> names;
    std::vector<Edge> edges;
    const double p = n > 1 ? avg_degree / static_cast<double>(n - 1) : 0.0;
    for (std::size_t r = 0; r < relations; ++r) {
        names.push_back("r" + std::to_string(r));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j && uniform01(rng) < p) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), r});
            }
        }
    }
    return HeteroGraph(n, names, edges);
}

LabelSet random_labels(std::size_t n, double bot_p, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Label> labels(n);
    for (auto& l : labels) l = uniform01(rng) < bot_p ? Label::Bot : Label::Human;
    return LabelSet(std::move(labels), {}, {}, {});
}

std::optional<double> brute_node_homophily(std::span<const Edge> edges, const std::vector<Label>& labels, NodeId v) {
    std::set<NodeId> nbrs;
    for (const auto& e : edges) {
        if (e.src == v && e.dst != v) nbrs.insert(e.dst);
        if (e.dst == v && e.src != v) nbrs.insert(e.src);
    }
    std::size_t same = 0, labeled = 0;
    for (NodeId u : nbrs) {
        if (labels[u] == Label::Unlabeled) continue;
        ++labeled;
        if (labels[u] == labels[v]) ++same;
    }
    if (labeled == 0) return std::nullopt;
    return static_cast<double>(same) / static_cast<double>(labeled);
}

std::optional<double> brute_graph_homophily(std::span<const Edge> edges, const std::vector<Label>& labels) {
    double total = 0.0;
    std::size_t count = 0;
    for (NodeId v = 0; v < labels.size(); ++v) {
        if (labels[v] == Label::Unlabeled) continue;
        if (auto h = brute_node_homophily(edges, labels, v)) {
            total += *h;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return total / static_cast<double>(count);
}

std::optional<double> brute_selection_homophily(NodeId v, std::span<const NodeId> selected,
                                                const std::vector<Label>& labels) {
    std::set<NodeId> uniq(selected.begin(), selected.end());
    uniq.erase(v);
    std::size_t same = 0, labeled = 0;
    for (NodeId u : uniq) {
        if (labels[u] == Label::Unlabeled) continue;
        ++labeled;
        if (labels[u] == labels[v]) ++same;
    }
    if (labeled == 0) return std::nullopt;
    return static_cast<double>(same) / static_cast<double>(labeled);
}

double relative_error(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double scale = std::max(std::sqrt(na), std::sqrt(nb));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

namespace {

constexpr double kStep = 1e-6;

template <class Loss>
std::vector<double> central_difference(double* data, std::size_t n, Loss&& loss) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double keep = data[i];
        data[i] = keep + kStep;
        const double up = loss();
        data[i] = keep - kStep;
        const double down = loss();
        data[i] = keep;
        out[i] = (up - down) / (2.0 * kStep);
    }
    return out;
}

}  // namespace

std::vector<GroupError> mlp_gradient_check(std::uint64_t seed, std::size_t rows, std::size_t width,
                                           std::size_t hidden) {
    Rng rng(seed);
    Matrix x(rows, width);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = standard_normal(rng);
    std::vector<int> y(rows);
    for (auto& v : y) v = uniform01(rng) < 0.5 ? 1 : 0;
    MlpModel m = init_mlp(width, hidden, derive_seed(seed, 1));
    for (Eigen::Index i = 0; i < m.b0.size(); ++i) m.b0[i] = 0.1 * standard_normal(rng);
    for (Eigen::Index i = 0; i < m.b1.size(); ++i) m.b1[i] = 0.1 * standard_normal(rng);

    MlpGradients g;
    mlp_loss(m, x, y, &g);
    auto loss = [&] { return mlp_loss(m, x, y); };
    auto check = [&](const char* name, auto& param, const auto& grad) {
        auto fd = central_difference(param.data(), static_cast<std::size_t>(param.size()), loss);
        return GroupError{name, relative_error({grad.data(), static_cast<std::size_t>(grad.size())}, fd)};
    };
    return {check("w0", m.w0, g.w0), check("b0", m.b0, g.b0), check("w1", m.w1, g.w1), check("b1", m.b1, g.b1)};
}

TinyProblem tiny_problem(std::uint64_t seed, std::size_t relations, std::size_t k, std::size_t batch,
                         std::size_t feature_width, bool self_loops) {
    const std::size_t n = 12;
    TinyProblem p{random_graph(n, 3.0, relations, seed), Matrix(n, feature_width), {}, {}};
    Rng rng(derive_seed(seed, 1));
    for (Eigen::Index i = 0; i < p.features.size(); ++i) p.features.data()[i] = standard_normal(rng);
    Matrix hidden(n, 4);
    for (Eigen::Index i = 0; i < hidden.size(); ++i) hidden.data()[i] = standard_normal(rng);
    const SimilarityIndex sims(hidden);
    SamplerConfig cfg;
    cfg.k = k;
    cfg.eps = 1e-5;
    for (std::size_t b = 0; b < batch; ++b) {
        const auto v = static_cast<NodeId>(uniform_index(rng, n));
        p.subgraphs.push_back(build_biased_subgraph(p.graph, sims, v, cfg));
        p.prepared.push_back(prepare_subgraph(p.subgraphs.back(), static_cast<int>(b % 2), self_loops));
    }
    return p;
}

std::vector<GroupError> gnn_gradient_check(std::uint64_t seed, const GnnConfig& arch) {
    auto p = tiny_problem(seed, 2, 2, 2, 5, arch.self_loops);
    GnnModel m = init_gnn(static_cast<std::size_t>(p.features.cols()), p.graph.num_relations(), arch, derive_seed(seed, 2));
    // Non-zero biases so every term of the gradient is exercised.
    Rng rng(derive_seed(seed, 3));
    m.params.for_each([&](std::string_view name, double* d, std::size_t n) {
        if (name.front() == 'b' || name == "q") {
            for (std::size_t i = 0; i < n; ++i) d[i] = 0.3 * standard_normal(rng);
        }
    });

    std::vector<const PreparedSubgraph*> batch;
    for (const auto& s : p.prepared) batch.push_back(&s);
    BatchOptions opts;
    opts.training = true;
    opts.reg_lambda = 1e-3;
    opts.dropout_seed = derive_seed(seed, 4);

    GnnParams grad;
    run_batch(m, p.features, batch, opts, &grad);
    auto loss = [&] { return run_batch(m, p.features, batch, opts).loss; };

    std::vector<std::pair<std::string, std::span<double>>> params;
    m.params.for_each([&](std::string_view name, double* d, std::size_t n) { params.emplace_back(std::string(name), std::span<double>(d, n)); });
    std::vector<std::span<const double>> grads;
    grad.for_each([&](std::string_view, const double* d, std::size_t n) { grads.emplace_back(d, n); });

    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_group;
    std::vector<std::string> order;
    for (std::size_t t = 0; t < params.size(); ++t) {
        const auto& [name, span] = params[t];
        auto fd = central_difference(span.data(), span.size(), loss);
        if (!by_group.count(name)) order.push_back(name);
        auto& [an, num] = by_group[name];
        an.insert(an.end(), grads[t].begin(), grads[t].end());
        num.insert(num.end(), fd.begin(), fd.end());
    }
    std::vector<GroupError> out;
    for (const auto& name : order) {
        const auto& [an, num] = by_group[name];
        out.push_back({name, relative_error(an, num)});
    }
    return out;
}

}  // namespace bsg::testing
