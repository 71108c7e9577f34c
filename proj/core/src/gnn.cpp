#include "bsg/gnn.hpp"

#include "adam.hpp"
#include "binary_io.hpp"
#include "bsg/preclassifier.hpp"
#include "bsg/random.hpp"
#include "parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace bsg {

namespace {

constexpr std::string_view kGnnMagic = "BSGGNN01";
constexpr std::uint32_t kGnnVersion = 1;
constexpr double kProbClamp = 1e-12;
constexpr std::size_t kGradBlock = 8;

inline double lrelu(double v) { return v > 0.0 ? v : kLeakySlope * v; }
inline double lrelu_grad(double v) { return v > 0.0 ? 1.0 : kLeakySlope; }

Matrix apply_lrelu(const Matrix& z) { return z.unaryExpr([](double v) { return lrelu(v); }); }

void xavier(Matrix& w, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = uniform(rng, -a, a);
}

Matrix aggregate(const RelationAdjacency& adj, const Matrix& h) {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(adj.size), h.cols());
    for (std::size_t i = 0; i < adj.size; ++i) {
        for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
            out.row(static_cast<Eigen::Index>(i)) += adj.weights[e] * h.row(adj.sources[e]);
        }
    }
    return out;
}

Matrix aggregate_row(const RelationAdjacency& adj, const Matrix& h, std::size_t i) {
    Matrix out = Matrix::Zero(1, h.cols());
    for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) out.row(0) += adj.weights[e] * h.row(adj.sources[e]);
    return out;
}

// d_h += A^T d_out restricted to the given output rows.
void aggregate_transpose_add(const RelationAdjacency& adj, const Matrix& d_out, std::size_t first_row,
                             Matrix& d_h) {
    for (Eigen::Index k = 0; k < d_out.rows(); ++k) {
        const auto i = first_row + static_cast<std::size_t>(k);
        for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
            d_h.row(adj.sources[e]) += adj.weights[e] * d_out.row(k);
        }
    }
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
    Matrix mask(rows, cols);
    const double keep = 1.0 / (1.0 - p);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = uniform01(rng) < p ? 0.0 : keep;
    return mask;
}

struct RelationCache {
    std::vector<Matrix> a;     // aggregated inputs, index l in [1, L]
    std::vector<Matrix> z;     // pre-activations
    std::vector<Matrix> g;     // outputs after dropout; g[0] = H0 rows of this relation
    std::vector<Matrix> mask;  // dropout masks for l in [1, L-1]
};

struct ForwardCache {
    Matrix xs;
    Matrix z0;
    Matrix mask0;
    Matrix h0;  // after dropout
    std::vector<RelationCache> rels;
    std::vector<Vector> finals;
};

void check_input(const GnnModel& m, const Matrix& features) {
    if (static_cast<std::size_t>(features.cols()) != m.input_width) {
        throw Error("feature width " + std::to_string(features.cols()) + " does not match GNN input width " +
                    std::to_string(m.input_width));
    }
}

void forward_subgraph(const GnnModel& m, const Matrix& features, const PreparedSubgraph& sub, bool training,
                      std::uint64_t seed, ForwardCache& c) {
    const auto& P = m.params;
    const auto& cfg = m.config;
    const std::size_t L = cfg.layers;
    const double p = training ? cfg.dropout : 0.0;
    if (sub.relations.size() != m.relations) throw Error("subgraph relation count does not match model");
    Rng rng(seed);

    const auto msz = static_cast<Eigen::Index>(sub.nodes.size());
    c.xs.resize(msz, features.cols());
    for (Eigen::Index i = 0; i < msz; ++i) c.xs.row(i) = features.row(sub.nodes[static_cast<std::size_t>(i)]);
    c.z0 = c.xs * P.w2.transpose();
    c.z0.rowwise() += P.b2.transpose();
    c.h0 = apply_lrelu(c.z0);
    if (p > 0.0) {
        c.mask0 = dropout_mask(c.h0.rows(), c.h0.cols(), p, rng);
        c.h0.array() *= c.mask0.array();
    }

    c.rels.assign(m.relations, {});
    c.finals.assign(m.relations, Vector());
    for (std::size_t r = 0; r < m.relations; ++r) {
        const auto& rel = sub.relations[r];
        auto& rc = c.rels[r];
        rc.a.resize(L + 1);
        rc.z.resize(L + 1);
        rc.g.resize(L + 1);
        rc.mask.resize(L + 1);
        const auto mr = static_cast<Eigen::Index>(rel.nodes.size());
        rc.g[0].resize(mr, c.h0.cols());
        for (Eigen::Index i = 0; i < mr; ++i) rc.g[0].row(i) = c.h0.row(rel.nodes[static_cast<std::size_t>(i)]);
        for (std::size_t l = 1; l <= L; ++l) {
            const Matrix& w = P.w3[r][l - 1];
            // Only the root's last-layer output is consumed downstream.
            rc.a[l] = l < L ? aggregate(rel.adj, rc.g[l - 1]) : aggregate_row(rel.adj, rc.g[l - 1], 0);
            rc.z[l] = rc.a[l] * w.transpose();
            rc.g[l] = apply_lrelu(rc.z[l]);
            if (l < L && p > 0.0) {
                rc.mask[l] = dropout_mask(rc.g[l].rows(), rc.g[l].cols(), p, rng);
                rc.g[l].array() *= rc.mask[l].array();
            }
        }
        Vector fin(static_cast<Eigen::Index>(cfg.final_width()));
        if (cfg.concat_intermediate) {
            const auto h = static_cast<Eigen::Index>(cfg.hidden);
            for (std::size_t l = 0; l <= L; ++l) fin.segment(static_cast<Eigen::Index>(l) * h, h) = rc.g[l].row(0).transpose();
        } else {
            fin = rc.g[L].row(0).transpose();
        }
        c.finals[r] = std::move(fin);
    }
}

void backward_subgraph(const GnnModel& m, const PreparedSubgraph& sub, const ForwardCache& c,
                       const std::vector<Vector>& d_final, GnnParams& grad) {
    const auto& P = m.params;
    const auto& cfg = m.config;
    const std::size_t L = cfg.layers;
    const auto h = static_cast<Eigen::Index>(cfg.hidden);

    Matrix d_h0 = Matrix::Zero(c.h0.rows(), c.h0.cols());
    for (std::size_t r = 0; r < m.relations; ++r) {
        const auto& rel = sub.relations[r];
        const auto& rc = c.rels[r];
        std::vector<Matrix> dg(L + 1);
        for (std::size_t l = 0; l < L; ++l) dg[l] = Matrix::Zero(rc.g[l].rows(), h);
        dg[L] = Matrix::Zero(rc.g[L].rows(), h);
        if (cfg.concat_intermediate) {
            for (std::size_t l = 0; l <= L; ++l) dg[l].row(0) += d_final[r].segment(static_cast<Eigen::Index>(l) * h, h).transpose();
        } else {
            dg[L].row(0) += d_final[r].transpose();
        }
        for (std::size_t l = L; l >= 1; --l) {
            Matrix dz = dg[l];
            if (l < L && rc.mask[l].size() > 0) dz.array() *= rc.mask[l].array();
            dz.array() *= rc.z[l].unaryExpr([](double v) { return lrelu_grad(v); }).array();
            grad.w3[r][l - 1].noalias() += dz.transpose() * rc.a[l];
            const Matrix da = dz * P.w3[r][l - 1];
            aggregate_transpose_add(rel.adj, da, 0, dg[l - 1]);
        }
        for (Eigen::Index i = 0; i < dg[0].rows(); ++i) d_h0.row(rel.nodes[static_cast<std::size_t>(i)]) += dg[0].row(i);
    }
    if (c.mask0.size() > 0) d_h0.array() *= c.mask0.array();
    d_h0.array() *= c.z0.unaryExpr([](double v) { return lrelu_grad(v); }).array();
    grad.w2.noalias() += d_h0.transpose() * c.xs;
    grad.b2 += d_h0.colwise().sum().transpose();
}

void add_into(GnnParams& acc, const GnnParams& other) {
    std::vector<std::pair<const double*, std::size_t>> src;
    other.for_each([&](std::string_view, const double* d, std::size_t n) { src.emplace_back(d, n); });
    std::size_t k = 0;
    acc.for_each([&](std::string_view, double* d, std::size_t n) {
        const double* s = src[k++].first;
        for (std::size_t i = 0; i < n; ++i) d[i] += s[i];
    });
}

std::vector<double> attention_scores(const GnnModel& m, std::span<const Matrix> per_relation,
                                     std::vector<Matrix>* tanh_out) {
    const auto& P = m.params;
    std::vector<double> w(per_relation.size());
    if (tanh_out) tanh_out->resize(per_relation.size());
    for (std::size_t r = 0; r < per_relation.size(); ++r) {
        Matrix u = per_relation[r] * P.w_att.transpose();
        u.rowwise() += P.b_att.transpose();
        Matrix t = u.array().tanh().matrix();
        w[r] = (t * P.q).sum() / static_cast<double>(per_relation[r].rows());
        if (tanh_out) (*tanh_out)[r] = std::move(t);
    }
    return w;
}

}  // namespace

// ---------------------------------------------------------------------------

void GnnParams::for_each(const std::function<void(std::string_view, double*, std::size_t)>& fn) {
    fn("w2", w2.data(), static_cast<std::size_t>(w2.size()));
    fn("b2", b2.data(), static_cast<std::size_t>(b2.size()));
    for (auto& per_rel : w3) {
        for (auto& w : per_rel) fn("w3", w.data(), static_cast<std::size_t>(w.size()));
    }
    fn("w_att", w_att.data(), static_cast<std::size_t>(w_att.size()));
    fn("b_att", b_att.data(), static_cast<std::size_t>(b_att.size()));
    fn("q", q.data(), static_cast<std::size_t>(q.size()));
    fn("w_out", w_out.data(), static_cast<std::size_t>(w_out.size()));
    fn("b_out", b_out.data(), static_cast<std::size_t>(b_out.size()));
}

void GnnParams::for_each(const std::function<void(std::string_view, const double*, std::size_t)>& fn) const {
    const_cast<GnnParams*>(this)->for_each(
        [&](std::string_view name, double* d, std::size_t n) { fn(name, static_cast<const double*>(d), n); });
}

GnnParams GnnParams::zeros_like() const {
    GnnParams z = *this;
    z.for_each([](std::string_view, double* d, std::size_t n) { std::fill(d, d + n, 0.0); });
    return z;
}

double GnnParams::squared_norm() const {
    double total = 0.0;
    for_each([&](std::string_view, const double* d, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) total += d[i] * d[i];
    });
    return total;
}

GnnModel init_gnn(std::size_t input_width, std::size_t relations, const GnnConfig& cfg, std::uint64_t seed) {
    if (input_width == 0 || relations == 0 || cfg.hidden == 0 || cfg.attention == 0) {
        throw Error("init_gnn: dimensions must be positive");
    }
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw Error("init_gnn: dropout must lie in [0, 1)");
    Rng rng(seed);
    GnnModel m;
    m.config = cfg;
    m.input_width = input_width;
    m.relations = relations;
    auto& P = m.params;
    const auto h = static_cast<Eigen::Index>(cfg.hidden);
    const auto f = static_cast<Eigen::Index>(cfg.final_width());
    const auto a = static_cast<Eigen::Index>(cfg.attention);
    P.w2.resize(h, static_cast<Eigen::Index>(input_width));
    xavier(P.w2, rng);
    P.b2 = Vector::Zero(h);
    P.w3.assign(relations, {});
    for (auto& per_rel : P.w3) {
        for (std::size_t l = 0; l < cfg.layers; ++l) {
            Matrix w(h, h);
            xavier(w, rng);
            per_rel.push_back(std::move(w));
        }
    }
    P.w_att.resize(a, f);
    xavier(P.w_att, rng);
    P.b_att = Vector::Zero(a);
    P.q.resize(a);
    const double qa = std::sqrt(6.0 / static_cast<double>(a + 1));
    for (Eigen::Index i = 0; i < a; ++i) P.q[i] = uniform(rng, -qa, qa);
    P.w_out.resize(2, f);
    xavier(P.w_out, rng);
    P.b_out = Vector::Zero(2);
    return m;
}

RelationAdjacency build_adjacency(std::size_t size, std::span<const LocalEdge> messages, bool self_loops) {
    std::vector<LocalEdge> in_edges;  // (dst, src)
    in_edges.reserve(messages.size() + (self_loops ? size : 0));
    for (const auto& [src, dst] : messages) {
        if (src >= size || dst >= size) throw Error("build_adjacency: local id out of range");
        in_edges.emplace_back(dst, src);
    }
    if (self_loops) {
        for (std::size_t i = 0; i < size; ++i) in_edges.emplace_back(static_cast<LocalId>(i), static_cast<LocalId>(i));
    }
    std::sort(in_edges.begin(), in_edges.end());
    in_edges.erase(std::unique(in_edges.begin(), in_edges.end()), in_edges.end());

    RelationAdjacency adj;
    adj.size = size;
    adj.offsets.assign(size + 1, 0);
    for (const auto& [dst, src] : in_edges) {
        ++adj.offsets[dst + 1];
        adj.sources.push_back(src);
    }
    for (std::size_t i = 0; i < size; ++i) adj.offsets[i + 1] += adj.offsets[i];
    adj.weights.resize(adj.sources.size());
    for (std::size_t i = 0; i < size; ++i) {
        const auto deg = adj.offsets[i + 1] - adj.offsets[i];
        for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) adj.weights[e] = 1.0 / static_cast<double>(deg);
    }
    return adj;
}

PreparedSubgraph prepare_subgraph(const BiasedSubgraph& sub, int label, bool self_loops) {
    PreparedSubgraph p;
    p.start = sub.start;
    p.label = label;
    p.nodes = sub.nodes;
    std::unordered_map<NodeId, std::uint32_t> local;
    for (std::size_t i = 0; i < sub.nodes.size(); ++i) local.emplace(sub.nodes[i], static_cast<std::uint32_t>(i));

    for (const auto& sel : sub.relations) {
        PreparedRelation rel;
        rel.nodes.push_back(0);
        std::vector<std::uint32_t> rel_of(sub.nodes.size(), std::numeric_limits<std::uint32_t>::max());
        rel_of[0] = 0;
        for (NodeId u : sel.selected) {
            auto it = local.find(u);
            if (it == local.end()) throw Error("prepare_subgraph: selected node missing from node map");
            if (rel_of[it->second] == std::numeric_limits<std::uint32_t>::max()) {
                rel_of[it->second] = static_cast<std::uint32_t>(rel.nodes.size());
                rel.nodes.push_back(it->second);
            }
        }
        std::vector<LocalEdge> messages;
        for (const auto& [a, b] : sel.edges) {
            if (a >= rel_of.size() || b >= rel_of.size() || rel_of[a] == std::numeric_limits<std::uint32_t>::max() ||
                rel_of[b] == std::numeric_limits<std::uint32_t>::max()) {
                throw Error("prepare_subgraph: edge endpoint outside the relation's selection");
            }
            if (a == 0) {
                messages.emplace_back(rel_of[b], 0);
            } else {
                messages.emplace_back(rel_of[a], rel_of[b]);
            }
        }
        rel.adj = build_adjacency(rel.nodes.size(), messages, self_loops);
        p.relations.push_back(std::move(rel));
    }
    return p;
}

// ---------------------------------------------------------------------------

Matrix init_hidden(const GnnModel& m, const Matrix& x_sub) {
    check_input(m, x_sub);
    Matrix z = x_sub * m.params.w2.transpose();
    z.rowwise() += m.params.b2.transpose();
    return apply_lrelu(z);
}

Matrix gcn_layer(const GnnModel& m, std::size_t relation, std::size_t layer, const Matrix& hidden,
                 const RelationAdjacency& adj) {
    if (relation >= m.relations) throw Error("gcn_layer: relation out of range");
    if (layer < 1 || layer > m.config.layers) throw Error("gcn_layer: layer out of range");
    const Matrix& w = m.params.w3[relation][layer - 1];
    if (hidden.cols() != w.cols()) throw Error("gcn_layer: hidden width mismatch");
    if (static_cast<std::size_t>(hidden.rows()) != adj.size) throw Error("gcn_layer: row count mismatch");
    return apply_lrelu(aggregate(adj, hidden) * w.transpose());
}

Matrix concat_intermediate(std::span<const Matrix> layer_outputs, bool concat) {
    if (layer_outputs.empty()) throw Error("concat_intermediate: missing layer outputs");
    if (!concat) return layer_outputs.back();
    Eigen::Index width = 0;
    for (const auto& h : layer_outputs) {
        if (h.rows() != layer_outputs.front().rows()) throw Error("concat_intermediate: row count mismatch");
        width += h.cols();
    }
    Matrix out(layer_outputs.front().rows(), width);
    Eigen::Index col = 0;
    for (const auto& h : layer_outputs) {
        out.middleCols(col, h.cols()) = h;
        col += h.cols();
    }
    return out;
}

Fused semantic_attention(const GnnModel& m, std::span<const Matrix> per_relation) {
    if (per_relation.empty()) throw Error("semantic_attention: no relations");
    if (per_relation.front().rows() == 0) throw Error("semantic_attention: empty batch");
    const auto R = per_relation.size();
    Fused out;
    out.beta.resize(static_cast<Eigen::Index>(R));
    if (m.config.fusion == Fusion::Mean) {
        out.beta.setConstant(1.0 / static_cast<double>(R));
    } else {
        const auto w = attention_scores(m, per_relation, nullptr);
        const double mx = *std::max_element(w.begin(), w.end());
        for (std::size_t r = 0; r < R; ++r) out.beta[static_cast<Eigen::Index>(r)] = std::exp(w[r] - mx);
        out.beta /= out.beta.sum();
    }
    out.rows = Matrix::Zero(per_relation.front().rows(), per_relation.front().cols());
    for (std::size_t r = 0; r < R; ++r) out.rows += out.beta[static_cast<Eigen::Index>(r)] * per_relation[r];
    return out;
}

Matrix predict(const GnnModel& m, const Matrix& fused) {
    if (fused.cols() != m.params.w_out.cols()) throw Error("predict: fused width does not match output layer");
    Matrix logits = fused * m.params.w_out.transpose();
    logits.rowwise() += m.params.b_out.transpose();
    return softmax_rows(logits);
}

double gnn_loss(const GnnModel& m, const Matrix& probs, std::span<const int> labels, double reg_lambda) {
    if (static_cast<std::size_t>(probs.rows()) != labels.size()) throw Error("gnn_loss: label count mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y != 0 && y != 1) throw Error("gnn_loss: label outside {0,1}");
        const double p = std::clamp(probs(static_cast<Eigen::Index>(i), 1), kProbClamp, 1.0 - kProbClamp);
        loss -= y == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return loss + reg_lambda * m.params.squared_norm();
}

BatchResult run_batch(const GnnModel& m, const Matrix& features, std::span<const PreparedSubgraph* const> batch,
                      const BatchOptions& opts, GnnParams* grad) {
    check_input(m, features);
    if (batch.empty()) throw Error("run_batch: empty batch");
    const auto B = batch.size();
    const auto R = m.relations;
    const auto F = static_cast<Eigen::Index>(m.config.final_width());

    std::vector<ForwardCache> caches(B);
    detail::parallel_chunks(B, opts.workers, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) {
            forward_subgraph(m, features, *batch[i], opts.training, derive_seed(opts.dropout_seed, i), caches[i]);
        }
    });

    std::vector<Matrix> per_rel(R, Matrix(static_cast<Eigen::Index>(B), F));
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t i = 0; i < B; ++i) per_rel[r].row(static_cast<Eigen::Index>(i)) = caches[i].finals[r].transpose();
    }
    const Fused fused = semantic_attention(m, per_rel);

    BatchResult res;
    res.beta = fused.beta;
    res.probs = predict(m, fused.rows);

    bool labeled = true;
    std::vector<int> labels(B);
    for (std::size_t i = 0; i < B; ++i) {
        labels[i] = batch[i]->label;
        labeled = labeled && (labels[i] == 0 || labels[i] == 1);
    }
    if (labeled) {
        res.data_loss = gnn_loss(m, res.probs, labels, 0.0);
        res.loss = res.data_loss + opts.reg_lambda * m.params.squared_norm();
    } else if (grad) {
        throw Error("run_batch: gradients requested for a batch with unlabeled start nodes");
    }
    if (!grad) return res;

    const auto& P = m.params;
    *grad = P.zeros_like();
    GnnParams& g = *grad;

    Matrix dlogits = Matrix::Zero(static_cast<Eigen::Index>(B), 2);
    for (std::size_t i = 0; i < B; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const double p = res.probs(row, 1);
        if (p < kProbClamp || p > 1.0 - kProbClamp) continue;  // clamped: flat
        const double d = p - labels[i];
        dlogits(row, 1) = d;
        dlogits(row, 0) = -d;
    }
    g.w_out.noalias() += dlogits.transpose() * fused.rows;
    g.b_out += dlogits.colwise().sum().transpose();
    const Matrix dfused = dlogits * P.w_out;

    std::vector<Matrix> d_rel(R);
    for (std::size_t r = 0; r < R; ++r) d_rel[r] = fused.beta[static_cast<Eigen::Index>(r)] * dfused;

    if (m.config.fusion == Fusion::Attention) {
        std::vector<Matrix> t;
        attention_scores(m, per_rel, &t);
        Vector dbeta(static_cast<Eigen::Index>(R));
        for (std::size_t r = 0; r < R; ++r) dbeta[static_cast<Eigen::Index>(r)] = dfused.cwiseProduct(per_rel[r]).sum();
        const double s = fused.beta.dot(dbeta);
        for (std::size_t r = 0; r < R; ++r) {
            const auto rr = static_cast<Eigen::Index>(r);
            const double dw = fused.beta[rr] * (dbeta[rr] - s) / static_cast<double>(B);
            g.q += dw * t[r].colwise().sum().transpose();
            Matrix du = (1.0 - t[r].array().square()).matrix();
            du.array().rowwise() *= (dw * P.q).transpose().array();
            g.w_att.noalias() += du.transpose() * per_rel[r];
            g.b_att += du.colwise().sum().transpose();
            d_rel[r].noalias() += du * P.w_att;
        }
    }

    // Fixed blocks keep the summation order independent of the worker count.
    const std::size_t blocks = (B + kGradBlock - 1) / kGradBlock;
    std::vector<GnnParams> partial(blocks, g.zeros_like());
    detail::parallel_chunks(blocks, opts.workers, [&](std::size_t begin, std::size_t end, std::size_t) {
        std::vector<Vector> d_final(R);
        for (std::size_t b = begin; b < end; ++b) {
            for (std::size_t i = b * kGradBlock; i < std::min(B, (b + 1) * kGradBlock); ++i) {
                for (std::size_t r = 0; r < R; ++r) d_final[r] = d_rel[r].row(static_cast<Eigen::Index>(i)).transpose();
                backward_subgraph(m, *batch[i], caches[i], d_final, partial[b]);
            }
        }
    });
    for (const auto& part : partial) add_into(g, part);

    if (opts.reg_lambda != 0.0) {
        std::vector<const double*> src;
        P.for_each([&](std::string_view, const double* d, std::size_t) { src.push_back(d); });
        std::size_t k = 0;
        g.for_each([&](std::string_view, double* d, std::size_t n) {
            const double* w = src[k++];
            for (std::size_t i = 0; i < n; ++i) d[i] += 2.0 * opts.reg_lambda * w[i];
        });
    }
    return res;
}

// ---------------------------------------------------------------------------

Metrics binary_metrics(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) throw Error("binary_metrics: size mismatch");
    if (truth.empty()) throw Error("binary_metrics: empty split");
    std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        correct += predicted[i] == truth[i];
        if (predicted[i] == 1 && truth[i] == 1) ++tp;
        if (predicted[i] == 1 && truth[i] == 0) ++fp;
        if (predicted[i] == 0 && truth[i] == 1) ++fn;
    }
    Metrics out;
    out.n = truth.size();
    out.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    const double denom = static_cast<double>(2 * tp + fp + fn);
    out.f1 = denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
    return out;
}

namespace {

std::vector<PreparedSubgraph> prepare_split(const SubgraphCache& cache, const std::vector<std::size_t>& index,
                                            const LabelSet& labels, const std::vector<NodeId>& nodes,
                                            bool self_loops, std::string_view what) {
    std::vector<PreparedSubgraph> out;
    out.reserve(nodes.size());
    for (NodeId v : nodes) {
        if (v >= index.size() || index[v] == kNoSubgraph) {
            throw Error("subgraph cache does not cover " + std::string(what) + " node " + std::to_string(v));
        }
        out.push_back(prepare_subgraph(cache.subgraphs[index[v]], static_cast<int>(labels.label(v)), self_loops));
    }
    return out;
}

std::vector<const PreparedSubgraph*> pointers(const std::vector<PreparedSubgraph>& v) {
    std::vector<const PreparedSubgraph*> out;
    out.reserve(v.size());
    for (const auto& p : v) out.push_back(&p);
    return out;
}

double accuracy_of(const Matrix& probs, std::span<const PreparedSubgraph* const> batch) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const int pred = probs(row, 1) > probs(row, 0) ? 1 : 0;
        correct += pred == batch[i]->label;
    }
    return static_cast<double>(correct) / static_cast<double>(batch.size());
}

}  // namespace

GnnTrainResult train_gnn(const GnnConfig& arch, const GnnTrainConfig& cfg, const Matrix& features,
                         const SubgraphCache& cache, const LabelSet& labels) {
    if (cfg.batch == 0) throw Error("train_gnn: batch size must be positive");
    if (labels.train().empty()) throw Error("train_gnn: empty training split");
    if (static_cast<std::size_t>(features.rows()) != labels.num_nodes()) {
        throw Error("train_gnn: feature rows do not match label count");
    }
    const auto index = cache.index(labels.num_nodes());
    const auto train = prepare_split(cache, index, labels, labels.train(), arch.self_loops, "training");
    const auto val = prepare_split(cache, index, labels, labels.val(), arch.self_loops, "validation");
    const auto val_ptrs = pointers(val);

    GnnTrainResult result;
    result.model = init_gnn(static_cast<std::size_t>(features.cols()), cache.relation_names.size(), arch, cfg.seed);
    GnnModel& model = result.model;
    GnnModel best = model;

    std::vector<detail::AdamSlot> slots;
    model.params.for_each([&](std::string_view, const double*, std::size_t n) { slots.emplace_back(n); });

    Rng rng(derive_seed(cfg.seed, 0x5eed));
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    std::size_t step = 0;
    GnnParams grad;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const auto end = std::min(order.size(), start + cfg.batch);
            std::vector<const PreparedSubgraph*> batch;
            for (std::size_t i = start; i < end; ++i) batch.push_back(&train[order[i]]);
            BatchOptions opts;
            opts.training = true;
            opts.reg_lambda = cfg.reg_lambda;
            opts.dropout_seed = derive_seed(cfg.seed, (epoch << 32) + start);
            opts.workers = cfg.workers;
            const auto res = run_batch(model, features, batch, opts, &grad);
            if (!std::isfinite(res.loss) || grad.squared_norm() != grad.squared_norm()) {
                throw TrainingDiverged("train_gnn: non-finite loss at epoch " + std::to_string(epoch), model);
            }
            total += res.data_loss;
            ++step;
            std::size_t k = 0;
            std::vector<const double*> gsrc;
            grad.for_each([&](std::string_view, const double* d, std::size_t) { gsrc.push_back(d); });
            model.params.for_each([&](std::string_view, double* d, std::size_t) {
                slots[k].step(d, gsrc[k], cfg.lr, step);
                ++k;
            });
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = total / static_cast<double>(train.size());
        double monitor = entry.train_loss;
        if (!val_ptrs.empty()) {
            BatchOptions eval;
            eval.workers = cfg.workers;
            const auto res = run_batch(model, features, val_ptrs, eval);
            entry.val_loss = res.data_loss / static_cast<double>(val_ptrs.size());
            entry.val_accuracy = accuracy_of(res.probs, val_ptrs);
            monitor = entry.val_loss;
        }
        if (!std::isfinite(monitor)) throw TrainingDiverged("train_gnn: non-finite validation loss", best);
        result.log.push_back(entry);
        if (monitor < best_loss) {
            best_loss = monitor;
            best = model;
            result.best_epoch = epoch;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }
    result.model = std::move(best);
    return result;
}

Metrics evaluate(const GnnModel& m, const Matrix& features, const SubgraphCache& cache, const LabelSet& labels,
                 Split split) {
    const auto& nodes = labels.split(split);
    if (nodes.empty()) throw Error("evaluate: split '" + std::string(split_name(split)) + "' is empty");
    const auto index = cache.index(labels.num_nodes());
    const auto prepared = prepare_split(cache, index, labels, nodes, m.config.self_loops, split_name(split));
    const auto ptrs = pointers(prepared);
    const auto res = run_batch(m, features, ptrs, BatchOptions{});
    std::vector<int> pred(nodes.size()), truth(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        pred[i] = res.probs(row, 1) > res.probs(row, 0) ? 1 : 0;
        truth[i] = prepared[i].label;
    }
    return binary_metrics(pred, truth);
}

std::string to_jsonl(const std::vector<EpochLog>& log) {
    std::ostringstream out;
    for (const auto& e : log) {
        nlohmann::json j{{"epoch", e.epoch},
                         {"train_loss", e.train_loss},
                         {"val_loss", e.val_loss},
                         {"val_accuracy", e.val_accuracy}};
        out << j.dump() << '\n';
    }
    return out.str();
}

void save_gnn(const GnnModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file '" + path + "'");
    out.write(kGnnMagic.data(), kGnnMagic.size());
    detail::put<std::uint32_t>(out, kGnnVersion);
    detail::put<std::uint64_t>(out, m.input_width);
    detail::put<std::uint64_t>(out, m.relations);
    detail::put<std::uint64_t>(out, m.config.hidden);
    detail::put<std::uint64_t>(out, m.config.layers);
    detail::put<std::uint64_t>(out, m.config.attention);
    detail::put<std::uint8_t>(out, m.config.concat_intermediate ? 1 : 0);
    detail::put<std::uint8_t>(out, m.config.fusion == Fusion::Mean ? 1 : 0);
    detail::put<std::uint8_t>(out, m.config.self_loops ? 1 : 0);
    detail::put<double>(out, m.config.dropout);
    m.params.for_each([&](std::string_view, const double* d, std::size_t n) { detail::put_doubles(out, d, n); });
    if (!out) throw Error("failed writing model file '" + path + "'");
}

GnnModel load_gnn(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file '" + path + "'");
    detail::expect_magic(in, kGnnMagic, path);
    const auto version = detail::get<std::uint32_t>(in, path);
    if (version != kGnnVersion) throw Error(path + ": unsupported model version " + std::to_string(version));
    const auto input_width = detail::get<std::uint64_t>(in, path);
    const auto relations = detail::get<std::uint64_t>(in, path);
    GnnConfig cfg;
    cfg.hidden = detail::get<std::uint64_t>(in, path);
    cfg.layers = detail::get<std::uint64_t>(in, path);
    cfg.attention = detail::get<std::uint64_t>(in, path);
    cfg.concat_intermediate = detail::get<std::uint8_t>(in, path) != 0;
    cfg.fusion = detail::get<std::uint8_t>(in, path) != 0 ? Fusion::Mean : Fusion::Attention;
    cfg.self_loops = detail::get<std::uint8_t>(in, path) != 0;
    cfg.dropout = detail::get<double>(in, path);
    const std::uint64_t limit = 1u << 20;
    if (input_width > limit || relations > 1024 || cfg.hidden > limit || cfg.layers > 64 || cfg.attention > limit) {
        throw Error(path + ": implausible model dimensions");
    }
    GnnModel m = init_gnn(input_width, relations, cfg, 0);
    m.params.for_each([&](std::string_view, double* d, std::size_t n) { detail::get_doubles(in, d, n, path); });
    return m;
}

}  // namespace bsg
