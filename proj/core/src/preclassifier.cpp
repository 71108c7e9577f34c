#include "bsg/preclassifier.hpp"

#include "adam.hpp"
#include "binary_io.hpp"
#include "bsg/error.hpp"
#include "bsg/random.hpp"

#include <cmath>
#include <fstream>

namespace bsg {

namespace {

constexpr std::string_view kMlpMagic = "BSGMLP01";

Matrix leaky_relu(const Matrix& z) {
    return z.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
}

void check_width(const MlpModel& m, Eigen::Index cols) {
    if (static_cast<std::size_t>(cols) != m.input_width()) {
        throw Error("feature width " + std::to_string(cols) + " does not match model input width " +
                    std::to_string(m.input_width()));
    }
}

}  // namespace

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double mx = logits.row(i).maxCoeff();
        p.row(i) = (logits.row(i).array() - mx).exp();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

MlpModel init_mlp(std::size_t input_width, std::size_t hidden, std::uint64_t seed) {
    Rng rng(seed);
    MlpModel m;
    const double a0 = std::sqrt(6.0 / static_cast<double>(input_width + hidden));
    const double a1 = std::sqrt(6.0 / static_cast<double>(hidden + 2));
    m.w0.resize(hidden, input_width);
    for (Eigen::Index i = 0; i < m.w0.size(); ++i) m.w0.data()[i] = uniform(rng, -a0, a0);
    m.b0 = Vector::Zero(hidden);
    m.w1.resize(2, hidden);
    for (Eigen::Index i = 0; i < m.w1.size(); ++i) m.w1.data()[i] = uniform(rng, -a1, a1);
    m.b1 = Vector::Zero(2);
    return m;
}

double mlp_loss(const MlpModel& m, const Matrix& x, std::span<const int> y, MlpGradients* grad) {
    check_width(m, x.cols());
    const auto n = x.rows();
    if (n == 0) throw Error("mlp_loss: empty input");
    Matrix z = x * m.w0.transpose();
    z.rowwise() += m.b0.transpose();
    const Matrix h = leaky_relu(z);
    Matrix logits = h * m.w1.transpose();
    logits.rowwise() += m.b1.transpose();
    const Matrix p = softmax_rows(logits);

    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) loss -= std::log(std::max(p(i, y[i]), 1e-300));
    loss /= static_cast<double>(n);

    if (grad) {
        Matrix dlogits = p;
        for (Eigen::Index i = 0; i < n; ++i) dlogits(i, y[i]) -= 1.0;
        dlogits /= static_cast<double>(n);
        grad->w1 = dlogits.transpose() * h;
        grad->b1 = dlogits.colwise().sum().transpose();
        Matrix dz = dlogits * m.w1;
        dz.array() *= z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; }).array();
        grad->w0 = dz.transpose() * x;
        grad->b0 = dz.colwise().sum().transpose();
    }
    return loss;
}

MlpTrainResult train_mlp(const Matrix& x, std::span<const int> y, const MlpConfig& cfg) {
    if (x.rows() == 0) throw Error("train_mlp: empty fitting set");
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error("train_mlp: label count mismatch");
    for (int label : y) {
        if (label != 0 && label != 1) throw Error("train_mlp: labels must be 0 or 1");
    }

    MlpTrainResult result;
    result.model = init_mlp(static_cast<std::size_t>(x.cols()), cfg.hidden, cfg.seed);
    auto& m = result.model;
    detail::AdamSlot s_w0(m.w0.size()), s_b0(m.b0.size()), s_w1(m.w1.size()), s_b1(m.b1.size());

    double best = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    MlpGradients g;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double loss = mlp_loss(m, x, y, &g);
        if (!std::isfinite(loss)) {
            throw Error("train_mlp: loss became non-finite at epoch " + std::to_string(epoch) +
                        " (try a smaller learning rate)");
        }
        result.loss_history.push_back(loss);
        if (loss < best - 1e-9) {
            best = loss;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
        const auto t = epoch + 1;
        s_w0.step(m.w0.data(), g.w0.data(), cfg.lr, t);
        s_b0.step(m.b0.data(), g.b0.data(), cfg.lr, t);
        s_w1.step(m.w1.data(), g.w1.data(), cfg.lr, t);
        s_b1.step(m.b1.data(), g.b1.data(), cfg.lr, t);
    }

    const Matrix p = predict_proba(m, x);
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const int pred = p(i, 1) > p(i, 0) ? 1 : 0;
        correct += pred == y[i];
    }
    result.fitting_accuracy = static_cast<double>(correct) / static_cast<double>(x.rows());
    return result;
}

MlpTrainResult train_mlp(const FeatureMatrix& x, const LabelSet& labels, const MlpConfig& cfg) {
    std::vector<NodeId> fit = labels.train();
    fit.insert(fit.end(), labels.val().begin(), labels.val().end());
    if (fit.empty()) throw Error("train_mlp: train and validation masks are both empty");
    if (x.rows() != labels.num_nodes()) throw Error("train_mlp: feature rows do not match label count");
    Matrix rows(fit.size(), x.width());
    std::vector<int> y(fit.size());
    for (std::size_t i = 0; i < fit.size(); ++i) {
        rows.row(i) = x.values.row(fit[i]);
        y[i] = static_cast<int>(labels.label(fit[i]));
    }
    return train_mlp(rows, y, cfg);
}

Vector hidden_repr(const MlpModel& m, const Eigen::Ref<const Vector>& x, HiddenMode mode) {
    check_width(m, x.size());
    Vector h = m.w0 * x + m.b0;
    if (mode == HiddenMode::Activated) h = h.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
    return h;
}

Matrix hidden_matrix(const MlpModel& m, const Matrix& x, HiddenMode mode) {
    check_width(m, x.cols());
    Matrix z = x * m.w0.transpose();
    z.rowwise() += m.b0.transpose();
    return mode == HiddenMode::Activated ? leaky_relu(z) : z;
}

double pair_similarity(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    const double na = a.norm();
    const double nb = b.norm();
    double cos = 0.0;
    if (na > 0.0 && nb > 0.0) cos = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
    return 0.5 * (1.0 + cos);
}

Matrix predict_proba(const MlpModel& m, const Matrix& x) {
    check_width(m, x.cols());
    Matrix z = x * m.w0.transpose();
    z.rowwise() += m.b0.transpose();
    Matrix logits = leaky_relu(z) * m.w1.transpose();
    logits.rowwise() += m.b1.transpose();
    return softmax_rows(logits);
}

void save_mlp(const MlpModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file '" + path + "'");
    out.write(kMlpMagic.data(), kMlpMagic.size());
    detail::put<std::uint64_t>(out, m.input_width());
    detail::put<std::uint64_t>(out, m.hidden_width());
    detail::put_dense(out, m.w0);
    detail::put_dense(out, m.b0);
    detail::put_dense(out, m.w1);
    detail::put_dense(out, m.b1);
}

MlpModel load_mlp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file '" + path + "'");
    detail::expect_magic(in, kMlpMagic, path);
    const auto s = detail::get<std::uint64_t>(in, path);
    const auto h = detail::get<std::uint64_t>(in, path);
    if (s == 0 || h == 0 || s > (1u << 24) || h > (1u << 24)) throw Error(path + ": implausible model dimensions");
    MlpModel m;
    m.w0.resize(h, s);
    m.b0.resize(h);
    m.w1.resize(2, h);
    m.b1.resize(2);
    detail::get_dense(in, m.w0, path);
    detail::get_dense(in, m.b0, path);
    detail::get_dense(in, m.w1, path);
    detail::get_dense(in, m.b1, path);
    return m;
}

}  // namespace bsg
