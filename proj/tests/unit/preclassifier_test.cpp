#include "bsg/error.hpp"
#include "bsg/preclassifier.hpp"
#include "bsg/random.hpp"

#include "oracles.hpp"
#include "tmpdir.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace bsg {
namespace {

struct Blobs {
    Matrix x;
    std::vector<int> y;
};

// Two unit-variance Gaussian blobs whose means are 6 apart along a random
// direction.
Blobs blobs(std::size_t n, std::size_t d, std::uint64_t seed, Vector* direction = nullptr) {
    Rng rng(seed);
    Vector dir(d);
    Rng dir_rng(99);
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = standard_normal(dir_rng);
    dir.normalize();
    Blobs b{Matrix(n, d), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        b.y[i] = uniform01(rng) < 0.5 ? 1 : 0;
        for (std::size_t c = 0; c < d; ++c) {
            b.x(i, c) = (b.y[i] ? 3.0 : -3.0) * dir[c] + standard_normal(rng);
        }
    }
    if (direction) *direction = dir;
    return b;
}

double accuracy(const MlpModel& m, const Blobs& b) {
    const Matrix p = predict_proba(m, b.x);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < b.y.size(); ++i) correct += (p(i, 1) > p(i, 0) ? 1 : 0) == b.y[i];
    return static_cast<double>(correct) / static_cast<double>(b.y.size());
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        for (const auto& g : testing::mlp_gradient_check(seed)) {
            EXPECT_LE(g.rel_error, 1e-5) << g.group << " seed " << seed;
        }
    }
}

TEST(Mlp, SeparableBlobsAreFit) {
    Vector dir;
    const auto train = blobs(400, 6, 1, &dir);
    const auto test = blobs(400, 6, 2);
    // The hand-fit threshold along the mean direction already separates them.
    std::size_t oracle_correct = 0;
    for (std::size_t i = 0; i < train.y.size(); ++i) {
        oracle_correct += (train.x.row(i).dot(dir.transpose()) > 0.0 ? 1 : 0) == train.y[i];
    }
    ASSERT_GE(static_cast<double>(oracle_correct) / train.y.size(), 0.99);

    MlpConfig cfg;
    cfg.epochs = 200;
    auto fit = train_mlp(train.x, train.y, cfg);
    EXPECT_GE(fit.fitting_accuracy, 0.99);
    EXPECT_GE(accuracy(fit.model, test), 0.95);
}

TEST(Mlp, ZeroEpochsKeepsInitialization) {
    const auto b = blobs(20, 4, 3);
    MlpConfig cfg;
    cfg.epochs = 0;
    cfg.hidden = 8;
    cfg.seed = 11;
    auto fit = train_mlp(b.x, b.y, cfg);
    auto init = init_mlp(4, 8, 11);
    EXPECT_EQ(fit.model.w0, init.w0);
    EXPECT_EQ(fit.model.b0, init.b0);
    EXPECT_EQ(fit.model.w1, init.w1);
    EXPECT_EQ(fit.model.b1, init.b1);
}

TEST(Mlp, SingleClassLabelsPredictThatClass) {
    auto b = blobs(50, 3, 4);
    std::fill(b.y.begin(), b.y.end(), 1);
    MlpConfig cfg;
    cfg.hidden = 8;
    auto fit = train_mlp(b.x, b.y, cfg);
    const Matrix p = predict_proba(fit.model, b.x);
    for (Eigen::Index i = 0; i < p.rows(); ++i) EXPECT_GT(p(i, 1), p(i, 0));
}

TEST(Mlp, LossDoesNotIncreaseEarlyAtSmallStep) {
    const auto b = blobs(200, 5, 5);
    MlpConfig cfg;
    cfg.lr = 1e-3;
    cfg.epochs = 10;
    auto fit = train_mlp(b.x, b.y, cfg);
    ASSERT_EQ(fit.loss_history.size(), 10u);
    for (std::size_t i = 1; i < fit.loss_history.size(); ++i) EXPECT_LE(fit.loss_history[i], fit.loss_history[i - 1]);
}

TEST(Mlp, TrainingIsDeterministic) {
    const auto b = blobs(100, 4, 6);
    MlpConfig cfg;
    cfg.hidden = 16;
    cfg.epochs = 30;
    auto a = train_mlp(b.x, b.y, cfg);
    auto c = train_mlp(b.x, b.y, cfg);
    EXPECT_EQ(a.loss_history, c.loss_history);
    EXPECT_EQ(a.model.w0, c.model.w0);
}

TEST(Mlp, RejectsEmptyFittingSetAndDivergence) {
    EXPECT_THROW(train_mlp(Matrix(0, 3), std::vector<int>{}, MlpConfig{}), Error);
    const auto b = blobs(40, 3, 7);
    MlpConfig wild;
    wild.lr = 1e300;
    EXPECT_THROW(train_mlp(b.x, b.y, wild), Error);
}

TEST(Mlp, FitsOnTrainAndValidation) {
    const auto b = blobs(10, 2, 8);
    std::vector<Label> labels(10);
    for (std::size_t i = 0; i < 10; ++i) labels[i] = b.y[i] ? Label::Bot : Label::Human;
    FeatureMatrix f{{{"description", 2}}, b.x};
    EXPECT_THROW(train_mlp(f, LabelSet(labels, {}, {}, {0, 1}), MlpConfig{}), Error);
    EXPECT_NO_THROW(train_mlp(f, LabelSet(labels, {}, {2, 3}, {0, 1}), MlpConfig{}));
}

TEST(HiddenRepr, AffineProperties) {
    auto m = init_mlp(4, 4, 1);
    m.w0.setIdentity();
    m.b0.setZero();
    Vector x(4);
    x << 1, -2, 3, -4;
    EXPECT_EQ(hidden_repr(m, x), x);

    m = init_mlp(5, 3, 2);
    m.b0 << 0.5, -1.0, 2.0;
    EXPECT_EQ(hidden_repr(m, Vector::Zero(5)), m.b0);

    Rng rng(3);
    Vector a(5), b(5);
    for (Eigen::Index i = 0; i < 5; ++i) {
        a[i] = standard_normal(rng);
        b[i] = standard_normal(rng);
    }
    const Vector lhs = hidden_repr(m, a + b);
    const Vector rhs = hidden_repr(m, a) + hidden_repr(m, b) - m.b0;
    EXPECT_LT((lhs - rhs).norm(), 1e-12);
    EXPECT_THROW(hidden_repr(m, Vector::Zero(4)), Error);
}

TEST(HiddenRepr, ActivatedVariantAppliesLeakyRelu) {
    auto m = init_mlp(2, 2, 1);
    m.w0.setIdentity();
    m.b0.setZero();
    Vector x(2);
    x << 2.0, -2.0;
    const Vector h = hidden_repr(m, x, HiddenMode::Activated);
    EXPECT_EQ(h[0], 2.0);
    EXPECT_DOUBLE_EQ(h[1], -2.0 * kLeakySlope);
}

TEST(PairSimilarity, Cases) {
    Vector a(3), b(3);
    a << 1, 2, 3;
    b << -3, 0, 1;
    EXPECT_DOUBLE_EQ(pair_similarity(a, a), 1.0);
    EXPECT_DOUBLE_EQ(pair_similarity(a, -a), 0.0);
    EXPECT_DOUBLE_EQ(pair_similarity(a, b), 0.5);
    EXPECT_DOUBLE_EQ(pair_similarity(a, 2.5 * a), 1.0);
    EXPECT_DOUBLE_EQ(pair_similarity(Vector::Zero(3), a), 0.5);
    Rng rng(1);
    for (int t = 0; t < 20; ++t) {
        Vector u(4), v(4);
        for (Eigen::Index i = 0; i < 4; ++i) {
            u[i] = standard_normal(rng);
            v[i] = standard_normal(rng);
        }
        EXPECT_EQ(pair_similarity(u, v), pair_similarity(v, u));
        EXPECT_GE(pair_similarity(u, v), 0.0);
        EXPECT_LE(pair_similarity(u, v), 1.0);
    }
}

TEST(PredictProba, RowsAreDistributions) {
    const auto b = blobs(30, 4, 9);
    auto m = init_mlp(4, 6, 3);
    const Matrix p = predict_proba(m, b.x);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-9);
        EXPECT_GE(p.row(i).minCoeff(), 0.0);
    }
    EXPECT_THROW(predict_proba(m, Matrix::Zero(2, 3)), Error);
}

TEST(SoftmaxRows, ShiftInvariant) {
    Matrix logits(2, 2);
    logits << 0.3, -1.2, 5.0, 4.0;
    Matrix shifted = logits.array() + 123.0;
    EXPECT_LT((softmax_rows(logits) - softmax_rows(shifted)).norm(), 1e-12);
}

TEST(MlpFile, RoundTrip) {
    testing::TempDir dir;
    auto m = init_mlp(7, 5, 4);
    save_mlp(m, dir.file("m.bin"));
    auto back = load_mlp(dir.file("m.bin"));
    EXPECT_EQ(back.w0, m.w0);
    EXPECT_EQ(back.b0, m.b0);
    EXPECT_EQ(back.w1, m.w1);
    EXPECT_EQ(back.b1, m.b1);
    dir.write("bad.bin", "NOTAMODEL");
    EXPECT_THROW(load_mlp(dir.file("bad.bin")), Error);
}

}  // namespace
}  // namespace bsg
