#pragma once

#include "bsg/features.hpp"
#include "bsg/graph.hpp"
#include "bsg/matrix.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bsg {

inline constexpr double kLeakySlope = 0.01;

/// Two-layer MLP pre-classifier: softmax(W1 * lrelu(W0 x + b0) + b1).
struct MlpModel {
    Matrix w0;  // h x s
    Vector b0;  // h
    Matrix w1;  // 2 x h
    Vector b1;  // 2

    std::size_t input_width() const { return static_cast<std::size_t>(w0.cols()); }
    std::size_t hidden_width() const { return static_cast<std::size_t>(w0.rows()); }
};

struct MlpGradients {
    Matrix w0;
    Vector b0;
    Matrix w1;
    Vector b1;
};

struct MlpConfig {
    std::size_t hidden = 128;
    std::size_t epochs = 200;
    double lr = 1e-2;
    std::uint64_t seed = 0;
    std::size_t patience = 10;
};

struct MlpTrainResult {
    MlpModel model;
    std::vector<double> loss_history;  // fitting-set loss before each update
    double fitting_accuracy = 0.0;
};

/// Xavier-uniform weights, zero biases.
MlpModel init_mlp(std::size_t input_width, std::size_t hidden, std::uint64_t seed);

/// Mean cross-entropy over the rows of `x`; fills `grad` when non-null.
double mlp_loss(const MlpModel& m, const Matrix& x, std::span<const int> y, MlpGradients* grad = nullptr);

/// Full-batch training on rows `x` with labels `y` in {0, 1}. Stops early when
/// the loss has not improved for `patience` epochs.
MlpTrainResult train_mlp(const Matrix& x, std::span<const int> y, const MlpConfig& cfg);

/// Fits on the union of the train and validation masks.
MlpTrainResult train_mlp(const FeatureMatrix& x, const LabelSet& labels, const MlpConfig& cfg);

enum class HiddenMode { PreActivation, Activated };

/// W0 x + b0 (optionally passed through the leaky-relu).
Vector hidden_repr(const MlpModel& m, const Eigen::Ref<const Vector>& x, HiddenMode mode = HiddenMode::PreActivation);
Matrix hidden_matrix(const MlpModel& m, const Matrix& x, HiddenMode mode = HiddenMode::PreActivation);

/// (1 + cos(a, b)) / 2; a zero vector has cosine 0 with anything.
double pair_similarity(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

/// n x 2 class probabilities (column 1 = bot).
Matrix predict_proba(const MlpModel& m, const Matrix& x);

/// Row-wise softmax over logits.
Matrix softmax_rows(const Matrix& logits);

void save_mlp(const MlpModel& m, const std::string& path);
MlpModel load_mlp(const std::string& path);

}  // namespace bsg
