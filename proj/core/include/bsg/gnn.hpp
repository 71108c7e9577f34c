#pragma once

#include "bsg/error.hpp"
#include "bsg/graph.hpp"
#include "bsg/matrix.hpp"
#include "bsg/sampler.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace bsg {

enum class Fusion { Attention, Mean };

struct GnnConfig {
    std::size_t hidden = 64;
    std::size_t layers = 2;
    std::size_t attention = 32;
    bool concat_intermediate = true;
    Fusion fusion = Fusion::Attention;
    double dropout = 0.3;
    bool self_loops = true;

    /// Width of one relation's final representation.
    std::size_t final_width() const { return concat_intermediate ? (layers + 1) * hidden : hidden; }
};

/// Every learnable tensor of the model. Also used for gradients.
struct GnnParams {
    Matrix w2;                            // hidden x s
    Vector b2;                            // hidden
    std::vector<std::vector<Matrix>> w3;  // [relation][layer - 1], hidden x hidden
    Matrix w_att;                         // attention x final_width
    Vector b_att;                         // attention
    Vector q;                             // attention
    Matrix w_out;                         // 2 x final_width
    Vector b_out;                         // 2

    /// Visits each tensor as a flat buffer, in a fixed order.
    void for_each(const std::function<void(std::string_view, double*, std::size_t)>& fn);
    void for_each(const std::function<void(std::string_view, const double*, std::size_t)>& fn) const;

    GnnParams zeros_like() const;
    double squared_norm() const;
};

struct GnnModel {
    GnnConfig config;
    std::size_t input_width = 0;
    std::size_t relations = 0;
    GnnParams params;
};

GnnModel init_gnn(std::size_t input_width, std::size_t relations, const GnnConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Subgraph tensors

/// Normalized in-neighbor lists: row i averages over its sources.
struct RelationAdjacency {
    std::size_t size = 0;
    std::vector<std::size_t> offsets;  // size + 1
    std::vector<std::uint32_t> sources;
    std::vector<double> weights;  // 1 / c_i per entry of row i
};

/// Builds mean-aggregation rows from directed message edges (src -> dst).
/// Duplicate edges collapse; `self_loops` adds i -> i for every node.
RelationAdjacency build_adjacency(std::size_t size, std::span<const LocalEdge> messages, bool self_loops);

struct PreparedRelation {
    std::vector<std::uint32_t> nodes;  // indices into PreparedSubgraph::nodes; [0] is the root
    RelationAdjacency adj;
};

/// A biased subgraph laid out for the GNN. Stored edges leaving the root
/// are read as messages into the root; other edges keep their direction.
struct PreparedSubgraph {
    NodeId start = 0;
    int label = -1;
    std::vector<NodeId> nodes;  // global ids, [0] is the root
    std::vector<PreparedRelation> relations;
};

PreparedSubgraph prepare_subgraph(const BiasedSubgraph& sub, int label, bool self_loops = true);

// ---------------------------------------------------------------------------
// Building blocks

/// leaky-relu(X W2^T + b2) row-wise.
Matrix init_hidden(const GnnModel& m, const Matrix& x_sub);

/// leaky-relu(mean over in-neighbors of W3 h_j) for relation r, layer l >= 1.
Matrix gcn_layer(const GnnModel& m, std::size_t relation, std::size_t layer, const Matrix& hidden,
                 const RelationAdjacency& adj);

/// Concatenation of the given layer outputs (or only the last one).
Matrix concat_intermediate(std::span<const Matrix> layer_outputs, bool concat = true);

struct Fused {
    Matrix rows;  // batch x final_width
    Vector beta;  // one weight per relation
};

/// Relation weights β from batch-mean attention scores, then the weighted sum.
Fused semantic_attention(const GnnModel& m, std::span<const Matrix> per_relation);

/// softmax(W_O h + b_O) row-wise; column 1 is the bot probability.
Matrix predict(const GnnModel& m, const Matrix& fused);

/// Summed binary cross-entropy over rows plus reg_lambda * ||theta||^2.
double gnn_loss(const GnnModel& m, const Matrix& probs, std::span<const int> labels, double reg_lambda);

// ---------------------------------------------------------------------------
// Batched forward / backward

struct BatchOptions {
    bool training = false;
    double reg_lambda = 0.0;
    std::uint64_t dropout_seed = 0;
    std::size_t workers = 1;
};

struct BatchResult {
    double loss = 0.0;       // data term + regularizer
    double data_loss = 0.0;  // summed cross-entropy only
    Matrix probs;
    Vector beta;
};

/// Full forward pass over a batch; when `grad` is set it receives dL/dtheta.
/// Dropout masks depend only on (dropout_seed, position in batch).
BatchResult run_batch(const GnnModel& m, const Matrix& features, std::span<const PreparedSubgraph* const> batch,
                      const BatchOptions& opts, GnnParams* grad = nullptr);

// ---------------------------------------------------------------------------
// Training

struct GnnTrainConfig {
    std::size_t batch = 64;
    double lr = 1e-3;
    std::size_t epochs = 100;
    std::size_t patience = 10;
    std::uint64_t seed = 0;
    double reg_lambda = 1e-5;
    std::size_t workers = 1;
};

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean per-node cross-entropy
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct GnnTrainResult {
    GnnModel model;  // parameters of the best validation epoch
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
};

class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, GnnModel last_good) : Error(what), last_good_(std::move(last_good)) {}
    const GnnModel& last_good() const noexcept { return last_good_; }

private:
    GnnModel last_good_;
};

GnnTrainResult train_gnn(const GnnConfig& arch, const GnnTrainConfig& cfg, const Matrix& features,
                         const SubgraphCache& cache, const LabelSet& labels);

struct Metrics {
    double accuracy = 0.0;
    double f1 = 0.0;
    std::size_t n = 0;
};

/// Accuracy and F1 with bot as the positive class.
Metrics binary_metrics(std::span<const int> predicted, std::span<const int> truth);

/// Predicts every node of `split` as one batch, without dropout.
Metrics evaluate(const GnnModel& m, const Matrix& features, const SubgraphCache& cache, const LabelSet& labels,
                 Split split);

std::string to_jsonl(const std::vector<EpochLog>& log);

void save_gnn(const GnnModel& m, const std::string& path);
GnnModel load_gnn(const std::string& path);

}  // namespace bsg
