#pragma once

#include "bsg/config.hpp"
#include "bsg/features.hpp"
#include "bsg/graph.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace bsg {

/// Edge probabilities of one relation, indexed [source class][target class]
/// with class 0 = human, 1 = bot.
struct RelationBlocks {
    std::string name;
    std::array<std::array<double, 2>, 2> p{};
};

struct SynthConfig {
    std::size_t n = 2000;
    double bot_fraction = 0.3;
    std::vector<RelationBlocks> relations;
    /// Mean gap between the classes, in feature standard deviations. Also sets
    /// how reliably a user follows its class's behavioral profile.
    double separation = 1.5;
    std::size_t description_dim = 8;
    std::size_t tweet_dim = 8;
    std::size_t num_meta_dim = 4;
    std::size_t cat_meta_dim = 2;
    std::size_t embedding_dim = 16;
    std::size_t tweets_per_user = 30;
    std::size_t topics = 20;
    std::size_t bot_topics = 2;
    std::size_t human_topics = 8;
    std::size_t categories = 20;
    std::size_t window = 12;
    std::uint64_t seed = 0;

    /// Humans densely interlinked, bots sparsely interlinked but heavily
    /// linked to humans, in both "follow" and "mention".
    static SynthConfig mixed_pattern();
    static SynthConfig from_config(const KeyValueConfig& kv);
    void validate() const;
};

struct SynthData {
    HeteroGraph graph;
    FeatureMatrix features;
    LabelSet labels;
    // Raw inputs behind the engineered blocks.
    std::vector<Matrix> tweets;                           // per user, most recent first
    std::vector<std::vector<MonthlyCount>> monthly;       // per user
    std::vector<NamedBlock> dense_blocks;                 // description, tweet, num_meta, cat_meta
};

/// Stochastic block model per relation plus class-conditional features;
/// 70/10/20 train/val/test split. Deterministic in `cfg.seed`.
SynthData generate(const SynthConfig& cfg);

/// Writes edges.tsv, labels.tsv, splits.txt, features.bin, the raw feature
/// inputs and a pipeline.cfg that points at them.
void write_synth(const SynthData& data, const SynthConfig& cfg, const std::string& dir);

}  // namespace bsg
