#pragma once

#include "bsg/config.hpp"
#include "bsg/features.hpp"
#include "bsg/gnn.hpp"
#include "bsg/preclassifier.hpp"
#include "bsg/sampler.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace bsg {

/// Every tunable of a run as one flat document with defaults filled in.
/// Unknown keys are rejected.
class RunConfig {
public:
    /// With `require_inputs` off, the input paths may be missing; used by
    /// single-stage commands that take their inputs as flags.
    static RunConfig resolve(const KeyValueConfig& user, bool require_inputs = true);
    static RunConfig from_file(const std::string& path) { return resolve(KeyValueConfig::parse_file(path)); }

    const KeyValueConfig& values() const { return values_; }
    std::string dump() const { return values_.dump(); }

    std::uint64_t seed() const;
    std::string out_dir() const;

    CategoryConfig category() const;
    MlpConfig mlp() const;
    HiddenMode hidden_mode() const;
    SamplerConfig sampler() const;
    GnnConfig gnn() const;
    GnnTrainConfig train(std::size_t workers) const;

    /// "full", or the ablation switches joined with '+': ppr-only, no-concat,
    /// mean-pooling.
    std::string ablation() const;

private:
    KeyValueConfig values_;
};

struct StageOutcome {
    std::string name;
    std::string dir;
    bool skipped = false;
};

struct PipelineResult {
    std::vector<StageOutcome> stages;
    std::string metrics_path;
    std::string homophily_path;
    Metrics test;
    Metrics preclassifier_test;
    double mlp_fitting_accuracy = 0.0;
};

/// features -> pretrain -> sample -> train -> eval -> homophily-report.
/// Each stage writes to `out_dir/<stage>-<hash>/`, where the hash covers the
/// stage's own keys and its upstream hashes; a directory holding a DONE
/// marker is reused as is. Failures are rethrown as "stage <name>: <cause>".
PipelineResult run_pipeline(const RunConfig& cfg, std::size_t workers = 1, std::ostream* log = nullptr);

/// Nodes that get a subgraph: every node of the train, val and test splits,
/// ascending.
std::vector<NodeId> labeled_nodes(const LabelSet& labels);

/// Metrics of the pre-classifier's argmax on one split.
Metrics mlp_metrics(const MlpModel& m, const FeatureMatrix& features, const LabelSet& labels, Split split);

std::string metrics_json(const std::string& ablation, const Metrics& test, const Metrics& val,
                         const Metrics& preclassifier_test);

}  // namespace bsg
