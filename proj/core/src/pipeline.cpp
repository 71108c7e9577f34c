#include "bsg/pipeline.hpp"

#include "bsg/error.hpp"
#include "bsg/homophily.hpp"
#include "bsg/random.hpp"
#include "text.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <ostream>
#include <set>

namespace bsg {

namespace fs = std::filesystem;

namespace {

const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d{
        {"seed", "0"},
        {"out_dir", "bsg-run"},
        {"categories", "20"},
        {"max_tweets", "200"},
        {"kmeans_iters", "100"},
        {"window", "12"},
        {"mlp.hidden", "128"},
        {"mlp.epochs", "200"},
        {"mlp.lr", "0.01"},
        {"mlp.patience", "10"},
        {"hidden_repr", "pre"},
        {"k", "32"},
        {"alpha", "0.15"},
        {"eps", "1e-4"},
        {"lambda", "0.5"},
        {"direction", "out"},
        {"sampling", "biased"},
        {"hidden", "64"},
        {"layers", "2"},
        {"attention", "32"},
        {"concat", "on"},
        {"fusion", "attention"},
        {"dropout", "0.3"},
        {"self_loops", "on"},
        {"lr", "1e-3"},
        {"batch", "64"},
        {"epochs", "100"},
        {"patience", "10"},
        {"reg_lambda", "1e-5"},
    };
    return d;
}

const std::set<std::string>& input_keys() {
    static const std::set<std::string> k{"edges",  "n",      "relations",    "labels",
                                         "splits", "features", "tweets", "tweet_owners", "monthly"};
    return k;
}

// Keys each stage's output depends on, beyond its upstream stages.
const std::vector<std::string> kFeatureKeys{"features", "tweets", "tweet_owners", "monthly", "n",
                                            "categories", "max_tweets", "kmeans_iters", "window", "seed"};
const std::vector<std::string> kPretrainKeys{"labels", "splits", "mlp.hidden", "mlp.epochs", "mlp.lr", "mlp.patience",
                                             "seed"};
const std::vector<std::string> kSampleKeys{"edges", "n", "relations", "labels", "splits", "hidden_repr", "k",
                                           "alpha", "eps", "lambda", "direction", "sampling"};
const std::vector<std::string> kTrainKeys{"labels", "splits", "hidden", "layers", "attention", "concat",
                                          "fusion", "dropout", "self_loops", "lr", "batch", "epochs",
                                          "patience", "reg_lambda", "seed"};

std::string select_keys(const KeyValueConfig& kv, const std::vector<std::string>& keys, std::string_view prefix = {}) {
    std::string out;
    for (const auto& key : keys) out += key + "=" + kv.get_string(key, "") + "\n";
    if (!prefix.empty()) {
        for (const auto& [key, value] : kv.values()) {
            if (key.rfind(prefix, 0) == 0) out += key + "=" + value + "\n";
        }
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path.string() + "'");
    return std::string(std::istreambuf_iterator<char>(in), {});
}

class StageRunner {
public:
    StageRunner(const RunConfig& cfg, std::ostream* log, PipelineResult& result)
        : cfg_(cfg), log_(log), result_(result) {}

    // Runs `body(dir)` unless `dir` already carries a DONE marker.
    template <class Body>
    fs::path run(const std::string& name, std::uint64_t hash, Body&& body) {
        const fs::path dir = fs::path(cfg_.out_dir()) / (name + "-" + hex64(hash));
        StageOutcome outcome{name, dir.string(), fs::exists(dir / "DONE")};
        if (outcome.skipped) {
            if (log_) *log_ << "[" << name << "] cached " << dir.string() << '\n';
        } else {
            try {
                fs::remove_all(dir);
                fs::create_directories(dir);
                write_text(dir / "config.cfg", cfg_.dump());
                body(dir);
                write_text(dir / "DONE", hex64(hash) + "\n");
            } catch (const std::exception& e) {
                throw Error("stage " + name + ": " + e.what());
            }
            if (log_) *log_ << "[" << name << "] wrote " << dir.string() << '\n';
        }
        result_.stages.push_back(outcome);
        return dir;
    }

private:
    const RunConfig& cfg_;
    std::ostream* log_;
    PipelineResult& result_;
};

struct Inputs {
    std::size_t n = 0;
    std::vector<std::string> relations;
};

Inputs resolve_inputs(const KeyValueConfig& kv) {
    Inputs in;
    const auto edges = kv.require_string("edges");
    std::vector<std::string> rels;
    if (kv.has("relations")) {
        const auto list = kv.get_string("relations", "");
        for (auto r : detail::split_on(list, ',')) rels.emplace_back(detail::trim(r));
    }
    std::size_t n = kv.get_size("n", 0);
    if (rels.empty() || n == 0) {
        auto summary = scan_edge_file(edges);
        if (rels.empty()) rels = summary.relations;
        if (n == 0) n = summary.min_nodes;
    }
    in.n = n;
    in.relations = rels;
    return in;
}

Metrics read_metrics(const nlohmann::json& j) {
    Metrics m;
    m.accuracy = j.at("accuracy").get<double>();
    m.f1 = j.at("f1").get<double>();
    m.n = j.at("n").get<std::size_t>();
    return m;
}

nlohmann::json metrics_obj(const Metrics& m) { return {{"accuracy", m.accuracy}, {"f1", m.f1}, {"n", m.n}}; }

}  // namespace

RunConfig RunConfig::resolve(const KeyValueConfig& user, bool require_inputs) {
    std::set<std::string> allowed = input_keys();
    for (const auto& [k, v] : defaults()) allowed.insert(k);
    user.reject_unknown(allowed, {"block."});
    RunConfig cfg;
    for (const auto& [k, v] : defaults()) cfg.values_.set(k, v);
    for (const auto& [k, v] : user.values()) cfg.values_.set(k, v);
    if (require_inputs) {
        cfg.values_.require_string("edges");
        cfg.values_.require_string("labels");
        cfg.values_.require_string("splits");
    }

    // Parse every typed key once so errors surface before any stage runs.
    (void)cfg.seed();
    (void)cfg.category();
    (void)cfg.mlp();
    (void)cfg.hidden_mode();
    (void)cfg.sampler();
    (void)cfg.gnn();
    (void)cfg.train(1);
    return cfg;
}

std::uint64_t RunConfig::seed() const { return values_.get_u64("seed", 0); }
std::string RunConfig::out_dir() const { return values_.get_string("out_dir", "bsg-run"); }

CategoryConfig RunConfig::category() const {
    CategoryConfig c;
    c.categories = values_.get_size("categories", c.categories);
    c.max_tweets = values_.get_size("max_tweets", c.max_tweets);
    c.max_iters = values_.get_size("kmeans_iters", c.max_iters);
    c.seed = derive_seed(seed(), 1);
    if (c.categories == 0) throw Error("categories must be positive");
    return c;
}

MlpConfig RunConfig::mlp() const {
    MlpConfig c;
    c.hidden = values_.get_size("mlp.hidden", c.hidden);
    c.epochs = values_.get_size("mlp.epochs", c.epochs);
    c.lr = values_.get_double("mlp.lr", c.lr);
    c.patience = values_.get_size("mlp.patience", c.patience);
    c.seed = derive_seed(seed(), 2);
    if (c.hidden == 0) throw Error("mlp.hidden must be positive");
    if (!(c.lr > 0.0)) throw Error("mlp.lr must be positive");
    return c;
}

HiddenMode RunConfig::hidden_mode() const {
    const auto v = values_.get_string("hidden_repr", "pre");
    if (v == "pre") return HiddenMode::PreActivation;
    if (v == "post") return HiddenMode::Activated;
    throw Error("hidden_repr expects pre or post, got '" + v + "'");
}

SamplerConfig RunConfig::sampler() const {
    SamplerConfig c;
    c.k = values_.get_size("k", c.k);
    c.alpha = values_.get_double("alpha", c.alpha);
    c.eps = values_.get_double("eps", c.eps);
    c.lambda = values_.get_double("lambda", c.lambda);
    const auto dir = values_.get_string("direction", "out");
    if (dir == "out") {
        c.direction = Direction::Out;
    } else if (dir == "in") {
        c.direction = Direction::In;
    } else {
        throw Error("direction expects out or in, got '" + dir + "'");
    }
    const auto sampling = values_.get_string("sampling", "biased");
    if (sampling == "ppr") {
        c.lambda = 1.0;
    } else if (sampling != "biased") {
        throw Error("sampling expects biased or ppr, got '" + sampling + "'");
    }
    if (c.k == 0) throw Error("k must be positive");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
    if (!(c.eps > 0.0)) throw Error("eps must be positive");
    if (!(c.lambda >= 0.0 && c.lambda <= 1.0)) throw Error("lambda must lie in [0, 1]");
    return c;
}

GnnConfig RunConfig::gnn() const {
    GnnConfig c;
    c.hidden = values_.get_size("hidden", c.hidden);
    c.layers = values_.get_size("layers", c.layers);
    c.attention = values_.get_size("attention", c.attention);
    c.concat_intermediate = values_.get_bool("concat", c.concat_intermediate);
    const auto fusion = values_.get_string("fusion", "attention");
    if (fusion == "attention") {
        c.fusion = Fusion::Attention;
    } else if (fusion == "mean") {
        c.fusion = Fusion::Mean;
    } else {
        throw Error("fusion expects attention or mean, got '" + fusion + "'");
    }
    c.dropout = values_.get_double("dropout", c.dropout);
    c.self_loops = values_.get_bool("self_loops", c.self_loops);
    if (c.hidden == 0 || c.attention == 0) throw Error("hidden and attention must be positive");
    if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw Error("dropout must lie in [0, 1)");
    return c;
}

GnnTrainConfig RunConfig::train(std::size_t workers) const {
    GnnTrainConfig c;
    c.batch = values_.get_size("batch", c.batch);
    c.lr = values_.get_double("lr", c.lr);
    c.epochs = values_.get_size("epochs", c.epochs);
    c.patience = values_.get_size("patience", c.patience);
    c.reg_lambda = values_.get_double("reg_lambda", c.reg_lambda);
    c.seed = derive_seed(seed(), 3);
    c.workers = std::max<std::size_t>(1, workers);
    if (c.batch == 0) throw Error("batch must be positive");
    if (!(c.lr >= 0.0)) throw Error("lr must be non-negative");
    if (!(c.reg_lambda >= 0.0)) throw Error("reg_lambda must be non-negative");
    return c;
}

std::string RunConfig::ablation() const {
    std::vector<std::string> parts;
    if (values_.get_string("sampling", "biased") == "ppr") parts.emplace_back("ppr-only");
    if (!values_.get_bool("concat", true)) parts.emplace_back("no-concat");
    if (values_.get_string("fusion", "attention") == "mean") parts.emplace_back("mean-pooling");
    if (parts.empty()) return "full";
    std::string out = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) out += "+" + parts[i];
    return out;
}

std::vector<NodeId> labeled_nodes(const LabelSet& labels) {
    std::vector<NodeId> out;
    for (auto s : {Split::Train, Split::Val, Split::Test}) {
        const auto& ids = labels.split(s);
        out.insert(out.end(), ids.begin(), ids.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

Metrics mlp_metrics(const MlpModel& m, const FeatureMatrix& features, const LabelSet& labels, Split split) {
    const auto& ids = labels.split(split);
    Matrix x(ids.size(), features.width());
    std::vector<int> truth(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = features.values.row(ids[i]);
        truth[i] = static_cast<int>(labels.label(ids[i]));
    }
    const Matrix probs = predict_proba(m, x);
    std::vector<int> pred(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        pred[i] = probs(static_cast<Eigen::Index>(i), 1) > probs(static_cast<Eigen::Index>(i), 0) ? 1 : 0;
    }
    return binary_metrics(pred, truth);
}

std::string metrics_json(const std::string& ablation, const Metrics& test, const Metrics& val,
                         const Metrics& preclassifier_test) {
    nlohmann::json j{{"ablation", ablation},
                     {"test", metrics_obj(test)},
                     {"val", metrics_obj(val)},
                     {"preclassifier_test", metrics_obj(preclassifier_test)}};
    return j.dump(2) + "\n";
}

PipelineResult run_pipeline(const RunConfig& cfg, std::size_t workers, std::ostream* log) {
    PipelineResult result;
    StageRunner runner(cfg, log, result);
    const auto& kv = cfg.values();
    workers = std::max<std::size_t>(1, workers);

    Inputs inputs;
    try {
        inputs = resolve_inputs(kv);
    } catch (const std::exception& e) {
        throw Error(std::string("stage inputs: ") + e.what());
    }

    // Loaded lazily; cached stages never touch the inputs they do not need.
    std::optional<LabelSet> labels;
    std::optional<HeteroGraph> graph;
    auto get_labels = [&]() -> const LabelSet& {
        if (!labels) labels = load_labels(kv.require_string("labels"), kv.require_string("splits"), inputs.n);
        return *labels;
    };
    auto get_graph = [&]() -> const HeteroGraph& {
        if (!graph) graph = load_graph(kv.require_string("edges"), inputs.n, inputs.relations);
        return *graph;
    };

    const std::uint64_t h_features = fnv1a("features\n" + select_keys(kv, kFeatureKeys, "block."));
    const auto features_dir = runner.run("features", h_features, [&](const fs::path& dir) {
        FeatureMatrix f;
        if (kv.has("features")) {
            f = read_features(kv.get_string("features", ""));
        } else {
            std::vector<NamedBlock> blocks;
            for (auto name : kBlockOrder) {
                const std::string key = "block." + std::string(name);
                if (kv.has(key)) blocks.push_back({std::string(name), read_matrix(kv.get_string(key, ""))});
                if (name == "cat_meta" && kv.has("tweets")) {
                    const Matrix pooled = read_matrix(kv.require_string("tweets"));
                    const auto grouped = group_tweets(pooled, kv.require_string("tweet_owners"), inputs.n);
                    blocks.push_back({"category", category_feature(grouped, cfg.category())});
                }
            }
            if (kv.has("monthly")) {
                const auto counts = read_monthly_counts(kv.get_string("monthly", ""), inputs.n);
                blocks.push_back({"temporal", temporal_feature(counts, kv.get_size("window", 12))});
            }
            if (blocks.empty()) throw Error("no feature inputs: set 'features' or block./tweets/monthly keys");
            f = assemble_features(std::move(blocks));
        }
        if (f.rows() != inputs.n) {
            throw Error("feature rows (" + std::to_string(f.rows()) + ") do not match n (" +
                        std::to_string(inputs.n) + ")");
        }
        write_features(f, (dir / "features.bin").string());
    });
    std::optional<FeatureMatrix> features;
    auto get_features = [&]() -> const FeatureMatrix& {
        if (!features) features = read_features((features_dir / "features.bin").string());
        return *features;
    };

    const std::uint64_t h_pretrain = fnv1a("pretrain\n" + hex64(h_features) + select_keys(kv, kPretrainKeys));
    const auto pretrain_dir = runner.run("pretrain", h_pretrain, [&](const fs::path& dir) {
        auto fit = train_mlp(get_features(), get_labels(), cfg.mlp());
        save_mlp(fit.model, (dir / "mlp.bin").string());
        nlohmann::json j{{"fitting_accuracy", fit.fitting_accuracy},
                         {"epochs", fit.loss_history.size()},
                         {"loss_history", fit.loss_history},
                         {"test", metrics_obj(mlp_metrics(fit.model, get_features(), get_labels(), Split::Test))}};
        write_text(dir / "pretrain.json", j.dump(2) + "\n");
    });

    const std::uint64_t h_sample =
        fnv1a("sample\n" + hex64(h_pretrain) + select_keys(kv, kSampleKeys));
    const auto sample_dir = runner.run("sample", h_sample, [&](const fs::path& dir) {
        const MlpModel mlp = load_mlp((pretrain_dir / "mlp.bin").string());
        const SimilarityIndex sims(mlp, get_features(), cfg.hidden_mode());
        const auto starts = labeled_nodes(get_labels());
        const auto subs = build_biased_subgraphs(get_graph(), sims, starts, cfg.sampler(), workers);
        write_subgraph_cache((dir / "subgraphs.bin").string(), get_graph().relation_names(), subs);
    });

    const std::uint64_t h_train = fnv1a("train\n" + hex64(h_sample) + select_keys(kv, kTrainKeys));
    const auto train_dir = runner.run("train", h_train, [&](const fs::path& dir) {
        const auto cache = read_subgraph_cache((sample_dir / "subgraphs.bin").string());
        auto fit = train_gnn(cfg.gnn(), cfg.train(workers), get_features().values, cache, get_labels());
        save_gnn(fit.model, (dir / "gnn.bin").string());
        write_text(dir / "train_log.jsonl", to_jsonl(fit.log));
    });

    const std::uint64_t h_eval = fnv1a("eval\n" + hex64(h_train));
    const auto eval_dir = runner.run("eval", h_eval, [&](const fs::path& dir) {
        const auto cache = read_subgraph_cache((sample_dir / "subgraphs.bin").string());
        const GnnModel model = load_gnn((train_dir / "gnn.bin").string());
        const auto test = evaluate(model, get_features().values, cache, get_labels(), Split::Test);
        const auto val = evaluate(model, get_features().values, cache, get_labels(), Split::Val);
        const MlpModel mlp = load_mlp((pretrain_dir / "mlp.bin").string());
        const auto pre = mlp_metrics(mlp, get_features(), get_labels(), Split::Test);
        write_text(dir / "metrics.json", metrics_json(cfg.ablation(), test, val, pre));
    });

    const std::uint64_t h_homophily = fnv1a("homophily-report\n" + hex64(h_sample));
    const auto homophily_dir = runner.run("homophily-report", h_homophily, [&](const fs::path& dir) {
        const auto cache = read_subgraph_cache((sample_dir / "subgraphs.bin").string());
        nlohmann::json j{{"graph", nlohmann::json::parse(to_json(homophily_report(get_graph(), get_labels())))},
                         {"subgraphs", nlohmann::json::parse(to_json(homophily_report(cache.subgraphs, get_labels())))}};
        write_text(dir / "homophily.json", j.dump(2) + "\n");
    });

    result.metrics_path = (eval_dir / "metrics.json").string();
    result.homophily_path = (homophily_dir / "homophily.json").string();
    const auto metrics = nlohmann::json::parse(read_text(eval_dir / "metrics.json"));
    result.test = read_metrics(metrics.at("test"));
    result.preclassifier_test = read_metrics(metrics.at("preclassifier_test"));
    const auto pretrain = nlohmann::json::parse(read_text(pretrain_dir / "pretrain.json"));
    result.mlp_fitting_accuracy = pretrain.at("fitting_accuracy").get<double>();
    return result;
}

}  // namespace bsg
