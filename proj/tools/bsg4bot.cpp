#include "bsg/config.hpp"
#include "bsg/error.hpp"
#include "bsg/features.hpp"
#include "bsg/gnn.hpp"
#include "bsg/graph.hpp"
#include "bsg/homophily.hpp"
#include "bsg/pipeline.hpp"
#include "bsg/ppr.hpp"
#include "bsg/preclassifier.hpp"
#include "bsg/random.hpp"
#include "bsg/sampler.hpp"
#include "bsg/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw bsg::Error("cannot write '" + out_path + "'");
    out << text;
}

bsg::Direction parse_direction(const std::string& s) {
    if (s == "out") return bsg::Direction::Out;
    if (s == "in") return bsg::Direction::In;
    throw bsg::Error("direction expects out or in, got '" + s + "'");
}

std::vector<std::string> split_relations(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (!s.empty() && pos <= s.size()) {
        auto next = s.find(',', pos);
        if (next == std::string::npos) next = s.size();
        out.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

struct GraphArgs {
    std::string edges;
    std::string relations;
    std::size_t n = 0;

    void add(CLI::App* cmd) {
        cmd->add_option("--graph,--edges", edges, "Edge list (src dst relation)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--relations", relations, "Comma-separated relation order");
        cmd->add_option("--n", n, "Node count (default: largest id + 1)");
    }

    bsg::HeteroGraph load() {
        auto rels = split_relations(relations);
        if (rels.empty() || n == 0) {
            auto summary = bsg::scan_edge_file(edges);
            if (rels.empty()) rels = summary.relations;
            if (n == 0) n = summary.min_nodes;
        }
        return bsg::load_graph(edges, n, rels);
    }
};

struct LabelArgs {
    std::string labels;
    std::string splits;

    void add(CLI::App* cmd, bool splits_required = true) {
        cmd->add_option("--labels", labels, "Label file (node<TAB>label)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--splits", splits, "Split file with [train]/[val]/[test] sections")
            ->required(splits_required)
            ->check(CLI::ExistingFile);
    }

    bsg::LabelSet load(std::size_t n) const { return bsg::load_labels(labels, splits, n); }
};

json metrics_obj(const bsg::Metrics& m) { return {{"accuracy", m.accuracy}, {"f1", m.f1}, {"n", m.n}}; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bot detection on heterogeneous graphs with biased subgraph sampling"};
    app.require_subcommand(1);
    std::size_t workers = 1;
    app.add_option("--workers", workers, "Worker threads for intra-stage parallelism")->check(CLI::PositiveNumber);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic graph");
    std::string synth_config, synth_out;
    std::optional<std::uint64_t> synth_seed;
    synth->add_option("--config", synth_config, "Synthetic generator config")->check(CLI::ExistingFile);
    synth->add_option("--out-dir", synth_out, "Output directory")->required();
    synth->add_option("--seed", synth_seed, "Override the config seed");

    // features
    auto* features = app.add_subcommand("features", "Assemble the node feature matrix");
    std::size_t feat_n = 0;
    std::string feat_tweets, feat_owners, feat_monthly, feat_out;
    std::vector<std::string> feat_blocks;
    bsg::CategoryConfig cat;
    std::size_t window = 12;
    features->add_option("--n", feat_n, "Number of users")->required();
    features->add_option("--tweets", feat_tweets, "Pooled tweet embeddings matrix")->check(CLI::ExistingFile);
    features->add_option("--tweet-owners", feat_owners, "Owner id per tweet row")->check(CLI::ExistingFile);
    features->add_option("--monthly", feat_monthly, "Monthly tweet counts")->check(CLI::ExistingFile);
    features->add_option("--block", feat_blocks, "Precomputed block as name=path (repeatable)");
    features->add_option("--categories", cat.categories, "Tweet content categories");
    features->add_option("--max-tweets", cat.max_tweets, "Most recent tweets used per user");
    features->add_option("--kmeans-iters", cat.max_iters, "Lloyd iteration cap");
    features->add_option("--window", window, "Months in the temporal block");
    features->add_option("--seed", cat.seed, "Clustering seed");
    features->add_option("--out", feat_out, "Output feature file")->required();

    // pretrain
    auto* pretrain = app.add_subcommand("pretrain", "Fit the MLP pre-classifier");
    std::string pre_features, pre_out;
    LabelArgs pre_labels;
    bsg::MlpConfig mlp_cfg;
    pretrain->add_option("--features", pre_features, "Feature file")->required()->check(CLI::ExistingFile);
    pre_labels.add(pretrain);
    pretrain->add_option("--hidden", mlp_cfg.hidden, "Hidden width");
    pretrain->add_option("--epochs", mlp_cfg.epochs, "Maximum epochs");
    pretrain->add_option("--lr", mlp_cfg.lr, "Adam learning rate");
    pretrain->add_option("--patience", mlp_cfg.patience, "Early-stopping patience");
    pretrain->add_option("--seed", mlp_cfg.seed, "Initialization seed");
    pretrain->add_option("--out", pre_out, "Output model file")->required();

    // ppr
    auto* ppr = app.add_subcommand("ppr", "Approximate personalized PageRank from one node");
    GraphArgs ppr_graph;
    std::string ppr_relation, ppr_direction = "out";
    bsg::NodeId ppr_start = 0;
    double ppr_alpha = 0.15, ppr_eps = 1e-4;
    std::size_t ppr_top = 0;
    ppr_graph.add(ppr);
    ppr->add_option("--relation", ppr_relation, "Relation name")->required();
    ppr->add_option("--start", ppr_start, "Start node")->required();
    ppr->add_option("--alpha", ppr_alpha, "Teleport probability");
    ppr->add_option("--eps", ppr_eps, "Push threshold");
    ppr->add_option("--direction", ppr_direction, "out or in");
    ppr->add_flag_callback("--reverse", [&ppr_direction] { ppr_direction = "in"; }, "Walk over in-neighbors");
    ppr->add_option("--top", ppr_top, "Rows to print (0 prints all)");

    // sample
    auto* sample = app.add_subcommand("sample", "Build biased subgraphs for every labeled node");
    GraphArgs sample_graph;
    LabelArgs sample_labels;
    std::string sample_features, sample_mlp, sample_out, sample_direction = "out", sample_repr = "pre";
    std::string sample_nodes = "train,val,test";
    bsg::SamplerConfig sampler_cfg;
    sample_graph.add(sample);
    sample_labels.add(sample);
    sample->add_option("--features", sample_features, "Feature file")->required()->check(CLI::ExistingFile);
    sample->add_option("--model,--mlp", sample_mlp, "Pre-classifier model")->required()->check(CLI::ExistingFile);
    sample->add_option("--k", sampler_cfg.k, "Nodes kept per relation");
    sample->add_option("--alpha", sampler_cfg.alpha, "Teleport probability");
    sample->add_option("--eps", sampler_cfg.eps, "Push threshold");
    sample->add_option("--lambda", sampler_cfg.lambda, "Weight of PPR against similarity");
    sample->add_option("--direction", sample_direction, "out or in");
    sample->add_flag_callback("--reverse", [&sample_direction] { sample_direction = "in"; }, "Walk over in-neighbors");
    sample->add_option("--hidden-repr", sample_repr, "pre or post activation similarity");
    sample->add_option("--nodes", sample_nodes, "Start nodes: comma-separated splits or 'all'");
    sample->add_option("--out", sample_out, "Output subgraph cache")->required();

    // train
    auto* train = app.add_subcommand("train", "Train the subgraph GNN");
    std::string train_features, train_subgraphs, train_out, train_log, train_config;
    LabelArgs train_labels;
    bsg::KeyValueConfig train_kv;
    train->add_option("--features", train_features, "Feature file")->required()->check(CLI::ExistingFile);
    train->add_option("--cache,--subgraphs", train_subgraphs, "Subgraph cache")->required()->check(CLI::ExistingFile);
    train_labels.add(train);
    train->add_option("--config", train_config, "Run config; flags below override it")->check(CLI::ExistingFile);
    const std::pair<const char*, const char*> train_keys[] = {
        {"--hidden", "hidden"},         {"--layers", "layers"},   {"--attention", "attention"},
        {"--concat", "concat"},         {"--fusion", "fusion"},   {"--dropout", "dropout"},
        {"--self-loops", "self_loops"}, {"--batch", "batch"},     {"--lr", "lr"},
        {"--epochs", "epochs"},         {"--patience", "patience"}, {"--reg-lambda", "reg_lambda"},
        {"--seed", "seed"},
    };
    for (const auto& [flag, key] : train_keys) {
        train->add_option_function<std::string>(
            flag, [&train_kv, key = std::string(key)](const std::string& v) { train_kv.set(key, v); },
            "Overrides config key '" + std::string(key) + "'");
    }
    train->add_option("--out", train_out, "Output model file")->required();
    train->add_option("--log", train_log, "Per-epoch JSONL log");

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a trained GNN");
    std::string eval_features, eval_subgraphs, eval_model, eval_split = "test", eval_out;
    LabelArgs eval_labels;
    eval->add_option("--features", eval_features, "Feature file")->required()->check(CLI::ExistingFile);
    eval->add_option("--cache,--subgraphs", eval_subgraphs, "Subgraph cache")->required()->check(CLI::ExistingFile);
    eval->add_option("--model", eval_model, "GNN model file")->required()->check(CLI::ExistingFile);
    eval_labels.add(eval);
    eval->add_option("--split", eval_split, "train, val or test");
    eval->add_option("--out", eval_out, "Write the JSON here instead of stdout");

    // homophily-report
    auto* homophily = app.add_subcommand("homophily-report", "Node and graph homophily");
    GraphArgs hom_graph;
    LabelArgs hom_labels;
    std::string hom_subgraphs, hom_out;
    hom_graph.add(homophily);
    hom_labels.add(homophily, false);
    homophily->add_option("--subgraphs", hom_subgraphs, "Also report over a subgraph cache")
        ->check(CLI::ExistingFile);
    homophily->add_option("--out", hom_out, "Write the JSON here instead of stdout");

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "Run every stage from one config");
    std::string pipe_config;
    std::vector<std::string> pipe_overrides;
    pipeline->add_option("--config", pipe_config, "Run config")->required()->check(CLI::ExistingFile);
    pipeline->add_option("--set", pipe_overrides, "Override a key as key=value (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*synth) {
            bsg::SynthConfig cfg = synth_config.empty()
                                       ? bsg::SynthConfig::mixed_pattern()
                                       : bsg::SynthConfig::from_config(bsg::KeyValueConfig::parse_file(synth_config));
            if (synth_seed) cfg.seed = *synth_seed;
            auto data = bsg::generate(cfg);
            bsg::write_synth(data, cfg, synth_out);
            json j{{"n", data.graph.num_nodes()},
                   {"edges", data.graph.total_edges()},
                   {"features", data.features.width()},
                   {"homophily", bsg::graph_homophily(data.graph, data.labels)},
                   {"out_dir", synth_out}};
            std::cout << j.dump() << '\n';
        } else if (*features) {
            std::vector<bsg::NamedBlock> blocks;
            std::map<std::string, std::string> given;
            for (const auto& spec : feat_blocks) {
                const auto eq = spec.find('=');
                if (eq == std::string::npos) throw bsg::Error("--block expects name=path, got '" + spec + "'");
                given[spec.substr(0, eq)] = spec.substr(eq + 1);
            }
            for (const auto& [name, path] : given) {
                bool known = false;
                for (auto b : bsg::kBlockOrder) known = known || b == name;
                if (!known || name == "category" || name == "temporal") {
                    throw bsg::Error("--block: '" + name + "' is not a precomputed block name");
                }
            }
            for (auto name : bsg::kBlockOrder) {
                auto it = given.find(std::string(name));
                if (it != given.end()) blocks.push_back({it->first, bsg::read_matrix(it->second)});
                if (name == "cat_meta" && !feat_tweets.empty()) {
                    if (feat_owners.empty()) throw bsg::Error("--tweets requires --tweet-owners");
                    auto grouped = bsg::group_tweets(bsg::read_matrix(feat_tweets), feat_owners, feat_n);
                    blocks.push_back({"category", bsg::category_feature(grouped, cat)});
                }
            }
            if (!feat_monthly.empty()) {
                blocks.push_back({"temporal", bsg::temporal_feature(bsg::read_monthly_counts(feat_monthly, feat_n), window)});
            }
            if (blocks.empty()) throw bsg::Error("no feature inputs given");
            auto f = bsg::assemble_features(std::move(blocks));
            if (f.rows() != feat_n) throw bsg::Error("block rows do not match --n");
            bsg::write_features(f, feat_out);
            json schema = json::array();
            for (const auto& b : f.schema) schema.push_back({{"name", b.name}, {"width", b.width}});
            std::cout << json{{"rows", f.rows()}, {"width", f.width()}, {"schema", schema}}.dump() << '\n';
        } else if (*pretrain) {
            auto f = bsg::read_features(pre_features);
            auto labels = pre_labels.load(f.rows());
            auto fit = bsg::train_mlp(f, labels, mlp_cfg);
            bsg::save_mlp(fit.model, pre_out);
            json j{{"fitting_accuracy", fit.fitting_accuracy},
                   {"epochs", fit.loss_history.size()},
                   {"test", metrics_obj(bsg::mlp_metrics(fit.model, f, labels, bsg::Split::Test))}};
            std::cout << j.dump() << '\n';
        } else if (*ppr) {
            auto g = ppr_graph.load();
            if (ppr_start >= g.num_nodes()) throw bsg::Error("--start is out of range");
            auto r = bsg::approx_ppr(g.relation(ppr_relation), ppr_start, ppr_alpha, ppr_eps,
                                     parse_direction(ppr_direction));
            const auto ranked = bsg::ranked(r);
            std::cout << std::setprecision(17);
            for (std::size_t i = 0; i < ranked.size() && (ppr_top == 0 || i < ppr_top); ++i) {
                std::cout << ranked[i].first << '\t' << ranked[i].second << '\n';
            }
        } else if (*sample) {
            auto g = sample_graph.load();
            auto f = bsg::read_features(sample_features);
            if (f.rows() != g.num_nodes()) throw bsg::Error("feature rows do not match the graph's node count");
            auto labels = sample_labels.load(g.num_nodes());
            sampler_cfg.direction = parse_direction(sample_direction);
            bsg::HiddenMode mode;
            if (sample_repr == "pre") {
                mode = bsg::HiddenMode::PreActivation;
            } else if (sample_repr == "post") {
                mode = bsg::HiddenMode::Activated;
            } else {
                throw bsg::Error("--hidden-repr expects pre or post");
            }
            const bsg::SimilarityIndex sims(bsg::load_mlp(sample_mlp), f, mode);
            std::vector<bsg::NodeId> starts;
            if (sample_nodes == "all") {
                starts.resize(g.num_nodes());
                for (std::size_t v = 0; v < starts.size(); ++v) starts[v] = static_cast<bsg::NodeId>(v);
            } else {
                for (const auto& name : split_relations(sample_nodes)) {
                    const auto& ids = labels.split(bsg::parse_split(name));
                    starts.insert(starts.end(), ids.begin(), ids.end());
                }
                std::sort(starts.begin(), starts.end());
                starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
            }
            auto subs = bsg::build_biased_subgraphs(g, sims, starts, sampler_cfg, workers);
            bsg::write_subgraph_cache(sample_out, g.relation_names(), subs);
            std::cout << json{{"subgraphs", subs.size()},
                              {"homophily", bsg::graph_homophily(subs, labels)}}.dump()
                      << '\n';
        } else if (*train) {
            auto f = bsg::read_features(train_features);
            auto labels = train_labels.load(f.rows());
            auto cache = bsg::read_subgraph_cache(train_subgraphs);
            auto kv = train_config.empty() ? bsg::KeyValueConfig{} : bsg::KeyValueConfig::parse_file(train_config);
            for (const auto& [key, value] : train_kv.values()) kv.set(key, value);
            const auto cfg = bsg::RunConfig::resolve(kv, false);
            auto fit = bsg::train_gnn(cfg.gnn(), cfg.train(workers), f.values, cache, labels);
            bsg::save_gnn(fit.model, train_out);
            if (!train_log.empty()) emit(bsg::to_jsonl(fit.log), train_log);
            std::cout << json{{"epochs", fit.log.size()}, {"best_epoch", fit.best_epoch}}.dump() << '\n';
        } else if (*eval) {
            auto f = bsg::read_features(eval_features);
            auto labels = eval_labels.load(f.rows());
            auto cache = bsg::read_subgraph_cache(eval_subgraphs);
            auto model = bsg::load_gnn(eval_model);
            auto m = bsg::evaluate(model, f.values, cache, labels, bsg::parse_split(eval_split));
            json j = metrics_obj(m);
            j["split"] = eval_split;
            emit(j.dump(2) + "\n", eval_out);
        } else if (*homophily) {
            auto g = hom_graph.load();
            auto labels = hom_labels.load(g.num_nodes());
            json j{{"graph", json::parse(bsg::to_json(bsg::homophily_report(g, labels)))}};
            if (!hom_subgraphs.empty()) {
                auto cache = bsg::read_subgraph_cache(hom_subgraphs);
                j["subgraphs"] = json::parse(bsg::to_json(bsg::homophily_report(cache.subgraphs, labels)));
            }
            emit(j.dump(2) + "\n", hom_out);
        } else if (*pipeline) {
            auto kv = bsg::KeyValueConfig::parse_file(pipe_config);
            for (const auto& o : pipe_overrides) {
                const auto eq = o.find('=');
                if (eq == std::string::npos) throw bsg::Error("--set expects key=value, got '" + o + "'");
                kv.set(o.substr(0, eq), o.substr(eq + 1));
            }
            auto cfg = bsg::RunConfig::resolve(kv);
            auto result = bsg::run_pipeline(cfg, workers, &std::cerr);
            json stages = json::array();
            for (const auto& s : result.stages) stages.push_back({{"stage", s.name}, {"dir", s.dir}, {"skipped", s.skipped}});
            json j{{"ablation", cfg.ablation()},
                   {"test", metrics_obj(result.test)},
                   {"preclassifier_test", metrics_obj(result.preclassifier_test)},
                   {"metrics", result.metrics_path},
                   {"homophily", result.homophily_path},
                   {"stages", stages}};
            std::cout << j.dump() << '\n';
        }
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        std::cerr << "error: " << msg << '\n';
        return 1;
    }
    return 0;
}
