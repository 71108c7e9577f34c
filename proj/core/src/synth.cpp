#include "bsg/synth.hpp"

#include "bsg/error.hpp"
#include "bsg/random.hpp"
#include "text.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace bsg {

namespace fs = std::filesystem;

SynthConfig SynthConfig::mixed_pattern() {
    SynthConfig cfg;
    // p[src][dst], 0 = human, 1 = bot
    cfg.relations.push_back({"follow", {{{0.010, 0.001}, {0.010, 0.001}}}});
    cfg.relations.push_back({"mention", {{{0.005, 0.001}, {0.008, 0.001}}}});
    return cfg;
}

SynthConfig SynthConfig::from_config(const KeyValueConfig& kv) {
    kv.reject_unknown({"preset", "n", "bot_fraction", "relations", "separation", "seed", "embedding_dim",
                       "tweets_per_user", "topics", "bot_topics", "human_topics", "categories", "window"},
                      {"p.", "dim."});
    const auto preset = kv.get_string("preset", "mixed-pattern");
    if (preset != "mixed-pattern") throw Error("synth: unknown preset '" + preset + "'");
    SynthConfig cfg = mixed_pattern();
    cfg.n = kv.get_size("n", cfg.n);
    cfg.bot_fraction = kv.get_double("bot_fraction", cfg.bot_fraction);
    cfg.separation = kv.get_double("separation", cfg.separation);
    cfg.seed = kv.get_u64("seed", cfg.seed);
    cfg.embedding_dim = kv.get_size("embedding_dim", cfg.embedding_dim);
    cfg.tweets_per_user = kv.get_size("tweets_per_user", cfg.tweets_per_user);
    cfg.topics = kv.get_size("topics", cfg.topics);
    cfg.bot_topics = kv.get_size("bot_topics", cfg.bot_topics);
    cfg.human_topics = kv.get_size("human_topics", cfg.human_topics);
    cfg.categories = kv.get_size("categories", cfg.categories);
    cfg.window = kv.get_size("window", cfg.window);
    cfg.description_dim = kv.get_size("dim.description", cfg.description_dim);
    cfg.tweet_dim = kv.get_size("dim.tweet", cfg.tweet_dim);
    cfg.num_meta_dim = kv.get_size("dim.num_meta", cfg.num_meta_dim);
    cfg.cat_meta_dim = kv.get_size("dim.cat_meta", cfg.cat_meta_dim);

    if (kv.has("relations")) {
        std::vector<RelationBlocks> rels;
        const auto list = kv.get_string("relations", "");
        for (auto name : detail::split_on(list, ',')) {
            RelationBlocks rb;
            rb.name = std::string(detail::trim(name));
            const auto key = "p." + rb.name;
            if (!kv.has(key)) {
                auto it = std::find_if(cfg.relations.begin(), cfg.relations.end(),
                                       [&](const RelationBlocks& b) { return b.name == rb.name; });
                if (it == cfg.relations.end()) throw Error("synth: relation '" + rb.name + "' needs key " + key);
                rels.push_back(*it);
                continue;
            }
            rels.push_back(rb);
        }
        cfg.relations = std::move(rels);
    }
    for (auto& rb : cfg.relations) {
        const auto key = "p." + rb.name;
        if (!kv.has(key)) continue;
        const auto text = kv.get_string(key, "");
        auto parts = detail::split_on(text, ',');
        if (parts.size() != 4) throw Error("synth: " + key + " expects hh,hb,bh,bb");
        double v[4];
        for (int i = 0; i < 4; ++i) {
            auto d = detail::parse_double(detail::trim(parts[static_cast<std::size_t>(i)]));
            if (!d) throw Error("synth: malformed probability in " + key);
            v[i] = *d;
        }
        rb.p = {{{v[0], v[1]}, {v[2], v[3]}}};
    }
    for (const auto& [key, value] : kv.values()) {
        if (key.rfind("p.", 0) == 0) {
            const auto name = key.substr(2);
            bool known = false;
            for (const auto& rb : cfg.relations) known = known || rb.name == name;
            if (!known) throw Error("synth: " + key + " names a relation not in 'relations'");
        }
        if (key.rfind("dim.", 0) == 0) {
            const auto name = key.substr(4);
            if (name != "description" && name != "tweet" && name != "num_meta" && name != "cat_meta") {
                throw Error("synth: unknown key '" + key + "'");
            }
        }
    }
    cfg.validate();
    return cfg;
}

void SynthConfig::validate() const {
    if (n < 4) throw Error("synth: n must be at least 4");
    if (!(bot_fraction >= 0.0 && bot_fraction <= 1.0)) throw Error("synth: bot_fraction must lie in [0, 1]");
    if (!(separation >= 0.0)) throw Error("synth: separation must be non-negative");
    if (relations.empty()) throw Error("synth: at least one relation is required");
    for (const auto& rb : relations) {
        for (const auto& row : rb.p) {
            for (double p : row) {
                if (!(p >= 0.0 && p <= 1.0)) throw Error("synth: probabilities of '" + rb.name + "' must lie in [0, 1]");
            }
        }
    }
    if (topics == 0 || bot_topics == 0 || human_topics == 0 || bot_topics > topics || human_topics > topics) {
        throw Error("synth: topic counts must satisfy 1 <= bot_topics, human_topics <= topics");
    }
    if (window == 0 || embedding_dim == 0 || categories == 0) throw Error("synth: dimensions must be positive");
    if (tweets_per_user > 0 && n * tweets_per_user < categories) {
        throw Error("synth: fewer tweets than categories");
    }
}

namespace {

std::vector<NodeId> pick_distinct(std::size_t count, std::size_t range, Rng& rng) {
    std::vector<NodeId> all(range);
    for (std::size_t i = 0; i < range; ++i) all[i] = static_cast<NodeId>(i);
    shuffle(all.begin(), all.end(), rng);
    all.resize(count);
    return all;
}

}  // namespace

SynthData generate(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.n;

    // Labels: exactly round(n * bot_fraction) bots.
    std::vector<Label> labels(n, Label::Human);
    {
        Rng rng(derive_seed(cfg.seed, 0));
        const auto bots = static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.bot_fraction));
        for (NodeId v : pick_distinct(bots, n, rng)) labels[v] = Label::Bot;
    }
    std::vector<NodeId> train, val, test;
    {
        Rng rng(derive_seed(cfg.seed, 1));
        auto order = pick_distinct(n, n, rng);
        const auto n_train = n * 7 / 10;
        const auto n_val = n / 10;
        train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
        val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                   order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
        test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
        std::sort(train.begin(), train.end());
        std::sort(val.begin(), val.end());
        std::sort(test.begin(), test.end());
    }
    auto cls = [&](std::size_t v) { return labels[v] == Label::Bot ? 1 : 0; };

    std::vector<Edge> edges;
    std::vector<std::string> names;
    for (std::size_t r = 0; r < cfg.relations.size(); ++r) {
        const auto& rb = cfg.relations[r];
        names.push_back(rb.name);
        Rng rng(derive_seed(cfg.seed, 10 + r));
        for (std::size_t i = 0; i < n; ++i) {
            const auto& row = rb.p[static_cast<std::size_t>(cls(i))];
            for (std::size_t j = 0; j < n; ++j) {
                const double u = uniform01(rng);
                if (i != j && u < row[static_cast<std::size_t>(cls(j))]) {
                    edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), r});
                }
            }
        }
    }

    // Users follow their class's behavioral profile with the same reliability
    // a threshold on the dense blocks achieves: Phi(separation / 2).
    const double fidelity = 0.5 * std::erfc(-cfg.separation / (2.0 * std::sqrt(2.0)));
    std::vector<int> profile(n);
    {
        Rng rng(derive_seed(cfg.seed, 99));
        for (std::size_t v = 0; v < n; ++v) profile[v] = uniform01(rng) < fidelity ? cls(v) : 1 - cls(v);
    }

    SynthData data{HeteroGraph(n, names, edges), FeatureMatrix{}, LabelSet({}, {}, {}, {}), {}, {}, {}};
    data.labels = LabelSet(labels, std::move(train), std::move(val), std::move(test));

    // Dense blocks: class means at +-separation/2 along one random unit direction.
    {
        Rng rng(derive_seed(cfg.seed, 100));
        const std::size_t widths[] = {cfg.description_dim, cfg.tweet_dim, cfg.num_meta_dim, cfg.cat_meta_dim};
        const char* block_names[] = {"description", "tweet", "num_meta", "cat_meta"};
        std::size_t total = 0;
        for (auto w : widths) total += w;
        Vector dir(static_cast<Eigen::Index>(total));
        for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = standard_normal(rng);
        if (total > 0) dir.normalize();
        Matrix dense(n, total);
        for (std::size_t v = 0; v < n; ++v) {
            const double sign = cls(v) == 1 ? 0.5 : -0.5;
            for (std::size_t c = 0; c < total; ++c) {
                dense(v, c) = sign * cfg.separation * dir[static_cast<Eigen::Index>(c)] + standard_normal(rng);
            }
        }
        std::size_t col = 0;
        for (int b = 0; b < 4; ++b) {
            if (widths[b] == 0) continue;
            data.dense_blocks.push_back({block_names[b], dense.middleCols(col, widths[b])});
            col += widths[b];
        }
    }

    // Tweets: bots concentrate on a few topics, humans spread over many.
    {
        Rng rng(derive_seed(cfg.seed, 101));
        Matrix centers(cfg.topics, cfg.embedding_dim);
        for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] = 3.0 * standard_normal(rng);
        data.tweets.resize(n);
        for (std::size_t v = 0; v < n; ++v) {
            const auto own = pick_distinct(profile[v] == 1 ? cfg.bot_topics : cfg.human_topics, cfg.topics, rng);
            Matrix& t = data.tweets[v];
            t.resize(cfg.tweets_per_user, cfg.embedding_dim);
            for (std::size_t k = 0; k < cfg.tweets_per_user; ++k) {
                const auto topic = own[uniform_index(rng, own.size())];
                for (std::size_t d = 0; d < cfg.embedding_dim; ++d) {
                    t(k, d) = centers(topic, d) + 0.3 * standard_normal(rng);
                }
            }
        }
    }

    // Monthly activity: bots post at a steady rate, humans in bursts.
    {
        Rng rng(derive_seed(cfg.seed, 102));
        data.monthly.resize(n);
        for (std::size_t v = 0; v < n; ++v) {
            const double rate = uniform(rng, 5.0, 50.0);
            for (std::size_t m = 0; m < cfg.window; ++m) {
                double count;
                if (profile[v] == 1) {
                    count = rate * (1.0 + 0.1 * standard_normal(rng));
                } else {
                    count = uniform01(rng) < 0.2 ? rate * uniform(rng, 3.0, 6.0) : rate * uniform(rng, 0.0, 0.5);
                }
                data.monthly[v].push_back({m, std::max(0.0, std::round(count))});
            }
        }
    }

    std::vector<NamedBlock> blocks = data.dense_blocks;
    CategoryConfig cat;
    cat.categories = cfg.categories;
    cat.seed = derive_seed(cfg.seed, 103);
    cat.max_iters = 50;
    blocks.push_back({"category", category_feature(data.tweets, cat)});
    blocks.push_back({"temporal", temporal_feature(data.monthly, cfg.window)});
    data.features = assemble_features(std::move(blocks));
    return data;
}

void write_synth(const SynthData& data, const SynthConfig& cfg, const std::string& dir) {
    fs::create_directories(dir);
    const auto root = fs::absolute(fs::path(dir));
    auto at = [&](const char* name) { return (root / name).string(); };

    write_graph(data.graph, at("edges.tsv"));
    write_labels(data.labels, at("labels.tsv"), at("splits.txt"));
    write_features(data.features, at("features.bin"));
    for (const auto& block : data.dense_blocks) write_matrix(block.values, (root / (block.name + ".bin")).string());

    std::size_t total = 0;
    for (const auto& t : data.tweets) total += static_cast<std::size_t>(t.rows());
    Matrix pooled(total, cfg.embedding_dim);
    {
        std::ofstream owners(at("tweet_owners.tsv"));
        std::size_t row = 0;
        for (std::size_t v = 0; v < data.tweets.size(); ++v) {
            for (Eigen::Index k = 0; k < data.tweets[v].rows(); ++k) {
                pooled.row(row++) = data.tweets[v].row(k);
                owners << v << '\n';
            }
        }
    }
    write_matrix(pooled, at("tweets.bin"));
    {
        std::ofstream monthly(at("monthly.tsv"));
        for (std::size_t v = 0; v < data.monthly.size(); ++v) {
            for (const auto& [m, c] : data.monthly[v]) monthly << v << '\t' << m << '\t' << c << '\n';
        }
    }

    std::ofstream out(at("pipeline.cfg"));
    out << "# generated by synth (seed " << cfg.seed << ")\n";
    out << "edges = " << at("edges.tsv") << '\n';
    out << "n = " << data.graph.num_nodes() << '\n';
    out << "relations = ";
    for (std::size_t r = 0; r < data.graph.num_relations(); ++r) out << (r ? "," : "") << data.graph.relation_names()[r];
    out << '\n';
    out << "labels = " << at("labels.tsv") << '\n';
    out << "splits = " << at("splits.txt") << '\n';
    out << "tweets = " << at("tweets.bin") << '\n';
    out << "tweet_owners = " << at("tweet_owners.tsv") << '\n';
    out << "monthly = " << at("monthly.tsv") << '\n';
    for (const auto& block : data.dense_blocks) out << "block." << block.name << " = " << (root / (block.name + ".bin")).string() << '\n';
    out << "categories = " << cfg.categories << '\n';
    out << "window = " << cfg.window << '\n';
    out << "seed = " << cfg.seed << '\n';
    out << "out_dir = " << at("run") << '\n';
}

}  // namespace bsg
