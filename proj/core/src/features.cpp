#include "bsg/features.hpp"

#include "bsg/error.hpp"
#include "binary_io.hpp"
#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace bsg {

Matrix category_feature(const std::vector<Matrix>& tweets_per_user, const CategoryConfig& cfg) {
    const std::size_t n = tweets_per_user.size();
    const std::size_t k = cfg.categories;

    Eigen::Index dim = -1;
    std::size_t total = 0;
    for (const auto& tweets : tweets_per_user) {
        if (tweets.rows() == 0) continue;
        if (dim < 0) dim = tweets.cols();
        if (tweets.cols() != dim) {
            throw Error("category_feature: embedding dimension mismatch (" + std::to_string(tweets.cols()) + " vs " +
                        std::to_string(dim) + ")");
        }
        total += std::min<std::size_t>(static_cast<std::size_t>(tweets.rows()), cfg.max_tweets);
    }

    Matrix block = Matrix::Zero(n, k + 1);
    if (total == 0) return block;

    Matrix pooled(total, dim);
    std::vector<std::size_t> owner(total);
    std::size_t row = 0;
    for (std::size_t u = 0; u < n; ++u) {
        const auto used = std::min<std::size_t>(static_cast<std::size_t>(tweets_per_user[u].rows()), cfg.max_tweets);
        for (std::size_t t = 0; t < used; ++t) {
            pooled.row(row) = tweets_per_user[u].row(t);
            owner[row++] = u;
        }
    }

    const auto clusters = kmeans(pooled, k, cfg.max_iters, cfg.seed);

    std::vector<double> tweet_count(n, 0.0);
    for (std::size_t i = 0; i < total; ++i) {
        block(owner[i], 1 + clusters.assignments[i]) += 1.0;
        tweet_count[owner[i]] += 1.0;
    }

    std::vector<std::size_t> active;
    std::vector<double> distinct(n, 0.0);
    for (std::size_t u = 0; u < n; ++u) {
        if (tweet_count[u] == 0.0) continue;
        active.push_back(u);
        for (std::size_t c = 0; c < k; ++c) {
            if (block(u, 1 + c) > 0.0) distinct[u] += 1.0;
        }
        block.row(u).tail(k) /= tweet_count[u];
    }

    double mean = 0.0;
    for (auto u : active) mean += distinct[u];
    mean /= static_cast<double>(active.size());
    double var = 0.0;
    for (auto u : active) var += (distinct[u] - mean) * (distinct[u] - mean);
    const double sd = std::sqrt(var / static_cast<double>(active.size()));
    for (auto u : active) block(u, 0) = sd > 0.0 ? (distinct[u] - mean) / sd : 0.0;
    return block;
}

Matrix temporal_feature(const std::vector<std::vector<MonthlyCount>>& monthly_counts, std::size_t window) {
    if (window == 0) throw Error("temporal_feature: window must be positive");
    Matrix block = Matrix::Zero(monthly_counts.size(), window);
    for (std::size_t u = 0; u < monthly_counts.size(); ++u) {
        for (const auto& [month, count] : monthly_counts[u]) {
            if (!(count >= 0.0) || !std::isfinite(count)) {
                throw Error("temporal_feature: negative or non-finite count for user " + std::to_string(u));
            }
            if (month >= window) {
                throw Error("temporal_feature: month index " + std::to_string(month) + " outside window of " +
                            std::to_string(window));
            }
            block(u, month) += count;
        }
        const double sum = block.row(u).sum();
        if (sum > 0.0) block.row(u) /= sum;
    }
    return block;
}

FeatureMatrix assemble_features(std::vector<NamedBlock> blocks) {
    if (blocks.empty()) throw Error("assemble_features: no blocks");
    const auto rows = blocks.front().values.rows();
    std::size_t next_canonical = 0;
    Eigen::Index width = 0;
    FeatureMatrix out;
    for (const auto& b : blocks) {
        auto it = std::find(std::begin(kBlockOrder), std::end(kBlockOrder), b.name);
        if (it == std::end(kBlockOrder)) throw Error("assemble_features: unknown block '" + b.name + "'");
        const auto pos = static_cast<std::size_t>(it - std::begin(kBlockOrder));
        if (pos < next_canonical) throw Error("assemble_features: block '" + b.name + "' out of order or repeated");
        next_canonical = pos + 1;
        if (b.values.rows() != rows) {
            throw Error("assemble_features: block '" + b.name + "' has " + std::to_string(b.values.rows()) +
                        " rows, expected " + std::to_string(rows));
        }
        if (!b.values.allFinite()) throw Error("assemble_features: block '" + b.name + "' contains NaN/Inf");
        out.schema.push_back({b.name, static_cast<std::size_t>(b.values.cols())});
        width += b.values.cols();
    }
    out.values.resize(rows, width);
    Eigen::Index col = 0;
    for (const auto& b : blocks) {
        out.values.middleCols(col, b.values.cols()) = b.values.cast<float>().cast<double>();
        col += b.values.cols();
    }
    return out;
}

void write_features(const FeatureMatrix& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write feature file '" + path + "'");
    for (std::size_t i = 0; i < f.schema.size(); ++i) {
        if (i) out << ',';
        out << f.schema[i].name << ':' << f.schema[i].width;
    }
    out << '\n';
    detail::write_matrix_body(out, f.values);
}

FeatureMatrix read_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open feature file '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw Error(path + ": missing schema line");
    FeatureMatrix f;
    std::size_t width = 0;
    for (auto item : detail::split_on(detail::trim(header), ',')) {
        auto parts = detail::split_on(item, ':');
        if (parts.size() != 2) throw ParseError(path, 1, "schema entries must be name:width");
        auto w = detail::parse_uint(parts[1]);
        if (!w) throw ParseError(path, 1, "malformed block width");
        f.schema.push_back({std::string(parts[0]), *w});
        width += *w;
    }
    f.values = detail::read_matrix_body(in, path);
    if (static_cast<std::size_t>(f.values.cols()) != width) {
        throw Error(path + ": schema width " + std::to_string(width) + " does not match matrix width " +
                    std::to_string(f.values.cols()));
    }
    return f;
}

std::vector<Matrix> group_tweets(const Matrix& tweets, const std::string& owners_path, std::size_t n_users) {
    std::ifstream in(owners_path);
    if (!in) throw Error("cannot open tweet owner file '" + owners_path + "'");
    std::vector<std::size_t> owner;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto fields = detail::split_fields(line);
        if (fields.empty()) continue;
        auto id = detail::parse_uint(fields[0]);
        if (!id || fields.size() != 1) throw ParseError(owners_path, lineno, "expected one user id");
        if (*id >= n_users) throw ParseError(owners_path, lineno, "user id out of range");
        owner.push_back(*id);
    }
    if (owner.size() != static_cast<std::size_t>(tweets.rows())) {
        throw Error(owners_path + ": " + std::to_string(owner.size()) + " owners for " +
                    std::to_string(tweets.rows()) + " tweet rows");
    }
    std::vector<std::size_t> counts(n_users, 0);
    for (auto u : owner) ++counts[u];
    std::vector<Matrix> grouped(n_users);
    for (std::size_t u = 0; u < n_users; ++u) grouped[u].resize(counts[u], tweets.cols());
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < owner.size(); ++i) grouped[owner[i]].row(counts[owner[i]]++) = tweets.row(i);
    return grouped;
}

std::vector<std::vector<MonthlyCount>> read_monthly_counts(const std::string& path, std::size_t n_users) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open monthly count file '" + path + "'");
    std::vector<std::vector<MonthlyCount>> counts(n_users);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto fields = detail::split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() != 3) throw ParseError(path, lineno, "expected user, month, count");
        auto user = detail::parse_uint(fields[0]);
        auto month = detail::parse_uint(fields[1]);
        auto count = detail::parse_double(fields[2]);
        if (!user || !month || !count) throw ParseError(path, lineno, "malformed row");
        if (*user >= n_users) throw ParseError(path, lineno, "user id out of range");
        if (*count < 0) throw ParseError(path, lineno, "negative count");
        counts[*user].push_back({*month, *count});
    }
    return counts;
}

}  // namespace bsg
