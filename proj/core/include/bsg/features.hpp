#pragma once

#include "bsg/graph.hpp"
#include "bsg/matrix.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bsg {

// ---------------------------------------------------------------------------
// K-means

struct KMeansResult {
    Matrix centroids;                      // k x d
    std::vector<std::size_t> assignments;  // one per point
    double inertia = 0.0;
    /// Inertia after the seeding assignment and after every Lloyd iteration.
    std::vector<double> inertia_history;
    std::size_t iterations = 0;
};

/// Lloyd's algorithm from k-means++ seeding. Points are rows. Stops after
/// `max_iters` updates or once assignments stop changing. Equidistant
/// centroids resolve to the lowest index; an emptied cluster keeps its
/// previous centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::size_t max_iters, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Engineered blocks

struct CategoryConfig {
    std::size_t categories = 20;
    std::size_t max_tweets = 200;
    std::size_t max_iters = 100;
    std::uint64_t seed = 0;
};

/// Tweet content category block, width categories + 1: the z-scored number of
/// distinct clusters a user touches, then the fraction of the user's tweets
/// in each cluster. `tweets_per_user[u]` holds user u's tweet embeddings,
/// most recent first; only the first `max_tweets` rows are used. The z-score
/// is taken over users with at least one tweet; zero-tweet users get a zero
/// row.
Matrix category_feature(const std::vector<Matrix>& tweets_per_user, const CategoryConfig& cfg);

struct MonthlyCount {
    std::size_t month;
    double count;
};

/// Temporal activity block of width `window`: per-month share of the user's
/// tweets in the window. Missing months are zero; all-zero users stay zero.
Matrix temporal_feature(const std::vector<std::vector<MonthlyCount>>& monthly_counts, std::size_t window = 12);

// ---------------------------------------------------------------------------
// Assembly

/// Canonical block names, in concatenation order.
inline constexpr std::string_view kBlockOrder[] = {"description", "tweet",    "num_meta",
                                                   "cat_meta",    "category", "temporal"};

struct BlockSpec {
    std::string name;
    std::size_t width;

    friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

struct NamedBlock {
    std::string name;
    Matrix values;
};

/// Per-node feature rows plus the schema of the blocks they were built from.
/// Values are held at float precision so the on-disk format is lossless.
struct FeatureMatrix {
    std::vector<BlockSpec> schema;
    Matrix values;

    std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t width() const { return static_cast<std::size_t>(values.cols()); }
};

/// Row-wise concatenation. Blocks must use canonical names, appear in
/// canonical order (omitting some is allowed), share one row count and be
/// finite.
FeatureMatrix assemble_features(std::vector<NamedBlock> blocks);

/// Schema line `name:width,...` followed by the binary matrix format.
void write_features(const FeatureMatrix& f, const std::string& path);
FeatureMatrix read_features(const std::string& path);

// ---------------------------------------------------------------------------
// Raw input readers used by the `features` command

/// Groups rows of `tweets` by the user listed on the matching line of
/// `owners` (one user id per line), preserving file order.
std::vector<Matrix> group_tweets(const Matrix& tweets, const std::string& owners_path, std::size_t n_users);

/// `user_id<TAB>month_index<TAB>count` rows.
std::vector<std::vector<MonthlyCount>> read_monthly_counts(const std::string& path, std::size_t n_users);

}  // namespace bsg
