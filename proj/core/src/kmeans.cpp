#include "bsg/error.hpp"
#include "bsg/features.hpp"
#include "bsg/random.hpp"

#include <limits>

namespace bsg {

namespace {

// Assigns every point to its nearest centroid; returns the inertia.
double assign(const Matrix& points, const Matrix& centroids, std::vector<std::size_t>& assignments) {
    const auto m = static_cast<std::size_t>(points.rows());
    const auto k = static_cast<std::size_t>(centroids.rows());
    double inertia = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_c = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double d = (points.row(i) - centroids.row(c)).squaredNorm();
            if (d < best) {
                best = d;
                best_c = c;
            }
        }
        assignments[i] = best_c;
        inertia += best;
    }
    return inertia;
}

Matrix seed_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
    const auto m = static_cast<std::size_t>(points.rows());
    Matrix centroids(k, points.cols());
    std::vector<bool> chosen(m, false);
    std::size_t first = uniform_index(rng, m);
    centroids.row(0) = points.row(first);
    chosen[first] = true;

    std::vector<double> dist(m);
    for (std::size_t i = 0; i < m; ++i) dist[i] = (points.row(i) - centroids.row(0)).squaredNorm();

    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : dist) total += d;
        std::size_t pick = m;
        if (total > 0.0) {
            double target = uniform01(rng) * total;
            for (std::size_t i = 0; i < m; ++i) {
                if (dist[i] <= 0.0) continue;
                pick = i;
                target -= dist[i];
                if (target < 0.0) break;
            }
        } else {
            // All remaining points coincide with a centroid.
            for (std::size_t i = 0; i < m && pick == m; ++i) {
                if (!chosen[i]) pick = i;
            }
        }
        chosen[pick] = true;
        centroids.row(c) = points.row(pick);
        for (std::size_t i = 0; i < m; ++i) {
            dist[i] = std::min(dist[i], (points.row(i) - centroids.row(c)).squaredNorm());
        }
    }
    return centroids;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::size_t max_iters, std::uint64_t seed) {
    const auto m = static_cast<std::size_t>(points.rows());
    if (k == 0) throw Error("kmeans: k must be positive");
    if (m < k) throw Error("kmeans: fewer points (" + std::to_string(m) + ") than clusters (" + std::to_string(k) + ")");
    if (points.cols() < 1) throw Error("kmeans: points must have at least one dimension");
    if (!points.allFinite()) throw Error("kmeans: non-finite input");

    Rng rng(seed);
    KMeansResult result;
    result.centroids = seed_plus_plus(points, k, rng);
    result.assignments.assign(m, 0);
    result.inertia = assign(points, result.centroids, result.assignments);
    result.inertia_history.push_back(result.inertia);

    std::vector<std::size_t> previous;
    std::vector<std::size_t> counts(k);
    Matrix sums(k, points.cols());
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        sums.setZero();
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < m; ++i) {
            sums.row(result.assignments[i]) += points.row(i);
            ++counts[result.assignments[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) result.centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        }
        previous = result.assignments;
        result.inertia = assign(points, result.centroids, result.assignments);
        result.inertia_history.push_back(result.inertia);
        result.iterations = iter + 1;
        if (previous == result.assignments) break;
    }
    return result;
}

}  // namespace bsg
