#pragma once
// Clustering of fixation locations: k-means (Lloyd, multi-start) and
// agglomerative hierarchical clustering (Lance-Williams updates for Ward,
// complete and UPGMA linkage under L1/L2/Linf), plus cluster assignment for
// test fixations (nearest centre or k-nearest neighbours).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fixmark/data.hpp"
#include "fixmark/rng.hpp"

namespace fixmark {

enum class Metric { L1, L2, Linf };
enum class Linkage { Ward, Complete, Upgma };
enum class AssignRule { NearestCentre, Knn };

inline const char* to_token(Metric m) {
    switch (m) {
        case Metric::L1: return "l1";
        case Metric::L2: return "l2";
        case Metric::Linf: return "linf";
    }
    throw std::logic_error("unreachable metric");
}

inline const char* to_token(Linkage l) {
    switch (l) {
        case Linkage::Ward: return "ward";
        case Linkage::Complete: return "complete";
        case Linkage::Upgma: return "upgma";
    }
    throw std::logic_error("unreachable linkage");
}

inline const char* to_token(AssignRule r) {
    return r == AssignRule::NearestCentre ? "nearest_centre" : "knn";
}

inline std::optional<Metric> parse_metric(const std::string& token) {
    if (token == "l1") return Metric::L1;
    if (token == "l2") return Metric::L2;
    if (token == "linf") return Metric::Linf;
    return std::nullopt;
}

inline std::optional<Linkage> parse_linkage(const std::string& token) {
    if (token == "ward") return Linkage::Ward;
    if (token == "complete") return Linkage::Complete;
    if (token == "upgma") return Linkage::Upgma;
    return std::nullopt;
}

inline double distance(Metric metric, const Point2& a, const Point2& b) {
    const double dx = std::fabs(a.x - b.x);
    const double dy = std::fabs(a.y - b.y);
    switch (metric) {
        case Metric::L1: return dx + dy;
        case Metric::L2: return std::sqrt(dx * dx + dy * dy);
        case Metric::Linf: return std::max(dx, dy);
    }
    throw std::logic_error("unreachable metric");
}

inline double squared_l2(const Point2& a, const Point2& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

// Fitted clustering of the training fixations. Labels are 0-based in memory;
// they are rendered and serialized 1-based.
struct ClusterModel {
    int k = 0;
    AssignRule rule = AssignRule::NearestCentre;
    Metric metric = Metric::L2;     // used by the KNN rule
    int knn_neighbours = 5;
    std::vector<Point2> centres;    // present for NearestCentre
    std::vector<Point2> training_points;
    std::vector<int> labels;        // parallel to training_points

    std::vector<Point2> cluster_points(int label) const {
        std::vector<Point2> out;
        for (std::size_t i = 0; i < training_points.size(); ++i) {
            if (labels[i] == label) out.push_back(training_points[i]);
        }
        return out;
    }
};

namespace detail {

inline int nearest_centre(const std::vector<Point2>& centres, const Point2& q) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centres.size(); ++c) {
        const double d = squared_l2(centres[c], q);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

} // namespace detail

// Assign a point to a cluster. Total: every finite point receives a label.
// Equal distances break toward the lower label; KNN majority ties likewise.
inline int assign(const ClusterModel& model, const Point2& q) {
    if (model.rule == AssignRule::NearestCentre) {
        return detail::nearest_centre(model.centres, q);
    }
    const std::size_t n = model.training_points.size();
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(model.knn_neighbours), n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::partial_sort(order.begin(), order.begin() + take, order.end(),
                      [&](std::size_t a, std::size_t b) {
                          const double da = distance(model.metric, model.training_points[a], q);
                          const double db = distance(model.metric, model.training_points[b], q);
                          if (da != db) return da < db;
                          return a < b;
                      });
    std::vector<int> votes(model.k, 0);
    for (std::size_t i = 0; i < take; ++i) votes[model.labels[order[i]]] += 1;
    int best = 0;
    for (int c = 1; c < model.k; ++c) {
        if (votes[c] > votes[best]) best = c;
    }
    return best;
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

struct KMeansRun {
    std::vector<Point2> centres;
    std::vector<int> labels;
    double objective = 0.0;
    std::vector<double> objective_trace;   // one entry per Lloyd iteration
};

namespace detail {

inline double kmeans_objective(const std::vector<Point2>& points,
                               const std::vector<Point2>& centres,
                               const std::vector<int>& labels) {
    double obj = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) obj += squared_l2(points[i], centres[labels[i]]);
    return obj;
}

inline void update_means(const std::vector<Point2>& points, const std::vector<int>& labels,
                         int k, std::vector<Point2>& centres) {
    std::vector<double> sx(k, 0.0), sy(k, 0.0);
    std::vector<int> count(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        sx[labels[i]] += points[i].x;
        sy[labels[i]] += points[i].y;
        count[labels[i]] += 1;
    }
    for (int c = 0; c < k; ++c) {
        if (count[c] > 0) centres[c] = {sx[c] / count[c], sy[c] / count[c]};
    }
}

} // namespace detail

// One Lloyd run from a Forgy start (k distinct points drawn from rng).
// Iterates to an assignment fixed point or the iteration cap; empty clusters
// are re-seeded at the point farthest from its assigned centre.
inline KMeansRun kmeans_single_run(const std::vector<Point2>& points, int k, Rng& rng,
                                   int max_iterations = 100) {
    const std::size_t n = points.size();
    KMeansRun run;
    run.centres.resize(k);
    const auto seeds = rng.sample_distinct(n, static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) run.centres[c] = points[seeds[c]];

    std::vector<int> labels(n, -1);
    for (int iter = 0; iter < max_iterations; ++iter) {
        std::vector<int> new_labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            new_labels[i] = detail::nearest_centre(run.centres, points[i]);
        }
        std::vector<int> count(k, 0);
        for (int lab : new_labels) count[lab] += 1;
        bool repaired = false;
        for (int empty = 0; empty < k; ++empty) {
            if (count[empty] > 0) continue;
            // Re-seed at the farthest point whose cluster keeps >= 1 member.
            std::size_t pick = n;
            double best_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (count[new_labels[i]] < 2) continue;
                const double d = squared_l2(points[i], run.centres[new_labels[i]]);
                if (d > best_d) {
                    best_d = d;
                    pick = i;
                }
            }
            if (pick == n) break;  // fewer distinct points than clusters
            count[new_labels[pick]] -= 1;
            new_labels[pick] = empty;
            count[empty] = 1;
            run.centres[empty] = points[pick];
            repaired = true;
        }
        if (!repaired && new_labels == labels) break;
        labels = std::move(new_labels);
        detail::update_means(points, labels, k, run.centres);
        run.objective_trace.push_back(detail::kmeans_objective(points, run.centres, labels));
    }
    run.labels = std::move(labels);
    run.objective = detail::kmeans_objective(points, run.centres, run.labels);
    return run;
}

// Multi-start k-means; the restart with minimal within-cluster sum of squared
// L2 distances wins, lower restart index breaking ties. Restart r draws from
// the child seed derive_seed(seed, r), so restarts are order-independent.
inline ClusterModel kmeans(const std::vector<Point2>& points, int k, int restarts,
                           std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (points.size() < static_cast<std::size_t>(k)) {
        throw std::invalid_argument("kmeans: need at least k points, got " +
                                    std::to_string(points.size()) + " for k=" + std::to_string(k));
    }
    if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");

    KMeansRun best;
    bool have_best = false;
    for (int r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        KMeansRun run = kmeans_single_run(points, k, rng);
        if (!have_best || run.objective < best.objective) {
            best = std::move(run);
            have_best = true;
        }
    }
    ClusterModel model;
    model.k = k;
    model.rule = AssignRule::NearestCentre;
    model.metric = Metric::L2;
    model.centres = std::move(best.centres);
    model.training_points = points;
    model.labels = std::move(best.labels);
    return model;
}

// ---------------------------------------------------------------------------
// Agglomerative hierarchical clustering
// ---------------------------------------------------------------------------

namespace detail {

// Lance-Williams update for the dissimilarity between the merged cluster
// (a u b) and another cluster h. Ward operates on squared dissimilarities.
inline double lance_williams(Linkage linkage, double d_ah, double d_bh, double d_ab,
                             double n_a, double n_b, double n_h) {
    switch (linkage) {
        case Linkage::Complete:
            return std::max(d_ah, d_bh);
        case Linkage::Upgma:
            return (n_a * d_ah + n_b * d_bh) / (n_a + n_b);
        case Linkage::Ward:
            return ((n_a + n_h) * d_ah + (n_b + n_h) * d_bh - n_h * d_ab) / (n_a + n_b + n_h);
    }
    throw std::logic_error("unreachable linkage");
}

} // namespace detail

// Bottom-up merge from singletons, cutting the tree at exactly k clusters.
// Clusters are identified by the smallest original point index they contain;
// the minimal-dissimilarity pair is merged each step, equal dissimilarities
// breaking toward the lexicographically smallest (id, id) pair.
inline ClusterModel hierarchical(const std::vector<Point2>& points, int k, Linkage linkage,
                                 Metric metric, int knn_neighbours = 5) {
    if (k < 1) throw std::invalid_argument("hierarchical: k must be >= 1");
    const std::size_t n = points.size();
    if (n < static_cast<std::size_t>(k)) {
        throw std::invalid_argument("hierarchical: need at least k points, got " +
                                    std::to_string(n) + " for k=" + std::to_string(k));
    }

    // Dissimilarity matrix indexed by cluster id (= smallest member index).
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double dist_ij = distance(metric, points[i], points[j]);
            if (linkage == Linkage::Ward) dist_ij *= dist_ij;
            d[i][j] = d[j][i] = dist_ij;
        }
    }
    std::vector<bool> active(n, true);
    std::vector<double> sizes(n, 1.0);
    std::vector<int> cluster_of(n);
    for (std::size_t i = 0; i < n; ++i) cluster_of[i] = static_cast<int>(i);

    std::size_t active_count = n;
    while (active_count > static_cast<std::size_t>(k)) {
        std::size_t best_a = n, best_b = n;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n; ++a) {
            if (!active[a]) continue;
            for (std::size_t b = a + 1; b < n; ++b) {
                if (!active[b]) continue;
                if (d[a][b] < best_d) {
                    best_d = d[a][b];
                    best_a = a;
                    best_b = b;
                }
            }
        }
        // Merge best_b into best_a (best_a < best_b keeps the smaller id).
        for (std::size_t h = 0; h < n; ++h) {
            if (!active[h] || h == best_a || h == best_b) continue;
            d[best_a][h] = d[h][best_a] = detail::lance_williams(
                linkage, d[best_a][h], d[best_b][h], d[best_a][best_b],
                sizes[best_a], sizes[best_b], sizes[h]);
        }
        sizes[best_a] += sizes[best_b];
        active[best_b] = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (cluster_of[i] == static_cast<int>(best_b)) cluster_of[i] = static_cast<int>(best_a);
        }
        --active_count;
    }

    // Relabel surviving cluster ids to 0..k-1 in ascending id order.
    std::vector<int> id_to_label(n, -1);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (active[i]) id_to_label[i] = next++;
    }
    ClusterModel model;
    model.k = k;
    model.rule = AssignRule::Knn;
    model.metric = metric;
    model.knn_neighbours = knn_neighbours;
    model.training_points = points;
    model.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) model.labels[i] = id_to_label[cluster_of[i]];
    return model;
}

} // namespace fixmark
