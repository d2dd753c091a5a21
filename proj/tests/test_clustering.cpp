#include <catch2/catch_amalgamated.hpp>

#include "fixmark/clustering.hpp"
#include "fixmark/rng.hpp"
#include "oracles.hpp"

using namespace fixmark;
using Catch::Approx;

namespace {

std::vector<Point2> random_points(std::uint64_t seed, std::size_t n, double span = 100.0) {
    Rng rng(seed);
    std::vector<Point2> points;
    for (std::size_t i = 0; i < n; ++i) {
        points.push_back({rng.uniform(-span, span), rng.uniform(-span, span)});
    }
    return points;
}

} // namespace

TEST_CASE("metric axioms hold on random triples", "[clustering]") {
    Rng rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        const Point2 a{rng.uniform(-10, 10), rng.uniform(-10, 10)};
        const Point2 b{rng.uniform(-10, 10), rng.uniform(-10, 10)};
        const Point2 c{rng.uniform(-10, 10), rng.uniform(-10, 10)};
        for (Metric m : {Metric::L1, Metric::L2, Metric::Linf}) {
            CHECK(distance(m, a, a) == 0.0);
            CHECK(distance(m, a, b) == Approx(distance(m, b, a)));
            CHECK(distance(m, a, c) <= distance(m, a, b) + distance(m, b, c) + 1e-12);
        }
    }
}

TEST_CASE("kmeans on symmetric well-separated pairs", "[clustering]") {
    const std::vector<Point2> points{{0, 0}, {0, 1}, {10, 0}, {10, 1}};
    const auto model = kmeans(points, 2, 10, 7);
    REQUIRE(model.centres.size() == 2);
    std::vector<Point2> centres = model.centres;
    std::sort(centres.begin(), centres.end(),
              [](const Point2& a, const Point2& b) { return a.x < b.x; });
    CHECK(centres[0].x == Approx(0.0));
    CHECK(centres[0].y == Approx(0.5));
    CHECK(centres[1].x == Approx(10.0));
    CHECK(centres[1].y == Approx(0.5));
    CHECK(model.labels[0] == model.labels[1]);
    CHECK(model.labels[2] == model.labels[3]);
    CHECK(model.labels[0] != model.labels[2]);
}

TEST_CASE("kmeans with k=1 returns the coordinate-wise mean", "[clustering]") {
    const auto points = random_points(11, 17);
    const auto model = kmeans(points, 1, 3, 5);
    double mx = 0.0, my = 0.0;
    for (const auto& p : points) {
        mx += p.x;
        my += p.y;
    }
    mx /= points.size();
    my /= points.size();
    CHECK(model.centres[0].x == Approx(mx).margin(1e-12));
    CHECK(model.centres[0].y == Approx(my).margin(1e-12));
}

TEST_CASE("kmeans objective equals the exhaustive 2-partition optimum", "[clustering]") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto points = random_points(seed, 6);
        const auto model = kmeans(points, 2, 10, seed * 13);
        const double got = oracle::partition_objective(points, model.labels, 2);
        const double best = oracle::best_two_partition_objective(points);
        CHECK(got >= best - 1e-9);          // never beats the optimum
        CHECK(got == Approx(best).epsilon(1e-9));
    }
}

TEST_CASE("kmeans rejects invalid arguments", "[clustering]") {
    const auto points = random_points(3, 4);
    CHECK_THROWS_AS(kmeans(points, 0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(kmeans(points, 5, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(kmeans(points, 2, 0, 1), std::invalid_argument);
}

TEST_CASE("kmeans objective is non-increasing within a run", "[clustering]") {
    for (std::uint64_t seed = 20; seed < 30; ++seed) {
        const auto points = random_points(seed, 40);
        Rng rng(seed);
        const auto run = kmeans_single_run(points, 4, rng);
        for (std::size_t i = 1; i < run.objective_trace.size(); ++i) {
            CHECK(run.objective_trace[i] <= run.objective_trace[i - 1] + 1e-9);
        }
    }
}

TEST_CASE("more restarts never worsen the objective", "[clustering]") {
    const auto points = random_points(77, 30);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto few = kmeans(points, 3, 2, seed);
        const auto many = kmeans(points, 3, 8, seed);
        CHECK(oracle::partition_objective(points, many.labels, 3) <=
              oracle::partition_objective(points, few.labels, 3) + 1e-9);
    }
}

TEST_CASE("converged kmeans is Voronoi-consistent under nearest-centre assignment",
          "[clustering]") {
    for (std::uint64_t seed = 40; seed < 45; ++seed) {
        const auto points = random_points(seed, 50);
        const auto model = kmeans(points, 4, 5, seed);
        for (std::size_t i = 0; i < points.size(); ++i) {
            CHECK(assign(model, points[i]) == model.labels[i]);
        }
    }
}

TEST_CASE("kmeans survives duplicate points", "[clustering]") {
    const std::vector<Point2> points{{1, 1}, {1, 1}, {1, 1}, {2, 2}};
    const auto model = kmeans(points, 2, 4, 9);
    std::vector<int> used(2, 0);
    for (int lab : model.labels) used[lab] += 1;
    CHECK(used[0] >= 1);
    CHECK(used[1] >= 1);
}

TEST_CASE("hierarchical separates one far outlier", "[clustering]") {
    const std::vector<Point2> points{{0, 0}, {0, 1}, {5, 5}};
    const auto model = hierarchical(points, 2, Linkage::Complete, Metric::L2);
    CHECK(model.labels[0] == model.labels[1]);
    CHECK(model.labels[0] != model.labels[2]);
}

TEST_CASE("hierarchical with k equal to point count keeps singletons", "[clustering]") {
    const auto points = random_points(8, 6);
    for (Linkage linkage : {Linkage::Ward, Linkage::Complete, Linkage::Upgma}) {
        const auto model = hierarchical(points, 6, linkage, Metric::L2);
        std::set<int> labels(model.labels.begin(), model.labels.end());
        CHECK(labels.size() == 6);
    }
}

TEST_CASE("hierarchical with k=1 merges everything for every combination", "[clustering]") {
    const auto points = random_points(15, 9);
    for (Linkage linkage : {Linkage::Ward, Linkage::Complete, Linkage::Upgma}) {
        for (Metric metric : {Metric::L1, Metric::L2, Metric::Linf}) {
            const auto model = hierarchical(points, 1, linkage, metric);
            for (int lab : model.labels) CHECK(lab == 0);
        }
    }
}

TEST_CASE("hierarchical matches the naive reference agglomeration", "[clustering]") {
    // The spec fixture: UPGMA with L1 on 7 random points cut at 3 clusters.
    for (std::uint64_t seed = 50; seed < 60; ++seed) {
        const auto points = random_points(seed, 7);
        const auto model = hierarchical(points, 3, Linkage::Upgma, Metric::L1);
        const auto reference = oracle::naive_agglomeration(points, 3, Linkage::Upgma, Metric::L1);
        CHECK(oracle::partition_sets(model.labels) == oracle::partition_sets(reference));
    }
}

TEST_CASE("hierarchical matches the reference for all linkage/metric pairs", "[clustering]") {
    for (Linkage linkage : {Linkage::Ward, Linkage::Complete, Linkage::Upgma}) {
        for (Metric metric : {Metric::L1, Metric::L2, Metric::Linf}) {
            for (std::uint64_t seed = 60; seed < 64; ++seed) {
                const auto points = random_points(seed + 100 * static_cast<int>(linkage), 9);
                const auto model = hierarchical(points, 3, linkage, metric);
                const auto reference = oracle::naive_agglomeration(points, 3, linkage, metric);
                CHECK(oracle::partition_sets(model.labels) == oracle::partition_sets(reference));
            }
        }
    }
}

TEST_CASE("nearest-centre assignment picks the closest centre", "[clustering]") {
    ClusterModel model;
    model.k = 2;
    model.rule = AssignRule::NearestCentre;
    model.centres = {{0, 0}, {10, 0}};
    CHECK(assign(model, {1, 1}) == 0);
    CHECK(assign(model, {9, 1}) == 1);
    // Equidistant point: lowest label wins.
    CHECK(assign(model, {5, 3}) == 0);
}

TEST_CASE("knn assignment takes the majority of the nearest labels", "[clustering]") {
    ClusterModel model;
    model.k = 2;
    model.rule = AssignRule::Knn;
    model.metric = Metric::L2;
    model.knn_neighbours = 3;
    model.training_points = {{0, 0}, {0, 1}, {50, 0}, {50, 1}};
    model.labels = {0, 0, 1, 1};
    // Nearest three of (0, 0.5): labels {0,0,1} -> majority 0.
    CHECK(assign(model, {0, 0.5}) == 0);
    // Nearest three of (49, 0): labels {1,1,0} -> majority 1.
    CHECK(assign(model, {49, 0}) == 1);
}

TEST_CASE("knn majority tie breaks toward the lower label", "[clustering]") {
    ClusterModel model;
    model.k = 2;
    model.rule = AssignRule::Knn;
    model.metric = Metric::L2;
    model.knn_neighbours = 4;
    model.training_points = {{-1, 0}, {-2, 0}, {1, 0}, {2, 0}};
    model.labels = {0, 0, 1, 1};
    CHECK(assign(model, {0, 0}) == 0);
}
