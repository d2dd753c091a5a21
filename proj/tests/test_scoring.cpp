#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fixmark/markov.hpp"
#include "fixmark/simulate.hpp"

using namespace fixmark;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

SimSpec three_state_spec(std::uint64_t seed) {
    SimSpec spec;
    spec.k = 3;
    spec.initial_probs = {0.4, 0.35, 0.25};
    spec.transition_matrix = {{0.7, 0.2, 0.1}, {0.15, 0.7, 0.15}, {0.1, 0.2, 0.7}};
    spec.emissions = {{{150.0, 150.0}, 35.0, 35.0},
                      {{520.0, 180.0}, 35.0, 35.0},
                      {{330.0, 470.0}, 35.0, 35.0}};
    spec.subjects = 6;
    spec.fixations_per_subject = 40;
    spec.seed = seed;
    return spec;
}

ScoreConfig small_score(std::uint64_t seed, int k_max = 4, int mc = 600) {
    ScoreConfig score;
    score.k_max = k_max;
    score.mc_samples = mc;
    score.seed = seed;
    return score;
}

} // namespace

TEST_CASE("score_image recovers a well-separated three-state chain", "[scoring]") {
    const Dataset dataset = simulate(three_state_spec(91)).dataset;
    const BayesFactorReport report =
        score_image(dataset, 1, ColourScheme::Normal, {}, small_score(17));

    CHECK(report.image_id == 1);
    CHECK(report.scheme == ColourScheme::Normal);
    REQUIRE(report.per_k.size() == 4);

    // k = 1 is the null against itself.
    CHECK(report.per_k.at(1).combined_bf == 1.0);
    CHECK(report.per_k.at(1).combined_log2_bf == 0.0);
    CHECK(report.per_k.at(1).closed_form_bf == 1.0);

    for (const auto& [k, cell] : report.per_k) {
        CHECK(cell.per_subject_bf.size() == 6);
        for (double bf : cell.per_subject_bf) CHECK(bf > 0.0);
    }

    CHECK(report.selected_k == 3);
    CHECK(report.strongest_bf < 0.1);
    CHECK(report.strongest_bf == report.per_k.at(report.selected_k).combined_bf);
    for (int k = 2; k <= 4; ++k) {
        CHECK(report.per_k.at(k).combined_bf >= report.strongest_bf);
    }
}

TEST_CASE("combined bayes factors follow the configured combination rule", "[scoring]") {
    const Dataset dataset = simulate(three_state_spec(55)).dataset;

    ScoreConfig geometric = small_score(3, 3, 300);
    const BayesFactorReport geo = score_image(dataset, 1, ColourScheme::Normal, {}, geometric);
    for (const auto& [k, cell] : geo.per_k) {
        double log_sum = 0.0;
        for (double bf : cell.per_subject_bf) log_sum += std::log(bf);
        const double expect = std::exp(log_sum / static_cast<double>(cell.per_subject_bf.size()));
        CHECK(cell.combined_bf == Approx(expect).epsilon(1e-12));
        CHECK(cell.combined_log2_bf == Approx(std::log2(cell.combined_bf)).margin(1e-10));
    }

    ScoreConfig arithmetic = geometric;
    arithmetic.combine = ScoreConfig::Combine::Arithmetic;
    const BayesFactorReport ari = score_image(dataset, 1, ColourScheme::Normal, {}, arithmetic);
    for (const auto& [k, cell] : ari.per_k) {
        double sum = 0.0;
        for (double bf : cell.per_subject_bf) sum += bf;
        CHECK(cell.combined_bf ==
              Approx(sum / static_cast<double>(cell.per_subject_bf.size())).epsilon(1e-12));
    }

    // Same per-subject estimates feed both rules: the MC seed depends only on
    // (master seed, subject, k), not on the combination switch.
    for (const auto& [k, cell] : geo.per_k) {
        CHECK(cell.per_subject_bf == ari.per_k.at(k).per_subject_bf);
    }
}

TEST_CASE("monte carlo and closed-form combined estimates agree", "[scoring]") {
    const Dataset dataset = simulate(three_state_spec(23)).dataset;
    const BayesFactorReport report =
        score_image(dataset, 1, ColourScheme::Normal, {}, small_score(5, 4, 4000));
    for (int k = 2; k <= 4; ++k) {
        const auto& cell = report.per_k.at(k);
        // Both estimate the same quantity; compare on the log scale against
        // the propagated relative error (4 sigma for slack across the grid).
        const double rel = cell.mc_std_error / cell.combined_bf;
        CHECK(std::fabs(std::log(cell.combined_bf) - std::log(cell.closed_form_bf)) <=
              std::max(4.0 * rel, 1e-3));
    }
}

TEST_CASE("scoring is deterministic in the master seed", "[scoring]") {
    const Dataset dataset = simulate(three_state_spec(71)).dataset;
    const BayesFactorReport a = score_image(dataset, 1, ColourScheme::Normal, {}, small_score(9));
    const BayesFactorReport b = score_image(dataset, 1, ColourScheme::Normal, {}, small_score(9));
    for (const auto& [k, cell] : a.per_k) {
        CHECK(cell.per_subject_bf == b.per_k.at(k).per_subject_bf);
        CHECK(cell.combined_bf == b.per_k.at(k).combined_bf);
        CHECK(cell.mc_std_error == b.per_k.at(k).mc_std_error);
    }
    CHECK(a.selected_k == b.selected_k);

    const BayesFactorReport c = score_image(dataset, 1, ColourScheme::Normal, {}, small_score(10));
    CHECK(c.per_k.at(2).combined_bf != a.per_k.at(2).combined_bf);
}

TEST_CASE("hierarchical clustering path scores deterministically", "[scoring]") {
    SimSpec spec = three_state_spec(44);
    spec.subjects = 4;
    spec.fixations_per_subject = 25;
    const Dataset dataset = simulate(spec).dataset;

    ClusteringConfig clustering;
    clustering.method = ClusteringConfig::Method::Hierarchical;
    clustering.linkage = Linkage::Ward;
    const BayesFactorReport a =
        score_image(dataset, 1, ColourScheme::Normal, clustering, small_score(1, 3, 200));
    const BayesFactorReport b =
        score_image(dataset, 1, ColourScheme::Normal, clustering, small_score(1, 3, 200));
    CHECK(a.per_k.at(2).combined_bf == b.per_k.at(2).combined_bf);
    CHECK(a.per_k.at(3).combined_bf == b.per_k.at(3).combined_bf);
    CHECK(a.selected_k == b.selected_k);
}

TEST_CASE("score_image validates its inputs", "[scoring]") {
    const Dataset dataset = simulate(three_state_spec(12)).dataset;
    ScoreConfig bad = small_score(0);
    bad.k_max = 1;
    CHECK_THROWS_AS(score_image(dataset, 1, ColourScheme::Normal, {}, bad),
                    std::invalid_argument);

    // Unknown image has no subjects.
    CHECK_THROWS_WITH(score_image(dataset, 7, ColourScheme::Normal, {}, small_score(0)),
                      ContainsSubstring("2 subjects"));

    // One-subject image cannot be cross-validated.
    SimSpec solo = three_state_spec(1);
    solo.subjects = 1;
    CHECK_THROWS_AS(
        score_image(simulate(solo).dataset, 1, ColourScheme::Normal, {}, small_score(0)),
        std::invalid_argument);
}

TEST_CASE("fold failures report image, scheme, k and subject", "[scoring]") {
    // Two subjects; when s02 is held out the training pool is s01's perfectly
    // vertical scanpath, whose x-variance is zero.
    Dataset dataset;
    FixationSequence degenerate;
    degenerate.subject_id = "s01";
    degenerate.image_id = 3;
    degenerate.colour_scheme = ColourScheme::Abnormal;
    degenerate.orientation = Orientation::Portrait;
    FixationSequence healthy = degenerate;
    healthy.subject_id = "s02";
    Rng rng(6);
    for (int t = 0; t < 12; ++t) {
        degenerate.points.push_back({320.0, 40.0 * t});
        degenerate.durations.push_back(200.0);
        degenerate.fixation_indices.push_back(t + 1);
        healthy.points.push_back({rng.uniform(0.0, 600.0), rng.uniform(0.0, 400.0)});
        healthy.durations.push_back(200.0);
        healthy.fixation_indices.push_back(t + 1);
    }
    dataset.add(std::move(degenerate));
    dataset.add(std::move(healthy));

    try {
        score_image(dataset, 3, ColourScheme::Abnormal, {}, small_score(2, 2, 100));
        FAIL("expected a fold failure");
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        CHECK_THAT(what, ContainsSubstring("image 3"));
        CHECK_THAT(what, ContainsSubstring("abnormal"));
        CHECK_THAT(what, ContainsSubstring("k=2"));
        CHECK_THAT(what, ContainsSubstring("subject 's02'"));
    }
}
