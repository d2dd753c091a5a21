#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fixmark/ingest.hpp"
#include "fixmark/simulate.hpp"
#include "fixmark/stats.hpp"

using namespace fixmark;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

const FixationSequence* lookup(const Dataset& dataset, int image, ColourScheme scheme,
                               const std::string& subject) {
    for (const auto* seq : dataset.find(image, scheme)) {
        if (seq->subject_id == subject) return seq;
    }
    return nullptr;
}

SimSpec two_state_spec(std::uint64_t seed) {
    SimSpec spec;
    spec.k = 2;
    spec.initial_probs = {0.65, 0.35};
    spec.transition_matrix = {{0.75, 0.25}, {0.4, 0.6}};
    spec.emissions = {{{100.0, 120.0}, 15.0, 18.0}, {{400.0, 330.0}, 22.0, 20.0}};
    spec.subjects = 10;
    spec.fixations_per_subject = 30;
    spec.seed = seed;
    return spec;
}

} // namespace

TEST_CASE("simulate validates the spec", "[simulate]") {
    SimSpec spec = two_state_spec(1);
    spec.initial_probs = {0.6, 0.3};  // sums to 0.9
    CHECK_THROWS_WITH(simulate(spec), ContainsSubstring("initial_probs"));

    spec = two_state_spec(1);
    spec.transition_matrix[1] = {0.5, 0.6};
    CHECK_THROWS_WITH(simulate(spec), ContainsSubstring("row 1"));

    spec = two_state_spec(1);
    spec.initial_probs = {1.3, -0.3};
    CHECK_THROWS_WITH(simulate(spec), ContainsSubstring("negative"));

    spec = two_state_spec(1);
    spec.emissions[0].sd_y = 0.0;
    CHECK_THROWS_WITH(simulate(spec), ContainsSubstring("sds"));

    spec = two_state_spec(1);
    spec.emissions.pop_back();
    CHECK_THROWS_WITH(simulate(spec), ContainsSubstring("emissions"));

    spec = two_state_spec(1);
    spec.subjects = 0;
    CHECK_THROWS_AS(simulate(spec), std::invalid_argument);

    spec = two_state_spec(1);
    spec.fixations_per_subject = 0;
    CHECK_THROWS_AS(simulate(spec), std::invalid_argument);

    spec = two_state_spec(1);
    spec.duration_model = DurationModel{0.0, 1.0};
    CHECK_THROWS_WITH(simulate(spec), ContainsSubstring("base_ms"));

    spec = two_state_spec(1);
    spec.duration_model = DurationModel{250.0, -0.1};
    CHECK_THROWS_WITH(simulate(spec), ContainsSubstring("density_coupling"));

    spec = two_state_spec(1);
    spec.subject_prefix = "";
    CHECK_THROWS_WITH(simulate(spec), ContainsSubstring("subject_prefix"));
}

TEST_CASE("subject ids are zero-padded and stable", "[simulate]") {
    CHECK(sim_subject_id(0, 10) == "s01");
    CHECK(sim_subject_id(9, 10) == "s10");
    CHECK(sim_subject_id(0, 100) == "s001");
    CHECK(sim_subject_id(99, 100) == "s100");
    CHECK(sim_subject_id(0, 5) == "s01");
    CHECK(sim_subject_id(0, 5, "g") == "g01");

    SimSpec spec = two_state_spec(3);
    spec.subjects = 2;
    spec.subject_prefix = "n";
    const SimResult result = simulate(spec);
    CHECK(result.subject_ids == std::vector<std::string>{"n01", "n02"});
}

TEST_CASE("simulation shape and side channel", "[simulate]") {
    SimSpec spec = two_state_spec(42);
    spec.scheme = ColourScheme::Grayscale;
    spec.image_id = 17;
    spec.orientation = Orientation::Portrait;
    const SimResult result = simulate(spec);

    CHECK(result.subject_ids.size() == 10);
    CHECK(result.true_states.size() == 10);
    CHECK(result.dataset.size() == 10);
    for (const auto& states : result.true_states) {
        REQUIRE(states.size() == 30);
        for (int s : states) {
            CHECK(s >= 0);
            CHECK(s < 2);
        }
    }
    for (const auto& seq : result.dataset.sequences()) {
        CHECK(seq.image_id == 17);
        CHECK(seq.colour_scheme == ColourScheme::Grayscale);
        CHECK(seq.orientation == Orientation::Portrait);
        REQUIRE(seq.size() == 30);
        for (int t = 0; t < 30; ++t) CHECK(seq.fixation_indices[t] == t + 1);
        // No duration model: the constant placeholder.
        for (double d : seq.durations) CHECK(d == 250.0);
    }
}

TEST_CASE("simulation is deterministic and seed-sensitive", "[simulate]") {
    const SimSpec spec = two_state_spec(7);
    const std::string a = serialize_records(to_records(simulate(spec).dataset));
    const std::string b = serialize_records(to_records(simulate(spec).dataset));
    CHECK(a == b);

    SimSpec other = spec;
    other.seed = 8;
    CHECK(serialize_records(to_records(simulate(other).dataset)) != a);
}

TEST_CASE("empirical frequencies approach the spec", "[simulate]") {
    SimSpec spec = two_state_spec(123);
    spec.subjects = 150;
    spec.fixations_per_subject = 200;
    const SimResult result = simulate(spec);
    const SimDiagnostics diag = empirical_check(result, spec);
    CHECK(diag.initial_sup_dev < 0.08);      // 150 Bernoulli draws
    CHECK(diag.transition_sup_dev < 0.02);   // ~30000 transitions
}

TEST_CASE("emissions follow the sampled state", "[simulate]") {
    SimSpec spec = two_state_spec(9);
    spec.subjects = 4;
    const SimResult result = simulate(spec);
    for (std::size_t s = 0; s < result.subject_ids.size(); ++s) {
        const auto* seq = lookup(result.dataset, 1, ColourScheme::Normal, result.subject_ids[s]);
        REQUIRE(seq != nullptr);
        for (std::size_t t = 0; t < seq->points.size(); ++t) {
            const auto& e = spec.emissions[result.true_states[s][t]];
            // 6 sigma: the point belongs to its own state's blob.
            CHECK(std::fabs(seq->points[t].x - e.mean.x) < 6.0 * e.sd_x);
            CHECK(std::fabs(seq->points[t].y - e.mean.y) < 6.0 * e.sd_y);
        }
    }
}

TEST_CASE("identity transitions freeze each subject in its initial state", "[simulate]") {
    SimSpec spec = two_state_spec(31);
    spec.transition_matrix = {{1.0, 0.0}, {0.0, 1.0}};
    const SimResult result = simulate(spec);
    for (const auto& states : result.true_states) {
        for (int s : states) CHECK(s == states.front());
    }
}

TEST_CASE("duration model couples durations to the true density", "[simulate]") {
    SimSpec spec = two_state_spec(77);
    spec.subjects = 12;
    spec.fixations_per_subject = 60;
    spec.duration_model = DurationModel{250.0, 2.0};
    const SimResult result = simulate(spec);

    std::vector<double> durations, densities;
    for (const auto& seq : result.dataset.sequences()) {
        for (std::size_t t = 0; t < seq.points.size(); ++t) {
            durations.push_back(seq.durations[t]);
            densities.push_back(fixmark::detail::normalized_true_density(spec, seq.points[t]));
            CHECK(seq.durations[t] > 0.0);
        }
    }
    const TestResult r = pearson_fisher(densities, durations);
    CHECK(r.statistic > 0.3);
    CHECK(r.p_value < 1e-6);

    // Zero coupling leaves only the lognormal noise around base_ms: the log
    // ratio is N(0, 0.25^2), so the sample mean sits near 0.
    spec.duration_model = DurationModel{250.0, 0.0};
    double log_sum = 0.0;
    std::size_t n = 0;
    const SimResult uncoupled = simulate(spec);
    for (const auto& seq : uncoupled.dataset.sequences()) {
        for (double d : seq.durations) {
            log_sum += std::log(d / 250.0);
            ++n;
        }
    }
    CHECK(std::fabs(log_sum / static_cast<double>(n)) < 0.05);
}

TEST_CASE("simulated data round-trips through the ingest format", "[simulate]") {
    SimSpec spec = two_state_spec(55);
    spec.duration_model = DurationModel{220.0, 1.0};
    const Dataset original = simulate(spec).dataset;

    const std::string text = serialize_records(to_records(original));
    const Dataset parsed = group_sequences(parse_records(text, {}));
    REQUIRE(parsed.size() == original.size());
    for (const auto& seq : original.sequences()) {
        const auto* match = lookup(parsed, seq.image_id, seq.colour_scheme, seq.subject_id);
        REQUIRE(match != nullptr);
        REQUIRE(match->size() == seq.size());
        for (std::size_t t = 0; t < seq.points.size(); ++t) {
            CHECK(match->points[t].x == seq.points[t].x);     // to_chars round-trip is exact
            CHECK(match->points[t].y == seq.points[t].y);
            CHECK(match->durations[t] == seq.durations[t]);
            CHECK(match->fixation_indices[t] == seq.fixation_indices[t]);
        }
    }
}
