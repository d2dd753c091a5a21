#pragma once
// Synthetic fixation data: a k-state Markov chain with axis-aligned Gaussian
// emissions per state and an optional density-coupled duration model. The
// generator is the ground-truth oracle for the end-to-end acceptance tests;
// true state labels travel in a side channel, never in the dataset itself.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fixmark/data.hpp"
#include "fixmark/rng.hpp"

namespace fixmark {

struct EmissionSpec {
    Point2 mean;
    double sd_x = 1.0;
    double sd_y = 1.0;
};

struct DurationModel {
    double base_ms = 250.0;
    double density_coupling = 0.0;   // >= 0; scales the density effect
};

struct SimSpec {
    int k = 1;
    std::vector<double> initial_probs;
    std::vector<std::vector<double>> transition_matrix;
    std::vector<EmissionSpec> emissions;
    int subjects = 1;
    int fixations_per_subject = 1;
    std::optional<DurationModel> duration_model;
    std::uint64_t seed = 0;
    ColourScheme scheme = ColourScheme::Normal;   // tag written into the records
    int image_id = 1;
    Orientation orientation = Orientation::Landscape;
    // Cohort prefix for generated subject ids. Multi-scheme fixtures give
    // each scheme its own prefix because sequences are keyed by
    // (subject, image), mirroring the real per-scheme viewer cohorts.
    std::string subject_prefix = "s";
};

// Generated dataset plus the true-state side channel, parallel per subject.
struct SimResult {
    Dataset dataset;
    std::vector<std::string> subject_ids;
    std::vector<std::vector<int>> true_states;   // 0-based states per subject
};

struct SimDiagnostics {
    double initial_sup_dev = 0.0;      // sup |empirical - spec| over initial probs
    double transition_sup_dev = 0.0;   // sup over matrix entries with observed rows
};

namespace detail {

inline void check_stochastic(const std::vector<double>& probs, int k, const std::string& what) {
    if (static_cast<int>(probs.size()) != k) {
        throw std::invalid_argument("simulate: " + what + " has wrong length");
    }
    double sum = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw std::invalid_argument("simulate: " + what + " has a negative entry");
        sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12) {
        throw std::invalid_argument("simulate: " + what + " sums to " + std::to_string(sum) +
                                    ", expected 1");
    }
}

// Mixture density of the emission model weighted by the initial distribution,
// normalized by its maximum over the emission means; used by the duration model.
inline double normalized_true_density(const SimSpec& spec, const Point2& q) {
    const auto density = [&](const Point2& p) {
        double total = 0.0;
        for (int j = 0; j < spec.k; ++j) {
            const auto& e = spec.emissions[j];
            const double ux = (p.x - e.mean.x) / e.sd_x;
            const double uy = (p.y - e.mean.y) / e.sd_y;
            total += spec.initial_probs[j] *
                     std::exp(-0.5 * (ux * ux + uy * uy)) /
                     (2.0 * std::numbers::pi * e.sd_x * e.sd_y);
        }
        return total;
    };
    double peak = 0.0;
    for (int j = 0; j < spec.k; ++j) peak = std::max(peak, density(spec.emissions[j].mean));
    if (!(peak > 0.0)) return 0.0;
    return density(q) / peak;
}

} // namespace detail

inline void validate(const SimSpec& spec) {
    if (spec.k < 1) throw std::invalid_argument("simulate: k must be >= 1");
    if (spec.subjects < 1) throw std::invalid_argument("simulate: subjects must be >= 1");
    if (spec.fixations_per_subject < 1) {
        throw std::invalid_argument("simulate: fixations_per_subject must be >= 1");
    }
    detail::check_stochastic(spec.initial_probs, spec.k, "initial_probs");
    if (static_cast<int>(spec.transition_matrix.size()) != spec.k) {
        throw std::invalid_argument("simulate: transition_matrix has wrong row count");
    }
    for (int i = 0; i < spec.k; ++i) {
        detail::check_stochastic(spec.transition_matrix[i], spec.k,
                                 "transition_matrix row " + std::to_string(i));
    }
    if (static_cast<int>(spec.emissions.size()) != spec.k) {
        throw std::invalid_argument("simulate: emissions has wrong length");
    }
    for (const auto& e : spec.emissions) {
        if (!(e.sd_x > 0.0) || !(e.sd_y > 0.0)) {
            throw std::invalid_argument("simulate: emission sds must be positive");
        }
    }
    if (spec.duration_model && spec.duration_model->base_ms <= 0.0) {
        throw std::invalid_argument("simulate: duration base_ms must be positive");
    }
    if (spec.duration_model && spec.duration_model->density_coupling < 0.0) {
        throw std::invalid_argument("simulate: density_coupling must be non-negative");
    }
    if (spec.subject_prefix.empty()) {
        throw std::invalid_argument("simulate: subject_prefix must be non-empty");
    }
}

// Subject ids "s01", "s02", ... zero-padded to at least two digits.
inline std::string sim_subject_id(int index, int subjects, const std::string& prefix = "s") {
    std::string digits = std::to_string(index + 1);
    std::size_t width = std::to_string(subjects).size();
    width = std::max<std::size_t>(width, 2);
    while (digits.size() < width) digits.insert(digits.begin(), '0');
    return prefix + digits;
}

// Draw the dataset: per subject, S_1 ~ initial_probs, S_t | S_{t-1} from the
// transition row, X_t ~ Gaussian(emission[S_t]). Subjects use derived seeds,
// so generation is order-independent and bit-reproducible.
inline SimResult simulate(const SimSpec& spec) {
    validate(spec);
    SimResult result;
    for (int subject = 0; subject < spec.subjects; ++subject) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(subject)));
        FixationSequence seq;
        seq.subject_id = sim_subject_id(subject, spec.subjects, spec.subject_prefix);
        seq.image_id = spec.image_id;
        seq.colour_scheme = spec.scheme;
        seq.orientation = spec.orientation;
        std::vector<int> states;
        int state = 0;
        for (int t = 0; t < spec.fixations_per_subject; ++t) {
            state = t == 0 ? static_cast<int>(rng.categorical(spec.initial_probs))
                           : static_cast<int>(rng.categorical(spec.transition_matrix[state]));
            states.push_back(state);
            const auto& e = spec.emissions[state];
            const Point2 p{rng.normal(e.mean.x, e.sd_x), rng.normal(e.mean.y, e.sd_y)};
            double duration = 250.0;
            if (spec.duration_model) {
                const auto& dm = *spec.duration_model;
                duration = dm.base_ms *
                           (1.0 + dm.density_coupling * detail::normalized_true_density(spec, p)) *
                           std::exp(0.25 * rng.normal());
            }
            seq.points.push_back(p);
            seq.durations.push_back(duration);
            seq.fixation_indices.push_back(t + 1);
        }
        result.subject_ids.push_back(seq.subject_id);
        result.true_states.push_back(std::move(states));
        result.dataset.add(std::move(seq));
    }
    return result;
}

// Compare empirical initial/transition frequencies (from the true-state side
// channel) against the spec, as sup-norm deviations. Transition rows never
// visited are skipped.
inline SimDiagnostics empirical_check(const SimResult& result, const SimSpec& spec) {
    validate(spec);
    std::vector<long long> initial(spec.k, 0);
    std::vector<std::vector<long long>> transitions(spec.k, std::vector<long long>(spec.k, 0));
    for (const auto& states : result.true_states) {
        if (states.empty()) continue;
        initial[states.front()] += 1;
        for (std::size_t t = 1; t < states.size(); ++t) {
            transitions[states[t - 1]][states[t]] += 1;
        }
    }
    SimDiagnostics diag;
    long long initial_total = 0;
    for (long long c : initial) initial_total += c;
    for (int i = 0; i < spec.k; ++i) {
        const double freq = initial_total > 0
                                ? static_cast<double>(initial[i]) / static_cast<double>(initial_total)
                                : 0.0;
        diag.initial_sup_dev = std::max(diag.initial_sup_dev,
                                        std::fabs(freq - spec.initial_probs[i]));
    }
    for (int i = 0; i < spec.k; ++i) {
        long long row_total = 0;
        for (long long m : transitions[i]) row_total += m;
        if (row_total == 0) continue;
        for (int j = 0; j < spec.k; ++j) {
            const double freq = static_cast<double>(transitions[i][j]) /
                                static_cast<double>(row_total);
            diag.transition_sup_dev = std::max(diag.transition_sup_dev,
                                               std::fabs(freq - spec.transition_matrix[i][j]));
        }
    }
    return diag;
}

} // namespace fixmark
