#pragma once
// Supporting inference battery: two-sample Kolmogorov-Smirnov, paired t with
// confidence interval, Kruskal-Wallis, Mann-Whitney, Pearson correlation with
// Fisher-z interval, and saccade extraction / per-subject normalization.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fixmark/clustering.hpp"
#include "fixmark/data.hpp"
#include "fixmark/density.hpp"
#include "fixmark/special.hpp"

namespace fixmark {

struct TestResult {
    double statistic = 0.0;
    double p_value = 0.0;
    std::optional<double> ci_low;    // 95% interval when the test provides one
    std::optional<double> ci_high;
    std::optional<double> df;
    bool tie_corrected = false;
};

// Saccade lengths of one subject under one colour scheme, pooled over images.
struct SaccadeSet {
    std::string subject_id;
    ColourScheme scheme = ColourScheme::Normal;
    std::vector<double> lengths;
};

// Euclidean distances between successive fixations; empty for n <= 1.
inline std::vector<double> saccades(const FixationSequence& seq) {
    std::vector<double> out;
    for (std::size_t t = 1; t < seq.points.size(); ++t) {
        out.push_back(std::sqrt(squared_l2(seq.points[t], seq.points[t - 1])));
    }
    return out;
}

// Per-subject saccade sets for one scheme, ordered by subject id. Subjects
// without any saccade under the scheme (only length-1 sequences) are dropped.
inline std::vector<SaccadeSet> collect_saccades(const Dataset& dataset, ColourScheme scheme) {
    std::map<std::string, std::vector<double>> by_subject;
    for (const auto& seq : dataset.sequences()) {
        if (seq.colour_scheme != scheme) continue;
        auto lengths = saccades(seq);
        auto& pool = by_subject[seq.subject_id];
        pool.insert(pool.end(), lengths.begin(), lengths.end());
    }
    std::vector<SaccadeSet> out;
    for (auto& [subject, lengths] : by_subject) {
        if (lengths.empty()) continue;
        out.push_back({subject, scheme, std::move(lengths)});
    }
    return out;
}

inline std::vector<double> pooled_lengths(const std::vector<SaccadeSet>& sets) {
    std::vector<double> out;
    for (const auto& s : sets) out.insert(out.end(), s.lengths.begin(), s.lengths.end());
    return out;
}

// Standardize each subject's lengths to sample mean 0 and sample sd 1.
inline std::vector<SaccadeSet> normalize_per_subject(const std::vector<SaccadeSet>& sets) {
    std::vector<SaccadeSet> out;
    for (const auto& s : sets) {
        if (s.lengths.size() < 2) {
            throw std::invalid_argument("normalize_per_subject: subject '" + s.subject_id +
                                        "' has fewer than 2 saccades");
        }
        double mean = 0.0;
        for (double v : s.lengths) mean += v;
        mean /= static_cast<double>(s.lengths.size());
        double ss = 0.0;
        for (double v : s.lengths) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(s.lengths.size() - 1));
        if (!(sd > 0.0)) {
            throw std::invalid_argument("normalize_per_subject: subject '" + s.subject_id +
                                        "' has zero saccade variance");
        }
        SaccadeSet norm{s.subject_id, s.scheme, {}};
        norm.lengths.reserve(s.lengths.size());
        for (double v : s.lengths) norm.lengths.push_back((v - mean) / sd);
        out.push_back(std::move(norm));
    }
    return out;
}

namespace detail {

// Average ranks (1-based) of the pooled values, plus the tie-group sizes
// needed for the standard tie-correction factors.
struct Ranked {
    std::vector<double> ranks;       // parallel to the input
    std::vector<std::size_t> ties;   // size of every tie group (incl. size 1)
};

inline Ranked average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    Ranked out;
    out.ranks.resize(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t t = i; t <= j; ++t) out.ranks[order[t]] = rank;
        out.ties.push_back(j - i + 1);
        i = j + 1;
    }
    return out;
}

} // namespace detail

// Two-sample Kolmogorov-Smirnov. D = sup |F_a - F_b|; p from the asymptotic
// Kolmogorov distribution at sqrt(n_eff) * D with n_eff = n_a n_b / (n_a + n_b).
inline TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t ia = 0, ib = 0;
    while (ia < a.size() && ib < b.size()) {
        const double v = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] == v) ++ia;
        while (ib < b.size() && b[ib] == v) ++ib;
        d = std::max(d, std::fabs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    const double n_eff = na * nb / (na + nb);
    TestResult out;
    out.statistic = d;
    out.p_value = kolmogorov_q(std::sqrt(n_eff) * d);
    return out;
}

// Paired t-test on the differences a - b, with a 95% CI for the mean difference.
inline TestResult paired_t(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("paired_t: unequal lengths");
    const std::size_t n = a.size();
    if (n < 2) throw std::invalid_argument("paired_t: need at least 2 pairs");
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
    double mean = 0.0;
    for (double v : diff) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : diff) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
        throw std::invalid_argument("paired_t: differences have zero variance");
    }
    const double se = sd / std::sqrt(static_cast<double>(n));
    const double nu = static_cast<double>(n - 1);
    const double t = mean / se;
    const double t_crit = student_t_quantile(0.975, nu);
    TestResult out;
    out.statistic = t;
    out.p_value = student_t_two_sided_p(t, nu);
    out.ci_low = mean - t_crit * se;
    out.ci_high = mean + t_crit * se;
    out.df = nu;
    return out;
}

// Kruskal-Wallis H with average-rank tie correction; p via the chi-squared
// approximation with (groups - 1) degrees of freedom.
inline TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw std::invalid_argument("kruskal_wallis: need >= 2 groups");
    std::vector<double> pooled;
    for (const auto& g : groups) {
        if (g.empty()) throw std::invalid_argument("kruskal_wallis: empty group");
        pooled.insert(pooled.end(), g.begin(), g.end());
    }
    const double n = static_cast<double>(pooled.size());
    const auto ranked = detail::average_ranks(pooled);

    double h = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double rank_sum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) rank_sum += ranked.ranks[offset + i];
        h += rank_sum * rank_sum / static_cast<double>(g.size());
        offset += g.size();
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);

    double tie_sum = 0.0;
    bool any_tie = false;
    for (std::size_t t : ranked.ties) {
        const double td = static_cast<double>(t);
        tie_sum += td * td * td - td;
        if (t > 1) any_tie = true;
    }
    const double correction = 1.0 - tie_sum / (n * n * n - n);
    if (!(correction > 0.0)) {
        throw std::invalid_argument("kruskal_wallis: all pooled values identical");
    }
    h /= correction;

    const double df = static_cast<double>(groups.size() - 1);
    TestResult out;
    out.statistic = h;
    out.p_value = 1.0 - chi_squared_cdf(h, df);
    out.df = df;
    out.tie_corrected = any_tie;
    return out;
}

// Mann-Whitney U for sample a against sample b: U counts pairs with a > b
// (ties half weight), so a entirely below b gives U = 0 and U + U' = n_a n_b.
// Two-sided p via the normal approximation with tie and continuity correction.
inline TestResult mann_whitney(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney: empty sample");
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranked = detail::average_ranks(pooled);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double n = na + nb;

    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) rank_sum_a += ranked.ranks[i];
    const double u = rank_sum_a - na * (na + 1.0) / 2.0;

    double tie_sum = 0.0;
    bool any_tie = false;
    for (std::size_t t : ranked.ties) {
        const double td = static_cast<double>(t);
        tie_sum += td * td * td - td;
        if (t > 1) any_tie = true;
    }
    const double var = na * nb / 12.0 * ((n + 1.0) - tie_sum / (n * (n - 1.0)));
    if (!(var > 0.0)) throw std::invalid_argument("mann_whitney: all pooled values identical");

    const double mu = na * nb / 2.0;
    // Continuity correction shrinks |U - mu| by 0.5.
    const double shifted = std::max(std::fabs(u - mu) - 0.5, 0.0);
    const double z = shifted / std::sqrt(var);
    TestResult out;
    out.statistic = u;
    out.p_value = std::clamp(2.0 * (1.0 - normal_cdf(z)), 0.0, 1.0);
    out.tie_corrected = any_tie;
    return out;
}

// Pearson correlation with a Fisher-z 95% CI and a t-based two-sided p.
inline TestResult pearson_fisher(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson_fisher: unequal lengths");
    const std::size_t n = x.size();
    if (n < 4) throw std::invalid_argument("pearson_fisher: need at least 4 pairs");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        throw std::invalid_argument("pearson_fisher: zero variance");
    }
    const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double nu = static_cast<double>(n - 2);
    TestResult out;
    out.statistic = r;
    if (std::fabs(r) < 1.0) {
        const double t = r * std::sqrt(nu / (1.0 - r * r));
        out.p_value = student_t_two_sided_p(t, nu);
    } else {
        out.p_value = 0.0;
    }
    const double z = std::atanh(r);
    const double se = 1.0 / std::sqrt(static_cast<double>(n - 3));
    const double z_crit = normal_quantile(0.975);
    out.ci_low = std::tanh(z - z_crit * se);
    out.ci_high = std::tanh(z + z_crit * se);
    out.df = nu;
    return out;
}

namespace detail {

// One leave-one-subject-out fold of the duration-density pairing: evaluate the
// training subjects' duration-weighted KDE at the held-out fixations.
inline void duration_density_pairs(const Dataset& dataset, int image_id, ColourScheme scheme,
                                   std::vector<double>& densities, std::vector<double>& durations) {
    const auto subjects = dataset.subjects(image_id, scheme);
    if (subjects.size() < 2) {
        throw std::invalid_argument("duration_density_correlation: need >= 2 subjects on image " +
                                    std::to_string(image_id));
    }
    for (const auto& held_out : subjects) {
        const auto split = split_train_test(dataset, image_id, scheme, held_out);
        std::vector<Point2> points;
        std::vector<double> weights;
        for (const auto* seq : split.train) {
            points.insert(points.end(), seq->points.begin(), seq->points.end());
            weights.insert(weights.end(), seq->durations.begin(), seq->durations.end());
        }
        const Kde2D kde = fit_kde2d_weighted(points, weights);
        for (std::size_t t = 0; t < split.test->points.size(); ++t) {
            densities.push_back(kde.evaluate(split.test->points[t]));
            durations.push_back(split.test->durations[t]);
        }
    }
}

} // namespace detail

// Pearson correlation between held-out fixation durations and the training
// subjects' duration-weighted density at those fixations, pooled over
// leave-one-subject-out folds of one (image, scheme).
inline TestResult duration_density_correlation(const Dataset& dataset, int image_id,
                                               ColourScheme scheme) {
    std::vector<double> densities, durations;
    detail::duration_density_pairs(dataset, image_id, scheme, densities, durations);
    return pearson_fisher(densities, durations);
}

// Same pairing pooled across every image of the scheme.
inline TestResult duration_density_correlation_scheme(const Dataset& dataset, ColourScheme scheme) {
    std::vector<double> densities, durations;
    for (int image_id : dataset.images(scheme)) {
        detail::duration_density_pairs(dataset, image_id, scheme, densities, durations);
    }
    if (densities.empty()) {
        throw std::invalid_argument("duration_density_correlation: no images for scheme");
    }
    return pearson_fisher(densities, durations);
}

} // namespace fixmark
