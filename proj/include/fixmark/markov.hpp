#pragma once
// The k-state Markov point-process model and its Bayes factor against the
// i.i.d. null. States are hard cluster assignments, priors are Jeffreys
// Dirichlet(0.5,...,0.5), and the Dirichlet expectation in the Bayes factor
// denominator therefore has an exact Dirichlet-multinomial closed form; a
// Monte Carlo estimator is kept alongside it, with the closed form as its
// oracle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fixmark/clustering.hpp"
#include "fixmark/data.hpp"
#include "fixmark/density.hpp"
#include "fixmark/rng.hpp"
#include "fixmark/special.hpp"

namespace fixmark {

// Observed initial-state and transition counts over the training sequences.
struct TransitionCounts {
    int k = 0;
    std::vector<long long> initial_counts;                   // c_i
    std::vector<std::vector<long long>> transition_counts;   // m[i][i']

    long long initial_total() const {
        long long total = 0;
        for (long long c : initial_counts) total += c;
        return total;
    }

    long long transition_total() const {
        long long total = 0;
        for (const auto& row : transition_counts) {
            for (long long m : row) total += m;
        }
        return total;
    }
};

// Jeffreys-prior Dirichlet posteriors: alpha = 0.5 + count, elementwise.
struct DirichletMarkovPosterior {
    int k = 0;
    std::vector<double> initial_alpha;
    std::vector<std::vector<double>> transition_alpha;
};

struct PosteriorMean {
    std::vector<double> pi_hat;
    std::vector<std::vector<double>> p_hat;
};

// Everything needed to score a held-out sequence for one k.
struct MarkovMixtureModel {
    ClusterModel clusters;
    std::vector<Kde2D> densities;   // f_1..f_k, parallel to cluster labels
    Kde2D null_density;             // f, fit on all training points
    DirichletMarkovPosterior posterior;
};

struct McBayesFactor {
    double bf = 0.0;
    double log_bf = 0.0;         // natural log
    double std_error = 0.0;      // delta-method standard error of bf
    double rel_std_error = 0.0;  // std_error / bf
};

// Scores for one (image, scheme) across the k grid.
struct BayesFactorReport {
    struct PerK {
        std::vector<double> per_subject_bf;   // MC estimates, subject order
        double combined_bf = 1.0;
        double combined_log2_bf = 0.0;
        double mc_std_error = 0.0;
        double closed_form_bf = 1.0;          // combined closed-form reference
    };

    int image_id = 0;
    ColourScheme scheme = ColourScheme::Normal;
    std::map<int, PerK> per_k;
    int selected_k = 0;
    double strongest_bf = 1.0;
};

// Hard state sequence of a fixation sequence under a cluster model.
inline std::vector<int> assign_states(const ClusterModel& clusters, const FixationSequence& seq) {
    std::vector<int> states;
    states.reserve(seq.points.size());
    for (const auto& p : seq.points) states.push_back(assign(clusters, p));
    return states;
}

// Tally initial states and ordered adjacent transitions. Length-1 state
// sequences contribute only to the initial counts.
inline TransitionCounts count_transitions_from_states(int k,
                                                      const std::vector<std::vector<int>>& states) {
    if (k < 1) throw std::invalid_argument("count_transitions: k must be >= 1");
    TransitionCounts counts;
    counts.k = k;
    counts.initial_counts.assign(k, 0);
    counts.transition_counts.assign(k, std::vector<long long>(k, 0));
    for (const auto& s : states) {
        if (s.empty()) continue;
        counts.initial_counts[s.front()] += 1;
        for (std::size_t t = 1; t < s.size(); ++t) {
            counts.transition_counts[s[t - 1]][s[t]] += 1;
        }
    }
    return counts;
}

inline TransitionCounts count_transitions(const std::vector<const FixationSequence*>& train,
                                          const ClusterModel& clusters) {
    std::vector<std::vector<int>> states;
    states.reserve(train.size());
    for (const auto* seq : train) states.push_back(assign_states(clusters, *seq));
    return count_transitions_from_states(clusters.k, states);
}

inline DirichletMarkovPosterior posterior_from_counts(const TransitionCounts& counts) {
    DirichletMarkovPosterior post;
    post.k = counts.k;
    post.initial_alpha.resize(counts.k);
    for (int i = 0; i < counts.k; ++i) {
        post.initial_alpha[i] = 0.5 + static_cast<double>(counts.initial_counts[i]);
    }
    post.transition_alpha.assign(counts.k, std::vector<double>(counts.k, 0.0));
    for (int i = 0; i < counts.k; ++i) {
        for (int j = 0; j < counts.k; ++j) {
            post.transition_alpha[i][j] = 0.5 + static_cast<double>(counts.transition_counts[i][j]);
        }
    }
    return post;
}

// Posterior means: row-normalized alphas.
inline PosteriorMean posterior_mean(const DirichletMarkovPosterior& post) {
    PosteriorMean mean;
    double total = 0.0;
    for (double a : post.initial_alpha) total += a;
    mean.pi_hat.resize(post.k);
    for (int i = 0; i < post.k; ++i) mean.pi_hat[i] = post.initial_alpha[i] / total;
    mean.p_hat.assign(post.k, std::vector<double>(post.k, 0.0));
    for (int i = 0; i < post.k; ++i) {
        double row = 0.0;
        for (double a : post.transition_alpha[i]) row += a;
        for (int j = 0; j < post.k; ++j) mean.p_hat[i][j] = post.transition_alpha[i][j] / row;
    }
    return mean;
}

// Fit the per-cluster and null KDEs plus the posterior for one training fold.
// Cluster KDE bandwidths are floored at 1% of the full training data's
// per-axis standard deviation, which keeps single-point or collinear clusters
// from producing infinite density spikes.
inline MarkovMixtureModel fit_markov_model(const std::vector<const FixationSequence*>& train,
                                           ClusterModel clusters) {
    std::vector<Point2> all_points;
    for (const auto* seq : train) {
        all_points.insert(all_points.end(), seq->points.begin(), seq->points.end());
    }
    if (all_points.size() < 2) {
        throw DegenerateDensityError("training pool has fewer than 2 fixations");
    }
    std::vector<double> xs(all_points.size()), ys(all_points.size());
    for (std::size_t i = 0; i < all_points.size(); ++i) {
        xs[i] = all_points[i].x;
        ys[i] = all_points[i].y;
    }
    const double sd_x = detail::sample_sd(xs);
    const double sd_y = detail::sample_sd(ys);
    if (!(sd_x > 0.0) || !(sd_y > 0.0)) {
        throw DegenerateDensityError("training pool has zero variance on an axis");
    }
    const double floor_hx = 0.01 * sd_x;
    const double floor_hy = 0.01 * sd_y;

    MarkovMixtureModel model;
    model.null_density = fit_kde2d_floored(all_points, floor_hx, floor_hy);
    model.densities.reserve(clusters.k);
    for (int label = 0; label < clusters.k; ++label) {
        model.densities.push_back(
            fit_kde2d_floored(clusters.cluster_points(label), floor_hx, floor_hy));
    }
    model.posterior = posterior_from_counts(count_transitions(train, clusters));
    model.clusters = std::move(clusters);
    return model;
}

namespace detail {

// Test-sequence count vectors u under the model's hard assignment, plus the
// two density log-products entering the Bayes factor.
struct TestTally {
    std::vector<int> states;
    std::vector<long long> initial_counts;                 // one-hot at s_1
    std::vector<std::vector<long long>> transition_counts; // u[i][j]
    double log_null = 0.0;     // sum_t log f(X_t)
    double log_mixture = 0.0;  // sum_t log f_{s_t}(X_t)
};

inline TestTally tally_test(const MarkovMixtureModel& model, const FixationSequence& test) {
    if (test.points.empty()) throw std::invalid_argument("bayes factor: empty test sequence");
    const int k = model.clusters.k;
    TestTally tally;
    tally.states = assign_states(model.clusters, test);
    tally.initial_counts.assign(k, 0);
    tally.initial_counts[tally.states.front()] += 1;
    tally.transition_counts.assign(k, std::vector<long long>(k, 0));
    for (std::size_t t = 1; t < tally.states.size(); ++t) {
        tally.transition_counts[tally.states[t - 1]][tally.states[t]] += 1;
    }
    for (std::size_t t = 0; t < test.points.size(); ++t) {
        tally.log_null += model.null_density.log_evaluate(test.points[t]);
        tally.log_mixture += model.densities[tally.states[t]].log_evaluate(test.points[t]);
    }
    return tally;
}

} // namespace detail

// Exact log Bayes factor of the i.i.d. null against the k-state Markov model.
// The Dirichlet expectation E[pi_{s_1} prod p_{s_{t-1} s_t}] factorizes into
// one Dirichlet-multinomial evidence term per transition row plus the
// single-draw initial factor; the BF is the null likelihood over that
// expectation times the mixture density product.
inline double closed_form_log_bf(const MarkovMixtureModel& model, const FixationSequence& test) {
    const auto tally = detail::tally_test(model, test);
    double log_expect =
        dirichlet_multinomial_log_evidence(model.posterior.initial_alpha, tally.initial_counts);
    for (int i = 0; i < model.clusters.k; ++i) {
        log_expect += dirichlet_multinomial_log_evidence(model.posterior.transition_alpha[i],
                                                         tally.transition_counts[i]);
    }
    return tally.log_null - log_expect - tally.log_mixture;
}

inline double closed_form_bf(const MarkovMixtureModel& model, const FixationSequence& test) {
    return std::exp(closed_form_log_bf(model, test));
}

// Monte Carlo Bayes factor: draw (pi, p) from the posterior, average the
// chain probability of the assigned state path in log-sum-exp form, and
// report the delta-method standard error. Deterministic given the seed.
inline McBayesFactor mc_bf(const MarkovMixtureModel& model, const FixationSequence& test,
                           int samples, std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("mc_bf: samples must be >= 1");
    const auto tally = detail::tally_test(model, test);
    const int k = model.clusters.k;

    // Rows of p with no observed test transition contribute an empty product;
    // skip their draws entirely.
    std::vector<int> used_rows;
    for (int i = 0; i < k; ++i) {
        long long row_total = 0;
        for (long long u : tally.transition_counts[i]) row_total += u;
        if (row_total > 0) used_rows.push_back(i);
    }

    Rng rng(seed);
    std::vector<double> log_weights(samples);
    std::vector<double> draw;
    for (int s = 0; s < samples; ++s) {
        double w = 0.0;
        rng.dirichlet(model.posterior.initial_alpha, draw);
        for (int i = 0; i < k; ++i) {
            if (tally.initial_counts[i] > 0) {
                w += static_cast<double>(tally.initial_counts[i]) * std::log(draw[i]);
            }
        }
        for (int i : used_rows) {
            rng.dirichlet(model.posterior.transition_alpha[i], draw);
            for (int j = 0; j < k; ++j) {
                if (tally.transition_counts[i][j] > 0) {
                    w += static_cast<double>(tally.transition_counts[i][j]) * std::log(draw[j]);
                }
            }
        }
        log_weights[s] = w;
    }

    const double w_max = *std::max_element(log_weights.begin(), log_weights.end());
    double mean_e = 0.0;
    for (double w : log_weights) mean_e += std::exp(w - w_max);
    mean_e /= static_cast<double>(samples);
    double var_e = 0.0;
    for (double w : log_weights) {
        const double d = std::exp(w - w_max) - mean_e;
        var_e += d * d;
    }
    var_e = samples > 1 ? var_e / static_cast<double>(samples - 1) : 0.0;
    const double rel_se = std::sqrt(var_e / static_cast<double>(samples)) / mean_e;

    const double log_expect = w_max + std::log(mean_e);
    McBayesFactor out;
    out.log_bf = tally.log_null - log_expect - tally.log_mixture;
    out.bf = std::exp(out.log_bf);
    // BF is proportional to 1 / E-hat, so to first order se(BF)/BF = se(E)/E.
    out.rel_std_error = rel_se;
    out.std_error = out.bf * rel_se;
    return out;
}

// ---------------------------------------------------------------------------
// Leave-one-subject-out scoring over the k grid
// ---------------------------------------------------------------------------

struct ClusteringConfig {
    enum class Method { KMeans, Hierarchical };
    Method method = Method::KMeans;
    Metric metric = Metric::L2;
    Linkage linkage = Linkage::Ward;
    int knn_neighbours = 5;
    int restarts = 10;
};

struct ScoreConfig {
    int k_max = 10;
    int mc_samples = 10000;
    std::uint64_t seed = 0;
    enum class Combine { Geometric, Arithmetic };
    Combine combine = Combine::Geometric;
};

namespace detail {

inline ClusterModel fit_clusters(const std::vector<Point2>& points, int k,
                                 const ClusteringConfig& cfg, std::uint64_t seed) {
    if (cfg.method == ClusteringConfig::Method::KMeans) {
        return kmeans(points, k, cfg.restarts, seed);
    }
    return hierarchical(points, k, cfg.linkage, cfg.metric, cfg.knn_neighbours);
}

// Combine per-subject Bayes factors. Geometric: exp(mean log BF), the log2
// scale average; arithmetic behind the switch. Standard errors propagate by
// the delta method in either case.
inline void combine_bfs(const std::vector<McBayesFactor>& per_subject,
                        ScoreConfig::Combine combine, double& bf, double& log2_bf,
                        double& std_error) {
    const double m = static_cast<double>(per_subject.size());
    if (combine == ScoreConfig::Combine::Geometric) {
        double log_sum = 0.0, rel_var = 0.0;
        for (const auto& s : per_subject) {
            log_sum += s.log_bf;
            rel_var += s.rel_std_error * s.rel_std_error;
        }
        const double log_bf = log_sum / m;
        bf = std::exp(log_bf);
        log2_bf = log_bf / std::numbers::ln2;
        std_error = bf * std::sqrt(rel_var) / m;
    } else {
        double sum = 0.0, var = 0.0;
        for (const auto& s : per_subject) {
            sum += s.bf;
            var += s.std_error * s.std_error;
        }
        bf = sum / m;
        log2_bf = std::log2(bf);
        std_error = std::sqrt(var) / m;
    }
}

inline double combine_closed_form(const std::vector<double>& log_bfs,
                                  ScoreConfig::Combine combine) {
    const double m = static_cast<double>(log_bfs.size());
    if (combine == ScoreConfig::Combine::Geometric) {
        double log_sum = 0.0;
        for (double v : log_bfs) log_sum += v;
        return std::exp(log_sum / m);
    }
    double sum = 0.0;
    for (double v : log_bfs) sum += std::exp(v);
    return sum / m;
}

} // namespace detail

// Leave-one-subject-out Bayes factors for one (image, scheme) over k in
// 1..k_max. Each (held-out subject, k) cell derives its own seed from
// (master seed, subject index, k), so the grid may be evaluated in any order.
// k = 1 is the null against itself and scores exactly 1.
inline BayesFactorReport score_image(const Dataset& dataset, int image_id, ColourScheme scheme,
                                     const ClusteringConfig& clustering, const ScoreConfig& score) {
    if (score.k_max < 2) throw std::invalid_argument("score_image: k_max must be >= 2");
    const auto subject_set = dataset.subjects(image_id, scheme);
    const std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
    if (subjects.size() < 2) {
        throw std::invalid_argument("score_image: need >= 2 subjects for image " +
                                    std::to_string(image_id) + " scheme " + to_token(scheme));
    }

    BayesFactorReport report;
    report.image_id = image_id;
    report.scheme = scheme;

    for (int k = 1; k <= score.k_max; ++k) {
        BayesFactorReport::PerK cell;
        std::vector<McBayesFactor> mc_results;
        std::vector<double> closed_logs;
        for (std::size_t si = 0; si < subjects.size(); ++si) {
            if (k == 1) {
                mc_results.push_back({1.0, 0.0, 0.0, 0.0});
                closed_logs.push_back(0.0);
                continue;
            }
            const auto split = split_train_test(dataset, image_id, scheme, subjects[si]);
            std::vector<Point2> train_points;
            for (const auto* seq : split.train) {
                train_points.insert(train_points.end(), seq->points.begin(), seq->points.end());
            }
            const std::uint64_t cell_seed =
                derive_seed(score.seed, si, static_cast<std::uint64_t>(k));
            try {
                ClusterModel clusters = detail::fit_clusters(train_points, k, clustering,
                                                             derive_seed(cell_seed, 0));
                MarkovMixtureModel model = fit_markov_model(split.train, std::move(clusters));
                mc_results.push_back(
                    mc_bf(model, *split.test, score.mc_samples, derive_seed(cell_seed, 1)));
                closed_logs.push_back(closed_form_log_bf(model, *split.test));
            } catch (const std::exception& e) {
                throw std::runtime_error("image " + std::to_string(image_id) + " scheme " +
                                         to_token(scheme) + " k=" + std::to_string(k) +
                                         " subject '" + subjects[si] + "': " + e.what());
            }
        }
        for (const auto& r : mc_results) cell.per_subject_bf.push_back(r.bf);
        detail::combine_bfs(mc_results, score.combine, cell.combined_bf, cell.combined_log2_bf,
                            cell.mc_std_error);
        cell.closed_form_bf = detail::combine_closed_form(closed_logs, score.combine);
        report.per_k[k] = std::move(cell);
    }

    report.selected_k = 2;
    report.strongest_bf = report.per_k.at(2).combined_bf;
    for (int k = 2; k <= score.k_max; ++k) {
        const double bf = report.per_k.at(k).combined_bf;
        if (bf < report.strongest_bf) {
            report.strongest_bf = bf;
            report.selected_k = k;
        }
    }
    return report;
}

} // namespace fixmark
