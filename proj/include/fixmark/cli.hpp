#pragma once
// Command implementations behind the CLI binary: ingest, fit, score, roc,
// saccades, duration, simulate, report. Each command reads/writes files under
// the configured paths, prints a short summary to stdout, and returns a
// process exit code (0 only if nothing failed). The effective configuration
// is echoed into every JSON output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixmark/classify.hpp"
#include "fixmark/ingest.hpp"
#include "fixmark/json_io.hpp"
#include "fixmark/markov.hpp"
#include "fixmark/simulate.hpp"
#include "fixmark/stats.hpp"

namespace fixmark {

struct RunConfig {
    std::string command;
    std::string input;
    std::string out_dir = ".";
    std::string spec_file;        // simulate --spec
    std::string out_file;         // simulate --out
    ClusteringConfig clustering;  // --cluster-method/--metric/--linkage/--knn/--restarts
    int k_max = 10;
    int mc_samples = 10000;
    std::uint64_t seed = 0;
    ScoreConfig::Combine combine = ScoreConfig::Combine::Geometric;
    double threshold = 0.2;
    Delimiter delimiter = Delimiter::Comma;   // ingest input format
    bool has_header = false;
    int fit_k = 4;                            // fit --k
    std::optional<std::pair<int, int>> grid;  // fit --grid W H
    std::optional<int> image;                 // duration --image
    std::optional<ColourScheme> scheme;       // duration --scheme
};

inline const char* to_token(ClusteringConfig::Method m) {
    return m == ClusteringConfig::Method::KMeans ? "kmeans" : "hier";
}

inline const char* to_token(ScoreConfig::Combine c) {
    return c == ScoreConfig::Combine::Geometric ? "geometric" : "arithmetic";
}

inline ojson run_config_to_json(const RunConfig& cfg) {
    return ojson{{"command", cfg.command},
                 {"input", cfg.input},
                 {"out_dir", cfg.out_dir},
                 {"cluster_method", to_token(cfg.clustering.method)},
                 {"metric", to_token(cfg.clustering.metric)},
                 {"linkage", to_token(cfg.clustering.linkage)},
                 {"knn", cfg.clustering.knn_neighbours},
                 {"restarts", cfg.clustering.restarts},
                 {"k_max", cfg.k_max},
                 {"mc_samples", cfg.mc_samples},
                 {"combine", to_token(cfg.combine)},
                 {"seed", cfg.seed},
                 {"threshold", cfg.threshold}};
}

namespace detail {

template <typename... Args>
std::string str_printf(const char* format, Args... args) {
    const int size = std::snprintf(nullptr, 0, format, args...);
    if (size < 0) throw std::runtime_error("str_printf failed");
    std::string out(static_cast<std::size_t>(size), '\0');
    std::snprintf(out.data(), out.size() + 1, format, args...);
    return out;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
}

inline ojson read_json(const std::string& path) {
    return ojson::parse(read_text(path));
}

inline void write_json(const std::string& path, const ojson& j) {
    write_text(path, j.dump(2) + "\n");
}

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

inline Dataset load_dataset(const std::string& path) {
    return dataset_from_json(read_json(path));
}

// Scheme pairs in the reporting order, restricted to present schemes.
inline std::vector<std::pair<ColourScheme, ColourScheme>> scheme_pairs(
    const std::set<ColourScheme>& present) {
    const std::vector<std::pair<ColourScheme, ColourScheme>> all = {
        {ColourScheme::Normal, ColourScheme::Abnormal},
        {ColourScheme::Normal, ColourScheme::Grayscale},
        {ColourScheme::Abnormal, ColourScheme::Grayscale}};
    std::vector<std::pair<ColourScheme, ColourScheme>> out;
    for (const auto& pair : all) {
        if (present.count(pair.first) && present.count(pair.second)) out.push_back(pair);
    }
    return out;
}

inline std::string pair_label(ColourScheme a, ColourScheme b) {
    return std::string(short_label(a)) + " - " + short_label(b);
}

// "Norm - Abno: p = 0.0163" (three significant figures).
inline std::string ks_listing_line(ColourScheme a, ColourScheme b, double p) {
    return str_printf("%s: p = %.3g", pair_label(a, b).c_str(), p);
}

// "Norm - Abno: [-1.25, 1.71], p-value = 0.76".
inline std::string paired_listing_line(ColourScheme a, ColourScheme b, const TestResult& t) {
    return str_printf("%s: [%.2f, %.2f], p-value = %.2g", pair_label(a, b).c_str(),
                      t.ci_low.value(), t.ci_high.value(), t.p_value);
}

// The pi / p display, two decimals per entry:
//   pi = (0.05, 0.45, 0.13, 0.37)
//   p  = (0.51, 0.29, 0.14, 0.06)
//        (0.30, 0.26, 0.24, 0.20)
inline std::string pi_p_block(const PosteriorMean& mean) {
    const auto row = [](const std::vector<double>& values) {
        std::string out = "(";
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i > 0) out += ", ";
            out += str_printf("%.2f", values[i]);
        }
        return out + ")";
    };
    std::string out = "pi = " + row(mean.pi_hat) + "\n";
    for (std::size_t i = 0; i < mean.p_hat.size(); ++i) {
        out += (i == 0 ? "p  = " : "     ") + row(mean.p_hat[i]) + "\n";
    }
    return out;
}

// Sorted report_*.json files under a directory.
inline std::vector<std::string> report_files(const std::string& dir) {
    std::vector<std::string> out;
    if (!std::filesystem::is_directory(dir)) {
        throw std::runtime_error("'" + dir + "' is not a directory of reports");
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("report_image", 0) == 0 && name.size() > 5 &&
            name.substr(name.size() - 5) == ".json") {
            out.push_back(entry.path().string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::string image_scheme_stem(int image_id, ColourScheme scheme) {
    return "image" + std::to_string(image_id) + "_" + to_token(scheme);
}

} // namespace detail

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

inline int cmd_ingest(const RunConfig& cfg) {
    std::ifstream in(cfg.input, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open input '" << cfg.input << "'\n";
        return 1;
    }
    const auto records = parse_records(in, IngestFormat{cfg.delimiter, cfg.has_header});
    const Dataset dataset = group_sequences(records);
    if (records.empty()) std::cerr << "warning: no records parsed from '" << cfg.input << "'\n";

    ojson out = ojson{{"config", run_config_to_json(cfg)}};
    out.update(dataset_to_json(dataset));
    detail::write_json(detail::out_path(cfg, "dataset.json"), out);

    std::set<std::string> subjects = dataset.all_subjects();
    std::set<int> images;
    for (const auto& key : dataset.image_scheme_keys()) images.insert(key.image_id);
    std::cout << "ingested " << records.size() << " records into " << dataset.size()
              << " sequences (" << subjects.size() << " subjects, " << images.size()
              << " images, " << dataset.schemes().size() << " schemes)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

inline int cmd_simulate(const RunConfig& cfg) {
    if (cfg.spec_file.empty()) {
        std::cerr << "error: simulate requires --spec FILE\n";
        return 1;
    }
    const SimSpec spec = sim_spec_from_json(detail::read_json(cfg.spec_file));
    const SimResult result = simulate(spec);

    const std::string out_file =
        cfg.out_file.empty() ? detail::out_path(cfg, "simulated.csv") : cfg.out_file;
    detail::write_text(out_file, serialize_records(to_records(result.dataset)));

    // True states go to a sidecar, 1-based, so the data file stays clean.
    std::ostringstream states;
    for (std::size_t s = 0; s < result.subject_ids.size(); ++s) {
        for (std::size_t t = 0; t < result.true_states[s].size(); ++t) {
            states << result.subject_ids[s] << "," << (t + 1) << ","
                   << (result.true_states[s][t] + 1) << "\n";
        }
    }
    detail::write_text(out_file + ".states.csv", states.str());

    std::cout << "simulated " << spec.subjects << " subjects x " << spec.fixations_per_subject
              << " fixations (k=" << spec.k << ") -> " << out_file << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

inline int cmd_fit(const RunConfig& cfg) {
    const Dataset dataset = detail::load_dataset(cfg.input);
    int failures = 0;
    for (const auto& key : dataset.image_scheme_keys()) {
        const std::string stem = detail::image_scheme_stem(key.image_id, key.scheme);
        try {
            const auto train = dataset.find(key.image_id, key.scheme);
            std::vector<Point2> points;
            for (const auto* seq : train) {
                points.insert(points.end(), seq->points.begin(), seq->points.end());
            }
            ClusterModel clusters =
                cfg.clustering.method == ClusteringConfig::Method::KMeans
                    ? kmeans(points, cfg.fit_k, cfg.clustering.restarts,
                             derive_seed(cfg.seed, static_cast<std::uint64_t>(key.image_id),
                                         static_cast<std::uint64_t>(key.scheme)))
                    : hierarchical(points, cfg.fit_k, cfg.clustering.linkage,
                                   cfg.clustering.metric, cfg.clustering.knn_neighbours);
            const MarkovMixtureModel model = fit_markov_model(train, std::move(clusters));

            ojson densities = ojson::array();
            for (const auto& kde : model.densities) densities.push_back(kde2d_to_json(kde));
            detail::write_json(detail::out_path(cfg, "model_" + stem + ".json"),
                               ojson{{"config", run_config_to_json(cfg)},
                                     {"image_id", key.image_id},
                                     {"scheme", to_token(key.scheme)},
                                     {"k", cfg.fit_k},
                                     {"clusters", cluster_model_to_json(model.clusters)},
                                     {"null_density", kde2d_to_json(model.null_density)},
                                     {"densities", std::move(densities)},
                                     {"posterior", posterior_to_json(model.posterior)}});

            if (cfg.grid) {
                const auto [w, h] = *cfg.grid;
                double min_x = points.front().x, max_x = min_x;
                double min_y = points.front().y, max_y = min_y;
                for (const auto& p : points) {
                    min_x = std::min(min_x, p.x);
                    max_x = std::max(max_x, p.x);
                    min_y = std::min(min_y, p.y);
                    max_y = std::max(max_y, p.y);
                }
                const auto& kde = model.null_density;
                std::ostringstream csv;
                csv << "x,y,density\n";
                for (int row = 0; row < h; ++row) {
                    for (int col = 0; col < w; ++col) {
                        const double x = w == 1 ? min_x
                                                : min_x + (max_x - min_x) * col / (w - 1.0);
                        const double y = h == 1 ? min_y
                                                : min_y + (max_y - min_y) * row / (h - 1.0);
                        csv << fixmark::detail::format_real(x) << ","
                            << fixmark::detail::format_real(y) << ","
                            << fixmark::detail::format_real(kde.evaluate({x, y})) << "\n";
                    }
                }
                detail::write_text(detail::out_path(cfg, "density_" + stem + ".csv"), csv.str());
            }
            std::cout << "fit " << stem << " (k=" << cfg.fit_k << ")\n";
        } catch (const std::exception& e) {
            std::cerr << "error: fit " << stem << ": " << e.what() << "\n";
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

namespace detail {

// Fold-averaged posterior means at one k, mirroring the seeds score_image
// used, so the rendered pi/p block describes exactly the scored models.
inline PosteriorMean averaged_posterior_mean(const Dataset& dataset, int image_id,
                                             ColourScheme scheme, int k,
                                             const ClusteringConfig& clustering,
                                             std::uint64_t master_seed) {
    const auto subject_set = dataset.subjects(image_id, scheme);
    const std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
    PosteriorMean avg;
    avg.pi_hat.assign(k, 0.0);
    avg.p_hat.assign(k, std::vector<double>(k, 0.0));
    for (std::size_t si = 0; si < subjects.size(); ++si) {
        const auto split = split_train_test(dataset, image_id, scheme, subjects[si]);
        std::vector<Point2> points;
        for (const auto* seq : split.train) {
            points.insert(points.end(), seq->points.begin(), seq->points.end());
        }
        const std::uint64_t cell_seed =
            derive_seed(master_seed, si, static_cast<std::uint64_t>(k));
        const ClusterModel clusters =
            fit_clusters(points, k, clustering, derive_seed(cell_seed, 0));
        const PosteriorMean mean =
            posterior_mean(posterior_from_counts(count_transitions(split.train, clusters)));
        for (int i = 0; i < k; ++i) {
            avg.pi_hat[i] += mean.pi_hat[i];
            for (int j = 0; j < k; ++j) avg.p_hat[i][j] += mean.p_hat[i][j];
        }
    }
    const double folds = static_cast<double>(subjects.size());
    for (int i = 0; i < k; ++i) {
        avg.pi_hat[i] /= folds;
        for (int j = 0; j < k; ++j) avg.p_hat[i][j] /= folds;
    }
    return avg;
}

} // namespace detail

inline int cmd_score(const RunConfig& cfg) {
    const Dataset dataset = detail::load_dataset(cfg.input);
    int failures = 0;
    std::vector<BayesFactorReport> reports;

    const auto keys = dataset.image_scheme_keys();
    std::size_t scheme_index = 0;
    std::map<ColourScheme, std::uint64_t> scheme_ids;
    for (const auto& key : keys) {
        if (!scheme_ids.count(key.scheme)) scheme_ids[key.scheme] = scheme_index++;
    }

    for (const auto& key : keys) {
        const std::string stem = detail::image_scheme_stem(key.image_id, key.scheme);
        try {
            ScoreConfig score;
            score.k_max = cfg.k_max;
            score.mc_samples = cfg.mc_samples;
            score.combine = cfg.combine;
            // Per-(image, scheme) master seed so images draw independent MC streams.
            score.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(key.image_id),
                                     scheme_ids.at(key.scheme));
            BayesFactorReport report =
                score_image(dataset, key.image_id, key.scheme, cfg.clustering, score);

            ojson report_json = ojson{{"config", run_config_to_json(cfg)}};
            report_json.update(report_to_json(report));
            detail::write_json(detail::out_path(cfg, "report_" + stem + ".json"), report_json);

            const PosteriorMean block = detail::averaged_posterior_mean(
                dataset, key.image_id, key.scheme, report.selected_k, cfg.clustering, score.seed);
            detail::write_json(detail::out_path(cfg, "posterior_" + stem + ".json"),
                               ojson{{"image_id", key.image_id},
                                     {"scheme", to_token(key.scheme)},
                                     {"k", report.selected_k},
                                     {"pi_hat", block.pi_hat},
                                     {"p_hat", block.p_hat},
                                     {"rendered", detail::pi_p_block(block)}});

            std::cout << "scored " << stem << ": selected_k=" << report.selected_k
                      << " strongest_bf=" << detail::str_printf("%.4g", report.strongest_bf)
                      << "\n";
            reports.push_back(std::move(report));
        } catch (const std::exception& e) {
            std::cerr << "error: score " << stem << ": " << e.what() << "\n";
            ++failures;
        }
    }

    // Flat table of per-image log2 Bayes factors, one row per report.
    std::ostringstream table;
    table << "image_id,scheme,selected_k,strongest_bf,log2_bf\n";
    for (const auto& r : reports) {
        table << r.image_id << "," << to_token(r.scheme) << "," << r.selected_k << ","
              << fixmark::detail::format_real(r.strongest_bf) << ","
              << fixmark::detail::format_real(r.per_k.at(r.selected_k).combined_log2_bf) << "\n";
    }
    detail::write_text(detail::out_path(cfg, "log2_bf_table.csv"), table.str());

    // Paired t-tests on per-image log2 strongest BFs for each scheme pair,
    // over the images present under both schemes.
    std::map<ColourScheme, std::map<int, double>> log2_by_scheme;
    std::set<ColourScheme> present;
    for (const auto& r : reports) {
        log2_by_scheme[r.scheme][r.image_id] = r.per_k.at(r.selected_k).combined_log2_bf;
        present.insert(r.scheme);
    }
    ojson paired = ojson::object();
    std::string listing;
    for (const auto& [a, b] : detail::scheme_pairs(present)) {
        std::vector<double> va, vb;
        for (const auto& [image_id, value] : log2_by_scheme[a]) {
            const auto it = log2_by_scheme[b].find(image_id);
            if (it != log2_by_scheme[b].end()) {
                va.push_back(value);
                vb.push_back(it->second);
            }
        }
        const std::string label = detail::pair_label(a, b);
        try {
            const TestResult t = paired_t(va, vb);
            paired[label] = test_result_to_json(t);
            listing += detail::paired_listing_line(a, b, t) + "\n";
        } catch (const std::exception& e) {
            paired[label] = ojson{{"skipped", e.what()}};
        }
    }
    if (!listing.empty()) detail::write_text(detail::out_path(cfg, "paired_t_listing.txt"), listing);

    ojson summary = ojson{{"config", run_config_to_json(cfg)}};
    ojson summary_reports = ojson::array();
    for (const auto& r : reports) {
        summary_reports.push_back({{"image_id", r.image_id},
                                   {"scheme", to_token(r.scheme)},
                                   {"selected_k", r.selected_k},
                                   {"strongest_bf", r.strongest_bf},
                                   {"log2_bf", r.per_k.at(r.selected_k).combined_log2_bf}});
    }
    summary["reports"] = std::move(summary_reports);
    summary["paired_t"] = std::move(paired);
    summary["failures"] = failures;
    detail::write_json(detail::out_path(cfg, "score_summary.json"), summary);
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// roc
// ---------------------------------------------------------------------------

inline int cmd_roc(const RunConfig& cfg) {
    std::vector<double> coloured, grayscale;
    for (const auto& path : detail::report_files(cfg.input)) {
        const BayesFactorReport report = report_from_json(detail::read_json(path));
        if (report.scheme == ColourScheme::Grayscale) {
            grayscale.push_back(report.strongest_bf);
        } else {
            coloured.push_back(report.strongest_bf);
        }
    }
    if (coloured.empty() || grayscale.empty()) {
        std::cerr << "error: need both coloured and grayscale reports under '" << cfg.input
                  << "'\n";
        return 1;
    }
    const RocCurve curve = roc(coloured, grayscale);
    const ThresholdChoice best = best_threshold(curve);

    std::ostringstream csv;
    csv << "threshold,fpr,tpr\n";
    for (const auto& p : curve.points) {
        csv << fixmark::detail::format_real(p.threshold) << ","
            << fixmark::detail::format_real(p.fpr) << ","
            << fixmark::detail::format_real(p.tpr) << "\n";
    }
    detail::write_text(detail::out_path(cfg, "roc.csv"), csv.str());

    std::size_t tp = 0, fp = 0;
    for (double bf : coloured) tp += classify_at(bf, cfg.threshold) == Verdict::Coloured;
    for (double bf : grayscale) fp += classify_at(bf, cfg.threshold) == Verdict::Coloured;
    detail::write_json(
        detail::out_path(cfg, "roc_summary.json"),
        ojson{{"config", run_config_to_json(cfg)},
              {"n_coloured", coloured.size()},
              {"n_grayscale", grayscale.size()},
              {"auc", curve.auc},
              {"best_threshold", ojson{{"threshold", best.threshold},
                                       {"youden_j", best.youden_j},
                                       {"tpr", best.tpr},
                                       {"fpr", best.fpr}}},
              {"at_threshold", ojson{{"threshold", cfg.threshold},
                                     {"coloured_below", tp},
                                     {"grayscale_below", fp}}}});
    std::cout << detail::str_printf("roc: auc = %.4f, best threshold = %.4g (J = %.3f)\n",
                                    curve.auc, best.threshold, best.youden_j);
    return 0;
}

// ---------------------------------------------------------------------------
// saccades
// ---------------------------------------------------------------------------

inline int cmd_saccades(const RunConfig& cfg) {
    const Dataset dataset = detail::load_dataset(cfg.input);
    const auto schemes = dataset.schemes();

    std::map<ColourScheme, std::vector<SaccadeSet>> raw, normalized;
    for (ColourScheme scheme : schemes) {
        raw[scheme] = collect_saccades(dataset, scheme);
        normalized[scheme] = normalize_per_subject(raw[scheme]);
    }

    ojson raw_json = ojson::object(), norm_json = ojson::object();
    std::string listing = "KS tests on raw saccades:\n";
    for (const auto& [a, b] : detail::scheme_pairs(schemes)) {
        const TestResult t = ks_two_sample(pooled_lengths(raw[a]), pooled_lengths(raw[b]));
        raw_json[detail::pair_label(a, b)] = test_result_to_json(t);
        listing += detail::ks_listing_line(a, b, t.p_value) + "\n";
    }
    listing += "\nKS tests on normalised saccades:\n";
    for (const auto& [a, b] : detail::scheme_pairs(schemes)) {
        const TestResult t =
            ks_two_sample(pooled_lengths(normalized[a]), pooled_lengths(normalized[b]));
        norm_json[detail::pair_label(a, b)] = test_result_to_json(t);
        listing += detail::ks_listing_line(a, b, t.p_value) + "\n";
    }

    // Per-scheme saccade-length KDE curves, SJ bandwidth with the
    // normal-reference fallback.
    for (ColourScheme scheme : schemes) {
        const auto values = pooled_lengths(raw[scheme]);
        if (values.size() < 2) continue;
        Kde1D kde;
        try {
            kde = fit_kde1d_sj(values);
        } catch (const DegenerateDensityError&) {
            kde = Kde1D{values, normal_reference_bandwidth(values)};
        }
        const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
        const double lo = *lo_it - 3.0 * kde.bandwidth;
        const double hi = *hi_it + 3.0 * kde.bandwidth;
        std::ostringstream csv;
        csv << "value,density\n";
        const int steps = 256;
        for (int i = 0; i < steps; ++i) {
            const double v = lo + (hi - lo) * i / (steps - 1.0);
            csv << fixmark::detail::format_real(v) << ","
                << fixmark::detail::format_real(kde.evaluate(v)) << "\n";
        }
        detail::write_text(
            detail::out_path(cfg, std::string("saccade_kde_") + to_token(scheme) + ".csv"),
            csv.str());
    }

    // Fixation-count battery: per-sequence counts by scheme, Kruskal-Wallis
    // across schemes, Mann-Whitney per pair.
    std::map<ColourScheme, std::vector<double>> counts;
    for (const auto& seq : dataset.sequences()) {
        counts[seq.colour_scheme].push_back(static_cast<double>(seq.size()));
    }
    ojson counts_json = ojson::object();
    std::ostringstream counts_csv;
    counts_csv << "scheme,sequence,fixation_count\n";
    for (const auto& [scheme, values] : counts) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            counts_csv << to_token(scheme) << "," << (i + 1) << ","
                       << static_cast<long long>(values[i]) << "\n";
        }
    }
    detail::write_text(detail::out_path(cfg, "fixation_counts.csv"), counts_csv.str());
    listing += "\nFixation-count tests:\n";
    if (counts.size() >= 2) {
        std::vector<std::vector<double>> groups;
        for (const auto& [scheme, values] : counts) groups.push_back(values);
        // Degenerate batteries (e.g. every sequence the same length) are
        // recorded as skipped rather than failing the whole command.
        try {
            const TestResult kw = kruskal_wallis(groups);
            counts_json["kruskal_wallis"] = test_result_to_json(kw);
            listing += detail::str_printf("Kruskal-Wallis: p = %.3g\n", kw.p_value);
        } catch (const std::exception& e) {
            counts_json["kruskal_wallis"] = ojson{{"skipped", e.what()}};
            listing += std::string("Kruskal-Wallis: skipped (") + e.what() + ")\n";
        }
        ojson mw_json = ojson::object();
        for (const auto& [a, b] : detail::scheme_pairs(schemes)) {
            try {
                const TestResult mw = mann_whitney(counts[a], counts[b]);
                mw_json[detail::pair_label(a, b)] = test_result_to_json(mw);
                listing += detail::ks_listing_line(a, b, mw.p_value) + "\n";
            } catch (const std::exception& e) {
                mw_json[detail::pair_label(a, b)] = ojson{{"skipped", e.what()}};
                listing += detail::pair_label(a, b) + ": skipped (" + e.what() + ")\n";
            }
        }
        counts_json["mann_whitney"] = std::move(mw_json);
    }

    detail::write_text(detail::out_path(cfg, "saccades_listing.txt"), listing);
    detail::write_json(detail::out_path(cfg, "saccades_summary.json"),
                       ojson{{"config", run_config_to_json(cfg)},
                             {"raw_ks", std::move(raw_json)},
                             {"normalized_ks", std::move(norm_json)},
                             {"fixation_counts", std::move(counts_json)}});
    std::cout << "saccades: " << schemes.size() << " schemes analysed\n";
    return 0;
}

// ---------------------------------------------------------------------------
// duration
// ---------------------------------------------------------------------------

inline int cmd_duration(const RunConfig& cfg) {
    const Dataset dataset = detail::load_dataset(cfg.input);
    ojson per_scheme = ojson::object();
    std::string listing;
    int failures = 0;

    std::set<ColourScheme> schemes;
    if (cfg.scheme) {
        schemes.insert(*cfg.scheme);
    } else {
        schemes = dataset.schemes();
    }
    for (ColourScheme scheme : schemes) {
        try {
            const TestResult t = cfg.image
                                     ? duration_density_correlation(dataset, *cfg.image, scheme)
                                     : duration_density_correlation_scheme(dataset, scheme);
            per_scheme[to_token(scheme)] = test_result_to_json(t);
            listing += detail::str_printf("%s: r = %.4f, 95%% CI [%.4f, %.4f]\n",
                                          short_label(scheme), t.statistic, t.ci_low.value(),
                                          t.ci_high.value());
        } catch (const std::exception& e) {
            std::cerr << "error: duration " << to_token(scheme) << ": " << e.what() << "\n";
            per_scheme[to_token(scheme)] = ojson{{"skipped", e.what()}};
            ++failures;
        }
    }
    detail::write_text(detail::out_path(cfg, "duration_listing.txt"), listing);
    ojson summary = ojson{{"config", run_config_to_json(cfg)}};
    if (cfg.image) summary["image_id"] = *cfg.image;
    summary["per_scheme"] = std::move(per_scheme);
    detail::write_json(detail::out_path(cfg, "duration_summary.json"), summary);
    std::cout << "duration:\n" << listing;
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

inline int cmd_report(const RunConfig& cfg) {
    std::vector<BayesFactorReport> reports;
    for (const auto& path : detail::report_files(cfg.input)) {
        reports.push_back(report_from_json(detail::read_json(path)));
    }
    if (reports.empty()) {
        std::cerr << "error: no report files under '" << cfg.input << "'\n";
        return 1;
    }
    std::sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
        if (a.strongest_bf != b.strongest_bf) return a.strongest_bf < b.strongest_bf;
        if (a.image_id != b.image_id) return a.image_id < b.image_id;
        return static_cast<int>(a.scheme) < static_cast<int>(b.scheme);
    });

    std::ostringstream csv;
    csv << "rank,image_id,scheme,selected_k,strongest_bf\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        csv << (i + 1) << "," << r.image_id << "," << to_token(r.scheme) << "," << r.selected_k
            << "," << fixmark::detail::format_real(r.strongest_bf) << "\n";
    }
    detail::write_text(detail::out_path(cfg, "ranking.csv"), csv.str());

    const std::size_t head = std::min<std::size_t>(5, reports.size());
    std::string text = "Best-fitting images (smallest Bayes factor):\n";
    for (std::size_t i = 0; i < head; ++i) {
        const auto& r = reports[i];
        text += detail::str_printf("  %2zu. image %d (%s): k=%d, BF = %.4g\n", i + 1, r.image_id,
                                   to_token(r.scheme), r.selected_k, r.strongest_bf);
    }
    text += "Worst-fitting images (largest Bayes factor):\n";
    for (std::size_t i = reports.size() - head; i < reports.size(); ++i) {
        const auto& r = reports[i];
        text += detail::str_printf("  %2zu. image %d (%s): k=%d, BF = %.4g\n", i + 1, r.image_id,
                                   to_token(r.scheme), r.selected_k, r.strongest_bf);
    }

    // Attach the best image's averaged pi/p block if score left one behind.
    const auto& best = reports.front();
    const std::filesystem::path posterior_path =
        std::filesystem::path(cfg.input) /
        ("posterior_" + detail::image_scheme_stem(best.image_id, best.scheme) + ".json");
    if (std::filesystem::exists(posterior_path)) {
        const ojson posterior = detail::read_json(posterior_path.string());
        text += detail::str_printf(
            "\nPosterior summary for image %d (%s), k=%d:\n", best.image_id,
            to_token(best.scheme), posterior.at("k").get<int>());
        text += posterior.at("rendered").get<std::string>();
    }
    detail::write_text(detail::out_path(cfg, "report.txt"), text);

    ojson ranking = ojson::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        ranking.push_back({{"rank", i + 1},
                           {"image_id", r.image_id},
                           {"scheme", to_token(r.scheme)},
                           {"selected_k", r.selected_k},
                           {"strongest_bf", r.strongest_bf}});
    }
    detail::write_json(detail::out_path(cfg, "report_summary.json"),
                       ojson{{"config", run_config_to_json(cfg)}, {"ranking", std::move(ranking)}});
    std::cout << text;
    return 0;
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

inline int run_command(const RunConfig& cfg) {
    try {
        if (cfg.command == "ingest") return cmd_ingest(cfg);
        if (cfg.command == "fit") return cmd_fit(cfg);
        if (cfg.command == "score") return cmd_score(cfg);
        if (cfg.command == "roc") return cmd_roc(cfg);
        if (cfg.command == "saccades") return cmd_saccades(cfg);
        if (cfg.command == "duration") return cmd_duration(cfg);
        if (cfg.command == "simulate") return cmd_simulate(cfg);
        if (cfg.command == "report") return cmd_report(cfg);
        std::cerr << "error: unknown command '" << cfg.command << "'\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace fixmark
