// fixmark command-line front end. Flags beat --config file values, which beat
// built-in defaults; the config file is applied before parsing so CLI11's
// normal override semantics implement the precedence.

#include <CLI11.hpp>

#include "fixmark/cli.hpp"

namespace {

using fixmark::RunConfig;

// Apply recognised keys from a JSON config file as new defaults.
void apply_config_file(RunConfig& cfg, const std::string& path) {
    const fixmark::ojson j = fixmark::detail::read_json(path);
    const auto fail = [&](const std::string& key, const std::string& why) {
        throw std::runtime_error("config '" + path + "': key '" + key + "': " + why);
    };
    for (const auto& [key, value] : j.items()) {
        if (key == "cluster_method") {
            const std::string token = value.get<std::string>();
            if (token == "kmeans") {
                cfg.clustering.method = fixmark::ClusteringConfig::Method::KMeans;
            } else if (token == "hier") {
                cfg.clustering.method = fixmark::ClusteringConfig::Method::Hierarchical;
            } else {
                fail(key, "expected kmeans or hier");
            }
        } else if (key == "metric") {
            const auto metric = fixmark::parse_metric(value.get<std::string>());
            if (!metric) fail(key, "expected l1, l2 or linf");
            cfg.clustering.metric = *metric;
        } else if (key == "linkage") {
            const auto linkage = fixmark::parse_linkage(value.get<std::string>());
            if (!linkage) fail(key, "expected ward, complete or upgma");
            cfg.clustering.linkage = *linkage;
        } else if (key == "knn") {
            cfg.clustering.knn_neighbours = value.get<int>();
        } else if (key == "restarts") {
            cfg.clustering.restarts = value.get<int>();
        } else if (key == "k_max") {
            cfg.k_max = value.get<int>();
        } else if (key == "mc_samples") {
            cfg.mc_samples = value.get<int>();
        } else if (key == "combine") {
            const std::string token = value.get<std::string>();
            if (token == "geometric") {
                cfg.combine = fixmark::ScoreConfig::Combine::Geometric;
            } else if (token == "arithmetic") {
                cfg.combine = fixmark::ScoreConfig::Combine::Arithmetic;
            } else {
                fail(key, "expected geometric or arithmetic");
            }
        } else if (key == "seed") {
            cfg.seed = value.get<std::uint64_t>();
        } else if (key == "threshold") {
            cfg.threshold = value.get<double>();
        } else {
            fail(key, "unknown key");
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;

    // Pre-scan for --config so file values become defaults before parsing.
    try {
        for (int i = 1; i + 1 < argc; ++i) {
            if (std::string(argv[i]) == "--config") apply_config_file(cfg, argv[i + 1]);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App app{"Markov point-process analysis of eye-fixation sequences"};
    app.require_subcommand(1);
    std::string config_path, cluster_method = fixmark::to_token(cfg.clustering.method);
    std::string metric = fixmark::to_token(cfg.clustering.metric);
    std::string linkage = fixmark::to_token(cfg.clustering.linkage);
    std::string combine = fixmark::to_token(cfg.combine);
    std::string delimiter = "comma", scheme;
    std::vector<int> grid;
    int image = -1;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out-dir", cfg.out_dir, "Directory for output files");
        sub->add_option("--seed", cfg.seed, "Master RNG seed");
        sub->add_option("--config", config_path, "JSON config file with default options");
    };
    const auto add_clustering = [&](CLI::App* sub) {
        sub->add_option("--cluster-method", cluster_method, "Clustering method")
            ->check(CLI::IsMember({"kmeans", "hier"}));
        sub->add_option("--metric", metric, "Distance metric for hierarchical clustering")
            ->check(CLI::IsMember({"l1", "l2", "linf"}));
        sub->add_option("--linkage", linkage, "Linkage for hierarchical clustering")
            ->check(CLI::IsMember({"ward", "complete", "upgma"}));
        sub->add_option("--knn", cfg.clustering.knn_neighbours,
                        "Neighbours for k-NN state assignment");
        sub->add_option("--restarts", cfg.clustering.restarts, "k-means restarts");
    };

    auto* ingest = app.add_subcommand("ingest", "Parse raw fixation records into a dataset");
    ingest->add_option("--input", cfg.input, "Raw fixation file")->required();
    ingest->add_option("--delimiter", delimiter, "Field delimiter")
        ->check(CLI::IsMember({"comma", "whitespace"}));
    ingest->add_flag("--header", cfg.has_header, "Skip a header line");
    add_common(ingest);

    auto* fit = app.add_subcommand("fit", "Fit cluster + Markov models per image and scheme");
    fit->add_option("--input", cfg.input, "Dataset JSON from ingest")->required();
    fit->add_option("--k", cfg.fit_k, "Number of states to fit");
    fit->add_option("--grid", grid, "Density grid size: W H")->expected(2);
    add_clustering(fit);
    add_common(fit);

    auto* score = app.add_subcommand("score", "Bayes-factor scoring with LOSO validation");
    score->add_option("--input", cfg.input, "Dataset JSON from ingest")->required();
    score->add_option("--k-max", cfg.k_max, "Largest state count to scan");
    score->add_option("--mc-samples", cfg.mc_samples, "Monte Carlo samples per Bayes factor");
    score->add_option("--combine", combine, "Per-subject combination rule")
        ->check(CLI::IsMember({"geometric", "arithmetic"}));
    add_clustering(score);
    add_common(score);

    auto* roc = app.add_subcommand("roc", "ROC analysis over score reports");
    roc->add_option("--input", cfg.input, "Directory containing report_image*.json")->required();
    roc->add_option("--threshold", cfg.threshold, "Bayes-factor classification threshold");
    add_common(roc);

    auto* saccades = app.add_subcommand("saccades", "Saccade-length and fixation-count tests");
    saccades->add_option("--input", cfg.input, "Dataset JSON from ingest")->required();
    add_common(saccades);

    auto* duration = app.add_subcommand("duration", "Duration vs fixation-density correlation");
    duration->add_option("--input", cfg.input, "Dataset JSON from ingest")->required();
    duration->add_option("--image", image, "Restrict to one image id");
    duration->add_option("--scheme", scheme, "Restrict to one colour scheme")
        ->check(CLI::IsMember({"normal", "abnormal", "grayscale"}));
    add_common(duration);

    auto* simulate = app.add_subcommand("simulate", "Generate synthetic fixation data");
    simulate->add_option("--spec", cfg.spec_file, "Simulation spec JSON")->required();
    simulate->add_option("--out", cfg.out_file, "Output CSV path");
    add_common(simulate);

    auto* report = app.add_subcommand("report", "Rank images and summarise posteriors");
    report->add_option("--input", cfg.input, "Directory containing report_image*.json")
        ->required();
    add_common(report);

    CLI11_PARSE(app, argc, argv);

    cfg.command = app.get_subcommands().front()->get_name();
    cfg.clustering.method = cluster_method == "kmeans"
                                ? fixmark::ClusteringConfig::Method::KMeans
                                : fixmark::ClusteringConfig::Method::Hierarchical;
    cfg.clustering.metric = *fixmark::parse_metric(metric);
    cfg.clustering.linkage = *fixmark::parse_linkage(linkage);
    cfg.combine = combine == "geometric" ? fixmark::ScoreConfig::Combine::Geometric
                                         : fixmark::ScoreConfig::Combine::Arithmetic;
    cfg.delimiter =
        delimiter == "comma" ? fixmark::Delimiter::Comma : fixmark::Delimiter::Whitespace;
    if (image >= 0) cfg.image = image;
    if (!scheme.empty()) cfg.scheme = *fixmark::parse_colour_scheme(scheme);
    return fixmark::run_command(cfg);
}
