#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fixmark/json_io.hpp"

using namespace fixmark;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args) {
    const std::string command = std::string(FIXMARK_CLI_PATH) + " " + args;
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("fixmark_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

ojson read_json_file(const fs::path& path) { return ojson::parse(read_file(path)); }

// Raw comma-delimited rows in the ingest field order.
const char* kRawRows =
    "167.0,244.0,100,1,s01,Normal,1,landscape\n"
    "1018.0,588.0,217,2,s01,Normal,1,landscape\n"
    "645.0,575.0,133,3,s01,Normal,1,landscape\n"
    "671.0,617.0,183,4,s02,Normal,1,landscape\n"
    "708.0,599.0,400,5,s02,Normal,1,landscape\n"
    "780.0,471.0,200,1,s01,Grayscale,2,portrait\n"
    "775.0,472.0,217,2,s01,Grayscale,2,portrait\n";

std::string write_sim_spec(const fs::path& dir, const std::string& scheme, int image_id,
                           std::uint64_t seed) {
    const ojson spec = {
        {"k", 2},
        {"initial_probs", {0.6, 0.4}},
        {"transition_matrix", {{0.8, 0.2}, {0.25, 0.75}}},
        {"emissions",
         {{{"mean", {120.0, 110.0}}, {"sd", {18.0, 18.0}}},
          {{"mean", {380.0, 300.0}}, {"sd", {22.0, 22.0}}}}},
        {"subjects", 4},
        {"fixations_per_subject", 25},
        {"seed", seed},
        {"scheme", scheme},
        {"image_id", image_id}};
    const fs::path path = dir / ("spec_" + scheme + std::to_string(image_id) + ".json");
    write_file(path, spec.dump(2));
    return path.string();
}

} // namespace

TEST_CASE("ingest writes a grouped dataset and a summary", "[cli]") {
    const fs::path dir = fresh_dir("ingest");
    write_file(dir / "raw.csv", kRawRows);

    const int code = run_cli("ingest --input " + (dir / "raw.csv").string() + " --out-dir " +
                             dir.string() + " > " + (dir / "stdout.txt").string());
    CHECK(code == 0);
    CHECK_THAT(read_file(dir / "stdout.txt"),
               ContainsSubstring("7 records into 3 sequences"));

    const Dataset dataset = dataset_from_json(read_json_file(dir / "dataset.json"));
    CHECK(dataset.size() == 3);
    const auto normals = dataset.find(1, ColourScheme::Normal);
    REQUIRE(normals.size() == 2);
    CHECK(normals[0]->subject_id == "s01");
    CHECK(normals[0]->points.size() == 3);
    CHECK(normals[0]->points[1].x == Approx(1018.0));
    const auto grays = dataset.find(2, ColourScheme::Grayscale);
    REQUIRE(grays.size() == 1);
    CHECK(grays[0]->durations[1] == Approx(217.0));
}

TEST_CASE("ingest reports malformed input with a line number", "[cli]") {
    const fs::path dir = fresh_dir("ingest_bad");
    write_file(dir / "raw.csv",
               "167.0,244.0,100,1,s01,Normal,1,landscape\n"
               "oops,244.0,100,2,s01,Normal,1,landscape\n");
    const int code = run_cli("ingest --input " + (dir / "raw.csv").string() + " --out-dir " +
                             dir.string() + " 2> " + (dir / "stderr.txt").string());
    CHECK(code != 0);
    CHECK_THAT(read_file(dir / "stderr.txt"), ContainsSubstring("line 2"));

    // Missing input file is an error, not a crash.
    CHECK(run_cli("ingest --input " + (dir / "nope.csv").string() + " --out-dir " + dir.string() +
                  " 2> /dev/null") != 0);
}

TEST_CASE("ingest of an empty file warns but succeeds", "[cli]") {
    const fs::path dir = fresh_dir("ingest_empty");
    write_file(dir / "raw.csv", "");
    const int code = run_cli("ingest --input " + (dir / "raw.csv").string() + " --out-dir " +
                             dir.string() + " > /dev/null 2> " + (dir / "stderr.txt").string());
    CHECK(code == 0);
    CHECK_THAT(read_file(dir / "stderr.txt"), ContainsSubstring("no records"));
    CHECK(dataset_from_json(read_json_file(dir / "dataset.json")).empty());
}

TEST_CASE("simulate then ingest round-trips the dataset", "[cli]") {
    const fs::path dir = fresh_dir("sim_roundtrip");
    const std::string spec = write_sim_spec(dir, "normal", 1, 99);

    CHECK(run_cli("simulate --spec " + spec + " --out " + (dir / "sim.csv").string() +
                  " > /dev/null") == 0);
    CHECK(fs::exists(dir / "sim.csv.states.csv"));

    CHECK(run_cli("ingest --input " + (dir / "sim.csv").string() + " --out-dir " + dir.string() +
                  " > /dev/null") == 0);
    const Dataset dataset = dataset_from_json(read_json_file(dir / "dataset.json"));
    CHECK(dataset.size() == 4);
    CHECK(dataset.find(1, ColourScheme::Normal).size() == 4);

    // The states sidecar is one row per fixation, 1-based states.
    std::istringstream states(read_file(dir / "sim.csv.states.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(states, line)) {
        ++rows;
        CHECK_THAT(line, ContainsSubstring("s0"));
    }
    CHECK(rows == 4 * 25);
}

TEST_CASE("score then roc separates markov from iid data", "[cli]") {
    const fs::path dir = fresh_dir("score_roc");

    // Two Markov "coloured" images and two iid "grayscale" images.
    std::string csv;
    for (int image = 1; image <= 2; ++image) {
        const std::string spec = write_sim_spec(dir, "normal", image, 100 + image);
        const std::string out = (dir / ("m" + std::to_string(image) + ".csv")).string();
        REQUIRE(run_cli("simulate --spec " + spec + " --out " + out + " > /dev/null") == 0);
        csv += read_file(out);
    }
    for (int image = 3; image <= 4; ++image) {
        const ojson spec = {{"k", 1},
                            {"initial_probs", {1.0}},
                            {"transition_matrix", {{1.0}}},
                            {"emissions", {{{"mean", {250.0, 220.0}}, {"sd", {70.0, 60.0}}}}},
                            {"subjects", 4},
                            {"fixations_per_subject", 25},
                            {"seed", 200 + image},
                            {"scheme", "grayscale"},
                            {"image_id", image}};
        const fs::path spec_path = dir / ("g" + std::to_string(image) + ".json");
        write_file(spec_path, spec.dump());
        const std::string out = (dir / ("g" + std::to_string(image) + ".csv")).string();
        REQUIRE(run_cli("simulate --spec " + spec_path.string() + " --out " + out +
                        " > /dev/null") == 0);
        csv += read_file(out);
    }
    write_file(dir / "all.csv", csv);
    REQUIRE(run_cli("ingest --input " + (dir / "all.csv").string() + " --out-dir " + dir.string() +
                    " > /dev/null") == 0);

    REQUIRE(run_cli("score --input " + (dir / "dataset.json").string() + " --out-dir " +
                    dir.string() + " --k-max 3 --mc-samples 400 --seed 5 > /dev/null") == 0);
    for (const char* name :
         {"report_image1_normal.json", "report_image2_normal.json",
          "report_image3_grayscale.json", "report_image4_grayscale.json", "log2_bf_table.csv",
          "score_summary.json"}) {
        CHECK(fs::exists(dir / name));
    }
    const ojson report = read_json_file(dir / "report_image1_normal.json");
    CHECK(report.at("image_id").get<int>() == 1);
    CHECK(report.at("config").at("mc_samples").get<int>() == 400);
    CHECK(report.at("selected_k").get<int>() >= 2);

    REQUIRE(run_cli("roc --input " + dir.string() + " --out-dir " + dir.string() +
                    " > /dev/null") == 0);
    const ojson roc_summary = read_json_file(dir / "roc_summary.json");
    CHECK(roc_summary.at("n_coloured").get<int>() == 2);
    CHECK(roc_summary.at("n_grayscale").get<int>() == 2);
    // Strong Markov structure vs a single blob: clean separation.
    CHECK(roc_summary.at("auc").get<double>() >= 0.75);
    CHECK(fs::exists(dir / "roc.csv"));

    REQUIRE(run_cli("report --input " + dir.string() + " --out-dir " + dir.string() + " > " +
                    (dir / "report_stdout.txt").string()) == 0);
    const std::string text = read_file(dir / "report.txt");
    CHECK_THAT(text, ContainsSubstring("Best-fitting images"));
    CHECK_THAT(text, ContainsSubstring("pi = ("));
    CHECK_THAT(read_file(dir / "ranking.csv"), ContainsSubstring("rank,image_id,scheme"));
}

TEST_CASE("saccades and duration commands produce their summaries", "[cli]") {
    const fs::path dir = fresh_dir("saccade_duration");
    std::string csv;
    for (const auto& [scheme, image, seed] :
         {std::tuple<std::string, int, int>{"normal", 1, 11},
          std::tuple<std::string, int, int>{"abnormal", 1, 12},
          std::tuple<std::string, int, int>{"grayscale", 1, 13}}) {
        // Distinct viewer cohorts per scheme, like the real data's n*/a*/g*.
        const ojson spec = {{"k", 2},
                            {"initial_probs", {0.5, 0.5}},
                            {"transition_matrix", {{0.7, 0.3}, {0.3, 0.7}}},
                            {"emissions",
                             {{{"mean", {130.0, 120.0}}, {"sd", {20.0, 20.0}}},
                              {{"mean", {400.0, 320.0}}, {"sd", {80.0, 80.0}}}}},
                            {"subjects", 5},
                            {"fixations_per_subject", 30},
                            {"duration_model", {{"base_ms", 250.0}, {"density_coupling", 1.5}}},
                            {"seed", seed},
                            {"scheme", scheme},
                            {"image_id", image},
                            {"subject_prefix", scheme.substr(0, 1)}};
        const fs::path spec_path = dir / (scheme + ".json");
        write_file(spec_path, spec.dump());
        const std::string out = (dir / (scheme + ".csv")).string();
        REQUIRE(run_cli("simulate --spec " + spec_path.string() + " --out " + out +
                        " > /dev/null") == 0);
        csv += read_file(out);
    }
    write_file(dir / "all.csv", csv);
    REQUIRE(run_cli("ingest --input " + (dir / "all.csv").string() + " --out-dir " + dir.string() +
                    " > /dev/null") == 0);

    REQUIRE(run_cli("saccades --input " + (dir / "dataset.json").string() + " --out-dir " +
                    dir.string() + " > /dev/null") == 0);
    const std::string listing = read_file(dir / "saccades_listing.txt");
    CHECK_THAT(listing, ContainsSubstring("Norm - Abno: p = "));
    CHECK_THAT(listing, ContainsSubstring("Norm - Gray: p = "));
    CHECK_THAT(listing, ContainsSubstring("Abno - Gray: p = "));
    const ojson saccades = read_json_file(dir / "saccades_summary.json");
    CHECK(saccades.at("raw_ks").size() == 3);
    CHECK(saccades.at("normalized_ks").size() == 3);
    CHECK(saccades.at("fixation_counts").contains("kruskal_wallis"));
    CHECK(fs::exists(dir / "saccade_kde_normal.csv"));
    CHECK(fs::exists(dir / "fixation_counts.csv"));

    REQUIRE(run_cli("duration --input " + (dir / "dataset.json").string() + " --out-dir " +
                    dir.string() + " > /dev/null") == 0);
    const ojson duration = read_json_file(dir / "duration_summary.json");
    for (const char* scheme : {"normal", "abnormal", "grayscale"}) {
        CHECK(duration.at("per_scheme").contains(scheme));
    }
    CHECK_THAT(read_file(dir / "duration_listing.txt"), ContainsSubstring("95% CI ["));

    // Scheme filter restricts the computation.
    REQUIRE(run_cli("duration --input " + (dir / "dataset.json").string() + " --out-dir " +
                    (dir / "one").string() + " --scheme normal > /dev/null") == 0);
    CHECK(read_json_file(dir / "one" / "duration_summary.json").at("per_scheme").size() == 1);
}

TEST_CASE("rerunning a seeded command is byte-identical", "[cli]") {
    const fs::path dir = fresh_dir("determinism");
    const std::string spec = write_sim_spec(dir, "normal", 1, 321);
    REQUIRE(run_cli("simulate --spec " + spec + " --out " + (dir / "sim.csv").string() +
                    " > /dev/null") == 0);
    REQUIRE(run_cli("ingest --input " + (dir / "sim.csv").string() + " --out-dir " + dir.string() +
                    " > /dev/null") == 0);

    // Rerun into the same output directory (the echoed config contains the
    // resolved paths, so the directory itself must be stable).
    const std::string score_cmd = "score --input " + (dir / "dataset.json").string() +
                                  " --out-dir " + (dir / "out").string() +
                                  " --k-max 3 --mc-samples 300 --seed 12 > /dev/null";
    REQUIRE(run_cli(score_cmd) == 0);
    std::map<std::string, std::string> first;
    for (const char* name : {"report_image1_normal.json", "posterior_image1_normal.json",
                             "log2_bf_table.csv", "score_summary.json"}) {
        first[name] = read_file(dir / "out" / name);
    }
    fs::remove_all(dir / "out");
    REQUIRE(run_cli(score_cmd) == 0);
    for (const auto& [name, content] : first) {
        CHECK(read_file(dir / "out" / name) == content);
    }

    // Simulate twice with one seed: identical CSVs.
    REQUIRE(run_cli("simulate --spec " + spec + " --out " + (dir / "sim2.csv").string() +
                    " > /dev/null") == 0);
    CHECK(read_file(dir / "sim.csv") == read_file(dir / "sim2.csv"));
}

TEST_CASE("config file values yield to explicit flags", "[cli]") {
    const fs::path dir = fresh_dir("config");
    const std::string spec = write_sim_spec(dir, "normal", 1, 77);
    REQUIRE(run_cli("simulate --spec " + spec + " --out " + (dir / "sim.csv").string() +
                    " > /dev/null") == 0);
    REQUIRE(run_cli("ingest --input " + (dir / "sim.csv").string() + " --out-dir " + dir.string() +
                    " > /dev/null") == 0);
    write_file(dir / "config.json",
               R"({"mc_samples": 250, "k_max": 3, "seed": 4, "combine": "arithmetic"})");

    REQUIRE(run_cli("score --input " + (dir / "dataset.json").string() + " --out-dir " +
                    (dir / "from_config").string() + " --config " +
                    (dir / "config.json").string() + " > /dev/null") == 0);
    const ojson from_config =
        read_json_file(dir / "from_config" / "report_image1_normal.json").at("config");
    CHECK(from_config.at("mc_samples").get<int>() == 250);
    CHECK(from_config.at("k_max").get<int>() == 3);
    CHECK(from_config.at("seed").get<int>() == 4);
    CHECK(from_config.at("combine").get<std::string>() == "arithmetic");

    REQUIRE(run_cli("score --input " + (dir / "dataset.json").string() + " --out-dir " +
                    (dir / "overridden").string() + " --config " +
                    (dir / "config.json").string() + " --mc-samples 350 > /dev/null") == 0);
    const ojson overridden =
        read_json_file(dir / "overridden" / "report_image1_normal.json").at("config");
    CHECK(overridden.at("mc_samples").get<int>() == 350);
    CHECK(overridden.at("k_max").get<int>() == 3);   // config still covers the rest

    // Unknown config keys are rejected.
    write_file(dir / "bad.json", R"({"mc_sample": 250})");
    CHECK(run_cli("score --input " + (dir / "dataset.json").string() + " --out-dir " +
                  (dir / "bad").string() + " --config " + (dir / "bad.json").string() +
                  " 2> /dev/null") != 0);
}

TEST_CASE("bad invocations exit nonzero", "[cli]") {
    CHECK(run_cli("2> /dev/null") != 0);                       // no subcommand
    CHECK(run_cli("frobnicate 2> /dev/null") != 0);            // unknown subcommand
    CHECK(run_cli("score 2> /dev/null") != 0);                 // missing --input
    CHECK(run_cli("roc --input /nonexistent_dir_fixmark --out-dir /tmp 2> /dev/null") != 0);
}
