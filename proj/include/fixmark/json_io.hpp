#pragma once
// JSON layouts for every artifact the CLI reads or writes. Object keys keep
// insertion order and collections are emitted in sorted order, so a rerun
// with the same inputs produces byte-identical files.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fixmark/classify.hpp"
#include "fixmark/clustering.hpp"
#include "fixmark/data.hpp"
#include "fixmark/density.hpp"
#include "fixmark/markov.hpp"
#include "fixmark/simulate.hpp"
#include "fixmark/stats.hpp"

namespace fixmark {

using ojson = nlohmann::ordered_json;

inline ColourScheme scheme_from_token(const std::string& token) {
    const auto scheme = parse_colour_scheme(token);
    if (!scheme) throw std::runtime_error("unknown colour scheme token '" + token + "'");
    return *scheme;
}

inline Orientation orientation_from_token(const std::string& token) {
    const auto orientation = parse_orientation(token);
    if (!orientation) throw std::runtime_error("unknown orientation token '" + token + "'");
    return *orientation;
}

// ---------------------------------------------------------------------------
// Dataset: grouped by image, then scheme, then subject
// ---------------------------------------------------------------------------

inline ojson dataset_to_json(const Dataset& dataset) {
    ojson images = ojson::array();
    std::map<int, std::map<ColourScheme, std::vector<const FixationSequence*>>> grouped;
    for (const auto& seq : dataset.sequences()) {
        grouped[seq.image_id][seq.colour_scheme].push_back(&seq);
    }
    for (auto& [image_id, by_scheme] : grouped) {
        ojson schemes = ojson::array();
        for (auto& [scheme, seqs] : by_scheme) {
            std::sort(seqs.begin(), seqs.end(),
                      [](const FixationSequence* a, const FixationSequence* b) {
                          return a->subject_id < b->subject_id;
                      });
            ojson subjects = ojson::array();
            for (const auto* seq : seqs) {
                ojson fixations = ojson::array();
                for (std::size_t i = 0; i < seq->size(); ++i) {
                    fixations.push_back({{"x", seq->points[i].x},
                                         {"y", seq->points[i].y},
                                         {"duration_ms", seq->durations[i]},
                                         {"fixation_index", seq->fixation_indices[i]}});
                }
                subjects.push_back({{"subject_id", seq->subject_id},
                                    {"orientation", to_token(seq->orientation)},
                                    {"fixations", std::move(fixations)}});
            }
            schemes.push_back({{"scheme", to_token(scheme)}, {"subjects", std::move(subjects)}});
        }
        images.push_back({{"image_id", image_id}, {"schemes", std::move(schemes)}});
    }
    return ojson{{"images", std::move(images)}};
}

inline Dataset dataset_from_json(const ojson& j) {
    Dataset dataset;
    for (const auto& image : j.at("images")) {
        const int image_id = image.at("image_id").get<int>();
        for (const auto& scheme_block : image.at("schemes")) {
            const ColourScheme scheme =
                scheme_from_token(scheme_block.at("scheme").get<std::string>());
            for (const auto& subject : scheme_block.at("subjects")) {
                FixationSequence seq;
                seq.subject_id = subject.at("subject_id").get<std::string>();
                seq.image_id = image_id;
                seq.colour_scheme = scheme;
                seq.orientation =
                    orientation_from_token(subject.at("orientation").get<std::string>());
                for (const auto& fix : subject.at("fixations")) {
                    seq.points.push_back({fix.at("x").get<double>(), fix.at("y").get<double>()});
                    seq.durations.push_back(fix.at("duration_ms").get<double>());
                    seq.fixation_indices.push_back(fix.at("fixation_index").get<int>());
                }
                dataset.add(std::move(seq));
            }
        }
    }
    return dataset;
}

// ---------------------------------------------------------------------------
// Cluster models and KDEs
// ---------------------------------------------------------------------------

inline ojson points_to_json(const std::vector<Point2>& points) {
    ojson out = ojson::array();
    for (const auto& p : points) out.push_back({p.x, p.y});
    return out;
}

inline std::vector<Point2> points_from_json(const ojson& j) {
    std::vector<Point2> out;
    for (const auto& p : j) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return out;
}

// Labels are serialized 1-based to match the rendered state space {1..k}.
inline ojson cluster_model_to_json(const ClusterModel& model) {
    ojson labels = ojson::array();
    for (int lab : model.labels) labels.push_back(lab + 1);
    return ojson{{"k", model.k},
                 {"rule", to_token(model.rule)},
                 {"metric", to_token(model.metric)},
                 {"knn_neighbours", model.knn_neighbours},
                 {"centres", points_to_json(model.centres)},
                 {"training_points", points_to_json(model.training_points)},
                 {"labels", std::move(labels)}};
}

inline ClusterModel cluster_model_from_json(const ojson& j) {
    ClusterModel model;
    model.k = j.at("k").get<int>();
    const std::string rule = j.at("rule").get<std::string>();
    if (rule == to_token(AssignRule::NearestCentre)) {
        model.rule = AssignRule::NearestCentre;
    } else if (rule == to_token(AssignRule::Knn)) {
        model.rule = AssignRule::Knn;
    } else {
        throw std::runtime_error("unknown assignment rule '" + rule + "'");
    }
    const std::string metric = j.at("metric").get<std::string>();
    if (metric == "l1") {
        model.metric = Metric::L1;
    } else if (metric == "l2") {
        model.metric = Metric::L2;
    } else if (metric == "linf") {
        model.metric = Metric::Linf;
    } else {
        throw std::runtime_error("unknown metric '" + metric + "'");
    }
    model.knn_neighbours = j.at("knn_neighbours").get<int>();
    model.centres = points_from_json(j.at("centres"));
    model.training_points = points_from_json(j.at("training_points"));
    for (const auto& lab : j.at("labels")) model.labels.push_back(lab.get<int>() - 1);
    return model;
}

inline ojson kde2d_to_json(const Kde2D& kde) {
    ojson out{{"support", points_to_json(kde.support)}, {"h_x", kde.h_x}, {"h_y", kde.h_y}};
    if (!kde.weights.empty()) out["weights"] = kde.weights;
    return out;
}

inline Kde2D kde2d_from_json(const ojson& j) {
    Kde2D kde;
    kde.support = points_from_json(j.at("support"));
    kde.h_x = j.at("h_x").get<double>();
    kde.h_y = j.at("h_y").get<double>();
    if (j.contains("weights")) kde.weights = j.at("weights").get<std::vector<double>>();
    return kde;
}

inline ojson posterior_to_json(const DirichletMarkovPosterior& post) {
    return ojson{{"k", post.k},
                 {"initial_alpha", post.initial_alpha},
                 {"transition_alpha", post.transition_alpha}};
}

inline DirichletMarkovPosterior posterior_from_json(const ojson& j) {
    DirichletMarkovPosterior post;
    post.k = j.at("k").get<int>();
    post.initial_alpha = j.at("initial_alpha").get<std::vector<double>>();
    post.transition_alpha = j.at("transition_alpha").get<std::vector<std::vector<double>>>();
    return post;
}

// ---------------------------------------------------------------------------
// Bayes factor reports
// ---------------------------------------------------------------------------

inline ojson report_to_json(const BayesFactorReport& report) {
    ojson per_k = ojson::object();
    for (const auto& [k, cell] : report.per_k) {
        per_k[std::to_string(k)] = ojson{{"per_subject_bf", cell.per_subject_bf},
                                         {"combined_bf", cell.combined_bf},
                                         {"combined_log2_bf", cell.combined_log2_bf},
                                         {"mc_std_error", cell.mc_std_error},
                                         {"closed_form_bf", cell.closed_form_bf}};
    }
    return ojson{{"image_id", report.image_id},
                 {"scheme", to_token(report.scheme)},
                 {"selected_k", report.selected_k},
                 {"strongest_bf", report.strongest_bf},
                 {"per_k", std::move(per_k)}};
}

inline BayesFactorReport report_from_json(const ojson& j) {
    BayesFactorReport report;
    report.image_id = j.at("image_id").get<int>();
    report.scheme = scheme_from_token(j.at("scheme").get<std::string>());
    report.selected_k = j.at("selected_k").get<int>();
    report.strongest_bf = j.at("strongest_bf").get<double>();
    for (const auto& [key, value] : j.at("per_k").items()) {
        BayesFactorReport::PerK cell;
        cell.per_subject_bf = value.at("per_subject_bf").get<std::vector<double>>();
        cell.combined_bf = value.at("combined_bf").get<double>();
        cell.combined_log2_bf = value.at("combined_log2_bf").get<double>();
        cell.mc_std_error = value.at("mc_std_error").get<double>();
        cell.closed_form_bf = value.at("closed_form_bf").get<double>();
        report.per_k[std::stoi(key)] = std::move(cell);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Test results and simulation specs
// ---------------------------------------------------------------------------

inline ojson test_result_to_json(const TestResult& result) {
    ojson out{{"statistic", result.statistic}, {"p_value", result.p_value}};
    if (result.ci_low) out["ci_low"] = *result.ci_low;
    if (result.ci_high) out["ci_high"] = *result.ci_high;
    if (result.df) out["df"] = *result.df;
    out["tie_corrected"] = result.tie_corrected;
    return out;
}

inline ojson sim_spec_to_json(const SimSpec& spec) {
    ojson emissions = ojson::array();
    for (const auto& e : spec.emissions) {
        emissions.push_back({{"mean", {e.mean.x, e.mean.y}}, {"sd", {e.sd_x, e.sd_y}}});
    }
    ojson out{{"k", spec.k},
              {"initial_probs", spec.initial_probs},
              {"transition_matrix", spec.transition_matrix},
              {"emissions", std::move(emissions)},
              {"subjects", spec.subjects},
              {"fixations_per_subject", spec.fixations_per_subject},
              {"seed", spec.seed},
              {"scheme", to_token(spec.scheme)},
              {"image_id", spec.image_id},
              {"orientation", to_token(spec.orientation)},
              {"subject_prefix", spec.subject_prefix}};
    if (spec.duration_model) {
        out["duration_model"] = ojson{{"base_ms", spec.duration_model->base_ms},
                                      {"density_coupling", spec.duration_model->density_coupling}};
    }
    return out;
}

inline SimSpec sim_spec_from_json(const ojson& j) {
    SimSpec spec;
    spec.k = j.at("k").get<int>();
    spec.initial_probs = j.at("initial_probs").get<std::vector<double>>();
    spec.transition_matrix = j.at("transition_matrix").get<std::vector<std::vector<double>>>();
    for (const auto& e : j.at("emissions")) {
        EmissionSpec emission;
        emission.mean = {e.at("mean").at(0).get<double>(), e.at("mean").at(1).get<double>()};
        emission.sd_x = e.at("sd").at(0).get<double>();
        emission.sd_y = e.at("sd").at(1).get<double>();
        spec.emissions.push_back(emission);
    }
    spec.subjects = j.at("subjects").get<int>();
    spec.fixations_per_subject = j.at("fixations_per_subject").get<int>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("scheme")) spec.scheme = scheme_from_token(j.at("scheme").get<std::string>());
    if (j.contains("image_id")) spec.image_id = j.at("image_id").get<int>();
    if (j.contains("orientation")) {
        spec.orientation = orientation_from_token(j.at("orientation").get<std::string>());
    }
    if (j.contains("subject_prefix")) {
        spec.subject_prefix = j.at("subject_prefix").get<std::string>();
    }
    if (j.contains("duration_model")) {
        DurationModel dm;
        dm.base_ms = j.at("duration_model").at("base_ms").get<double>();
        dm.density_coupling = j.at("duration_model").at("density_coupling").get<double>();
        spec.duration_model = dm;
    }
    return spec;
}

} // namespace fixmark
