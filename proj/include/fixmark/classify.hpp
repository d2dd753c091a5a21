#pragma once
// Colour-vs-grayscale classification by thresholding Bayes factors. "True
// positive" is a coloured image whose BF falls below the threshold, "false
// positive" a grayscale image below it; thresholds sweep the observed BFs
// plus sentinels at both infinities.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fixmark/markov.hpp"

namespace fixmark {

enum class Verdict { Coloured, Grayscale };

inline const char* to_token(Verdict v) {
    return v == Verdict::Coloured ? "coloured" : "grayscale";
}

struct RocPoint {
    double threshold = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;   // ascending threshold; includes +-inf sentinels
    double auc = 0.0;
};

struct ThresholdChoice {
    double threshold = 0.0;
    double youden_j = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

// BF strictly below the threshold reads as coloured viewing; ties go to
// grayscale so that an infinite-threshold sweep endpoint is well defined.
inline Verdict classify_at(double bf, double threshold) {
    return bf < threshold ? Verdict::Coloured : Verdict::Grayscale;
}

namespace detail {

inline double fraction_below(const std::vector<double>& values, double threshold) {
    std::size_t below = 0;
    for (double v : values) {
        if (v < threshold) ++below;
    }
    return static_cast<double>(below) / static_cast<double>(values.size());
}

} // namespace detail

// ROC over the union of observed BFs plus sentinels; AUC by the trapezoid
// rule over the swept (FPR, TPR) polyline.
inline RocCurve roc(const std::vector<double>& coloured_bfs,
                    const std::vector<double>& grayscale_bfs) {
    if (coloured_bfs.empty() || grayscale_bfs.empty()) {
        throw std::invalid_argument("roc: both BF lists must be non-empty");
    }
    std::vector<double> thresholds(coloured_bfs);
    thresholds.insert(thresholds.end(), grayscale_bfs.begin(), grayscale_bfs.end());
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.insert(thresholds.begin(), -std::numeric_limits<double>::infinity());
    thresholds.push_back(std::numeric_limits<double>::infinity());

    RocCurve curve;
    for (double t : thresholds) {
        curve.points.push_back({t, detail::fraction_below(coloured_bfs, t),
                                detail::fraction_below(grayscale_bfs, t)});
    }
    double auc = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        auc += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
    }
    curve.auc = auc;
    return curve;
}

// The "most separating" threshold: maximal Youden's J = TPR - FPR over the
// finite observed thresholds, lowest threshold breaking ties.
inline ThresholdChoice best_threshold(const RocCurve& curve) {
    ThresholdChoice best;
    bool have = false;
    for (const auto& p : curve.points) {
        if (!std::isfinite(p.threshold)) continue;
        const double j = p.tpr - p.fpr;
        if (!have || j > best.youden_j) {
            best = {p.threshold, j, p.tpr, p.fpr};
            have = true;
        }
    }
    if (!have) throw std::invalid_argument("best_threshold: no finite thresholds");
    return best;
}

// Images ordered best-fit first: ascending strongest BF, ties by image id.
inline std::vector<std::pair<int, double>> rank_images(
    const std::vector<BayesFactorReport>& reports) {
    std::vector<std::pair<int, double>> out;
    out.reserve(reports.size());
    for (const auto& r : reports) out.push_back({r.image_id, r.strongest_bf});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second < b.second;
        return a.first < b.first;
    });
    return out;
}

} // namespace fixmark
