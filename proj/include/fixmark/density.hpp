#pragma once
// Gaussian kernel density estimation. 2D product-kernel KDEs use the per-axis
// normal-reference rule h_j = sd_j * n^(-1/6); the 1D saccade-length KDE uses
// the Sheather-Jones solve-the-equation bandwidth. Evaluation is exact
// summation over the support; log densities go through log-sum-exp so that
// likelihoods stay finite far into the tails.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "fixmark/data.hpp"

namespace fixmark {

class DegenerateDensityError : public std::runtime_error {
public:
    explicit DegenerateDensityError(const std::string& message)
        : std::runtime_error("degenerate cluster: " + message) {}
};

namespace detail {

inline double sample_sd(std::span<const double> values) {
    const std::size_t n = values.size();
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

inline double logsumexp(std::span<const double> logs) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : logs) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    double sum = 0.0;
    for (double v : logs) sum += std::exp(v - m);
    return m + std::log(sum);
}

} // namespace detail

// Product-Gaussian 2D KDE with per-axis bandwidths, optionally weighted.
struct Kde2D {
    std::vector<Point2> support;
    double h_x = 0.0;
    double h_y = 0.0;
    std::vector<double> weights;   // empty = uniform; otherwise sums to 1

    bool valid() const { return !support.empty() && h_x > 0.0 && h_y > 0.0; }

    double log_evaluate(const Point2& q) const {
        const double log_norm = -std::log(2.0 * std::numbers::pi * h_x * h_y);
        const bool uniform = weights.empty();
        const double log_n = std::log(static_cast<double>(support.size()));
        std::vector<double> terms(support.size());
        for (std::size_t i = 0; i < support.size(); ++i) {
            const double ux = (q.x - support[i].x) / h_x;
            const double uy = (q.y - support[i].y) / h_y;
            double t = log_norm - 0.5 * (ux * ux + uy * uy);
            t += uniform ? -log_n : std::log(weights[i]);
            terms[i] = t;
        }
        return detail::logsumexp(terms);
    }

    double evaluate(const Point2& q) const { return std::exp(log_evaluate(q)); }
};

// 1D Gaussian KDE.
struct Kde1D {
    std::vector<double> support;
    double bandwidth = 0.0;

    double log_evaluate(double q) const {
        const double log_norm = -std::log(bandwidth * std::sqrt(2.0 * std::numbers::pi));
        const double log_n = std::log(static_cast<double>(support.size()));
        std::vector<double> terms(support.size());
        for (std::size_t i = 0; i < support.size(); ++i) {
            const double u = (q - support[i]) / bandwidth;
            terms[i] = log_norm - 0.5 * u * u - log_n;
        }
        return detail::logsumexp(terms);
    }

    double evaluate(double q) const { return std::exp(log_evaluate(q)); }
};

// Normal-reference 2D fit. Requires >= 2 points and nonzero variance on both
// axes; callers that can see degenerate clusters use fit_kde2d_floored.
inline Kde2D fit_kde2d(const std::vector<Point2>& points) {
    if (points.size() < 2) {
        throw DegenerateDensityError("need at least 2 points, got " + std::to_string(points.size()));
    }
    std::vector<double> xs(points.size()), ys(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        xs[i] = points[i].x;
        ys[i] = points[i].y;
    }
    const double sd_x = detail::sample_sd(xs);
    const double sd_y = detail::sample_sd(ys);
    if (!(sd_x > 0.0) || !(sd_y > 0.0)) {
        throw DegenerateDensityError("zero variance on an axis");
    }
    const double factor = std::pow(static_cast<double>(points.size()), -1.0 / 6.0);
    return Kde2D{points, sd_x * factor, sd_y * factor, {}};
}

// Fit with per-axis bandwidth floors. Handles the degenerate cases the plain
// fit rejects: single-point supports and zero-variance axes keep the floor.
inline Kde2D fit_kde2d_floored(const std::vector<Point2>& points, double floor_hx, double floor_hy) {
    if (points.empty()) throw DegenerateDensityError("empty support");
    if (!(floor_hx > 0.0) || !(floor_hy > 0.0)) {
        throw DegenerateDensityError("bandwidth floor must be positive");
    }
    double h_x = 0.0, h_y = 0.0;
    if (points.size() >= 2) {
        std::vector<double> xs(points.size()), ys(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            xs[i] = points[i].x;
            ys[i] = points[i].y;
        }
        const double factor = std::pow(static_cast<double>(points.size()), -1.0 / 6.0);
        h_x = detail::sample_sd(xs) * factor;
        h_y = detail::sample_sd(ys) * factor;
    }
    return Kde2D{points, std::max(h_x, floor_hx), std::max(h_y, floor_hy), {}};
}

// Duration-weighted variant: kernel weights proportional to the given
// non-negative weights (normalized here); bandwidths from the unweighted rule.
inline Kde2D fit_kde2d_weighted(const std::vector<Point2>& points,
                                const std::vector<double>& raw_weights) {
    if (points.size() != raw_weights.size()) {
        throw std::invalid_argument("fit_kde2d_weighted: points/weights size mismatch");
    }
    Kde2D kde = fit_kde2d(points);
    double total = 0.0;
    for (double w : raw_weights) {
        if (w < 0.0) throw std::invalid_argument("fit_kde2d_weighted: negative weight");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("fit_kde2d_weighted: weights sum to zero");
    kde.weights.resize(raw_weights.size());
    for (std::size_t i = 0; i < raw_weights.size(); ++i) kde.weights[i] = raw_weights[i] / total;
    return kde;
}

// Sum of log KDE densities over a point sequence; empty input gives 0.
inline double log_likelihood_iid(const Kde2D& kde, std::span<const Point2> points) {
    double total = 0.0;
    for (const auto& p : points) total += kde.log_evaluate(p);
    return total;
}

inline double log_likelihood_iid(const Kde2D& kde, const FixationSequence& seq) {
    return log_likelihood_iid(kde, std::span<const Point2>(seq.points));
}

// ---------------------------------------------------------------------------
// Sheather-Jones bandwidth (solve-the-equation plug-in)
// ---------------------------------------------------------------------------

namespace detail {

// phi''''(u) and phi''''''(u) scaled density derivatives used by the plug-in
// functionals, phi the standard normal density.
inline double phi4(double u) {
    const double u2 = u * u;
    return (u2 * u2 - 6.0 * u2 + 3.0) * std::exp(-0.5 * u2) / std::sqrt(2.0 * std::numbers::pi);
}

inline double phi6(double u) {
    const double u2 = u * u;
    return (u2 * u2 * u2 - 15.0 * u2 * u2 + 45.0 * u2 - 15.0) * std::exp(-0.5 * u2) /
           std::sqrt(2.0 * std::numbers::pi);
}

// Estimate of the integrated squared second derivative R(f'') at pilot a.
inline double sj_sd(const std::vector<double>& x, double a) {
    const std::size_t n = x.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) sum += phi4((x[i] - x[j]) / a);
    }
    sum = 2.0 * sum + static_cast<double>(n) * phi4(0.0);
    return sum / (static_cast<double>(n) * static_cast<double>(n - 1) * std::pow(a, 5.0));
}

inline double sj_td(const std::vector<double>& x, double b) {
    const std::size_t n = x.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) sum += phi6((x[i] - x[j]) / b);
    }
    sum = 2.0 * sum + static_cast<double>(n) * phi6(0.0);
    return -sum / (static_cast<double>(n) * static_cast<double>(n - 1) * std::pow(b, 7.0));
}

} // namespace detail

// Normal-reference (Silverman 1.06) 1D bandwidth, used as a sanity yardstick
// and as the starting bracket for the SJ solver.
inline double normal_reference_bandwidth(const std::vector<double>& values) {
    if (values.size() < 2) throw DegenerateDensityError("need at least 2 values");
    const double sd = detail::sample_sd(std::span<const double>(values));
    if (!(sd > 0.0)) throw DegenerateDensityError("zero variance");
    return 1.06 * sd * std::pow(static_cast<double>(values.size()), -0.2);
}

// Sheather-Jones bandwidth: two Gaussian-reference pilot stages feeding the
// solve-the-equation form, root bracketed around the normal-reference value
// and bisected to 1e-7 relative tolerance.
inline double sheather_jones_bandwidth(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 5) {
        throw DegenerateDensityError("Sheather-Jones needs at least 5 values, got " +
                                     std::to_string(n));
    }
    const double sd = detail::sample_sd(std::span<const double>(values));
    if (!(sd > 0.0)) throw DegenerateDensityError("zero variance");

    // Robust scale min(sd, IQR/1.349) with the matching pilot constants
    // (1.24 = 0.920 * 1.349, 1.23 = 0.912 * 1.349 in IQR units).
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&](double p) {
        const double pos = p * static_cast<double>(n - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        return lo + 1 < n ? sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]) : sorted[lo];
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    const double scale = iqr > 0.0 ? std::min(sd, iqr / 1.349) : sd;

    const double nn = static_cast<double>(n);
    const double a = 1.24 * scale * std::pow(nn, -1.0 / 7.0);
    const double b = 1.23 * scale * std::pow(nn, -1.0 / 9.0);
    const double sd_a = detail::sj_sd(values, a);
    const double td_b = detail::sj_td(values, b);
    if (!(sd_a > 0.0) || !(td_b > 0.0)) {
        throw DegenerateDensityError("Sheather-Jones pilot functionals non-positive; "
                                     "fall back to the normal-reference bandwidth");
    }
    const double rk = 1.0 / (2.0 * std::sqrt(std::numbers::pi));  // R(K) for the Gaussian kernel
    const auto objective = [&](double h) {
        const double alpha2 = 1.357 * std::pow(sd_a / td_b, 1.0 / 7.0) * std::pow(h, 5.0 / 7.0);
        const double s = detail::sj_sd(values, alpha2);
        return std::pow(rk / (nn * s), 0.2) - h;
    };

    const double h0 = normal_reference_bandwidth(values);
    double lo = h0 / 4.0, hi = h0 * 4.0;
    // Widen until the root is bracketed (objective is decreasing in h).
    int widen = 0;
    while (objective(lo) < 0.0 && widen++ < 10) lo /= 4.0;
    while (objective(hi) > 0.0 && widen++ < 20) hi *= 4.0;
    if (!(objective(lo) > 0.0) || !(objective(hi) < 0.0)) {
        throw DegenerateDensityError("Sheather-Jones root not bracketed; "
                                     "fall back to the normal-reference bandwidth");
    }
    while ((hi - lo) > 1e-7 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (objective(mid) > 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline Kde1D fit_kde1d_sj(const std::vector<double>& values) {
    return Kde1D{values, sheather_jones_bandwidth(values)};
}

} // namespace fixmark
