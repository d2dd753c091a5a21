#pragma once
// Special functions backing the statistical tests: regularized incomplete
// gamma and beta (continued fractions, relative tolerance 1e-10), the
// distributions built on them (Student-t, chi-squared, normal), and the
// asymptotic Kolmogorov survival function.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace fixmark {

namespace detail {

inline constexpr double kSpecialTol = 1e-10;
inline constexpr int kSpecialMaxIter = 500;

// Lower incomplete gamma P(a,x) by series expansion; valid for x < a+1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < kSpecialMaxIter; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kSpecialTol) {
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw std::runtime_error("gamma_p: series failed to converge");
}

// Upper incomplete gamma Q(a,x) by Lentz continued fraction; valid for x >= a+1.
inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kSpecialMaxIter; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kSpecialTol) {
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw std::runtime_error("gamma_q: continued fraction failed to converge");
}

// Continued fraction for the regularized incomplete beta.
inline double betacf(double a, double b, double x) {
    const double tiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kSpecialMaxIter; ++m) {
        const double dm = static_cast<double>(m);
        double aa = dm * (b - dm) * x / ((qam + 2.0 * dm) * (a + 2.0 * dm));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + dm) * (qab + dm) * x / ((a + 2.0 * dm) * (qap + 2.0 * dm));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kSpecialTol) return h;
    }
    throw std::runtime_error("betacf: continued fraction failed to converge");
}

} // namespace detail

// Regularized lower incomplete gamma P(a,x).
inline double gamma_p(double a, double x) {
    if (a <= 0.0) throw std::invalid_argument("gamma_p: a must be positive");
    if (x < 0.0) throw std::invalid_argument("gamma_p: x must be non-negative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_cf(a, x);
}

inline double gamma_q(double a, double x) { return 1.0 - gamma_p(a, x); }

// Regularized incomplete beta I_x(a,b).
inline double beta_inc(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("beta_inc: a,b must be positive");
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("beta_inc: x must be in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b)
                          + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    // Use the symmetry transform so the continued fraction converges fast.
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::betacf(a, b, x) / a;
    }
    return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Inverse standard normal CDF by bisection; monotone and safe for p in (0,1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (normal_cdf(mid) < p) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Student-t CDF with nu degrees of freedom.
inline double student_t_cdf(double t, double nu) {
    if (nu <= 0.0) throw std::invalid_argument("student_t_cdf: nu must be positive");
    if (t == 0.0) return 0.5;
    const double x = nu / (nu + t * t);
    const double tail = 0.5 * beta_inc(0.5 * nu, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

// Two-sided p-value for a t statistic.
inline double student_t_two_sided_p(double t, double nu) {
    const double p = 2.0 * (1.0 - student_t_cdf(std::fabs(t), nu));
    return std::clamp(p, 0.0, 1.0);
}

// Upper quantile t such that P(T <= t) = p, by bisection on the CDF.
inline double student_t_quantile(double p, double nu) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("student_t_quantile: p must be in (0,1)");
    if (p == 0.5) return 0.0;
    double lo = -1e8, hi = 1e8;
    for (int i = 0; i < 300; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, nu) < p) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline double chi_squared_cdf(double x, double df) {
    if (df <= 0.0) throw std::invalid_argument("chi_squared_cdf: df must be positive");
    if (x <= 0.0) return 0.0;
    return gamma_p(0.5 * df, 0.5 * x);
}

// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2),
// truncated at 100 terms.
inline double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-300) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

// log( Gamma(sum(alpha)) / Gamma(sum(alpha)+sum(u)) * prod_j Gamma(alpha_j+u_j)/Gamma(alpha_j) ):
// the Dirichlet-multinomial evidence of count vector u under Dirichlet(alpha).
template <typename AlphaVec, typename CountVec>
double dirichlet_multinomial_log_evidence(const AlphaVec& alpha, const CountVec& counts) {
    double alpha_sum = 0.0;
    double count_sum = 0.0;
    double log_ev = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        const double a = alpha[j];
        const double u = static_cast<double>(counts[j]);
        alpha_sum += a;
        count_sum += u;
        if (u > 0.0) log_ev += std::lgamma(a + u) - std::lgamma(a);
    }
    log_ev += std::lgamma(alpha_sum) - std::lgamma(alpha_sum + count_sum);
    return log_ev;
}

} // namespace fixmark
