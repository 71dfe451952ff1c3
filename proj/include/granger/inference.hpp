#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "granger/common.hpp"

namespace granger {

namespace detail {

/// Regularized lower incomplete gamma P(a, x): series expansion for
/// x < a + 1, Lentz continued fraction for the complement otherwise.
/// Term tolerance 1e-14.
inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw ArgumentError("gamma_p: requires x >= 0, a > 0");
    if (x == 0.0) return 0.0;
    const double log_prefix = a * std::log(x) - x - std::lgamma(a);
    if (x < a + 1.0) {
        // P(a,x) = x^a e^-x / Gamma(a) * sum_k x^k / (a(a+1)...(a+k))
        double term = 1.0 / a;
        double sum = term;
        for (int k = 1; k < 10000; ++k) {
            term *= x / (a + k);
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-14) break;
        }
        return std::exp(log_prefix) * sum;
    }
    // Q(a,x) continued fraction (Lentz): x^a e^-x / Gamma(a) * 1/(x+1-a- 1(1-a)/(x+3-a- ...))
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double frac = d;
    for (int k = 1; k < 10000; ++k) {
        const double an = -k * (k - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        frac *= delta;
        if (std::abs(delta - 1.0) < 1e-14) break;
    }
    return 1.0 - std::exp(log_prefix) * frac;
}

}  // namespace detail

/// CDF of the chi-squared distribution with d degrees of freedom.
inline double chi2_cdf(double x, int d) {
    if (x < 0.0) throw ArgumentError("chi2_cdf: x must be >= 0");
    if (d < 1) throw ArgumentError("chi2_cdf: d must be >= 1");
    return detail::gamma_p(0.5 * d, 0.5 * x);
}

inline double chi2_pdf(double x, int d) {
    if (x < 0.0) throw ArgumentError("chi2_pdf: x must be >= 0");
    if (d < 1) throw ArgumentError("chi2_pdf: d must be >= 1");
    const double a = 0.5 * d;
    if (x == 0.0) return d == 2 ? 0.5 : (d == 1 ? std::numeric_limits<double>::infinity() : 0.0);
    return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::log(2.0) - std::lgamma(a));
}

/// Inverse chi-squared CDF: Wilson-Hilferty start, Newton refinement with
/// bisection safeguard; |chi2_cdf(result, d) - prob| < 1e-10.
inline double chi2_quantile(double prob, int d) {
    if (prob < 0.0 || prob >= 1.0) throw ArgumentError("chi2_quantile: prob must be in [0, 1)");
    if (d < 1) throw ArgumentError("chi2_quantile: d must be >= 1");
    if (prob == 0.0) return 0.0;

    // Wilson-Hilferty cube approximation for the starting point
    const double z = [&] {
        // inverse normal CDF via Acklam-style rational start + one Newton step
        // (only needs to be a rough bracket seed)
        double lo = -40.0, hi = 40.0, mid = 0.0;
        for (int it = 0; it < 200; ++it) {
            mid = 0.5 * (lo + hi);
            const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
            (cdf < prob ? lo : hi) = mid;
        }
        return mid;
    }();
    const double t = 1.0 - 2.0 / (9.0 * d) + z * std::sqrt(2.0 / (9.0 * d));
    double x = std::max(1e-300, d * t * t * t);

    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
        const double f = chi2_cdf(x, d) - prob;
        if (std::abs(f) < 1e-10 && it > 0) return x;
        (f < 0.0 ? lo : hi) = x;
        const double deriv = chi2_pdf(x, d);
        double next = deriv > 0.0 ? x - f / deriv : x;
        if (!(next > lo && (next < hi || !std::isfinite(hi))))
            next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * (lo + 1.0);
        x = next;
    }
    return x;
}

/// CDF of the noncentral chi-squared distribution: Poisson mixture of central
/// chi-squared CDFs, log-space weights, truncated at relative tail 1e-12.
inline double noncentral_chi2_cdf(double x, int d, double lambda) {
    if (x < 0.0) throw ArgumentError("noncentral_chi2_cdf: x must be >= 0");
    if (lambda < 0.0) throw ArgumentError("noncentral_chi2_cdf: lambda must be >= 0");
    if (lambda == 0.0) return chi2_cdf(x, d);
    const double half = 0.5 * lambda;
    double sum = 0.0, weight_sum = 0.0;
    for (int j = 0;; ++j) {
        const double logw = -half + j * std::log(half) - std::lgamma(j + 1.0);
        if (logw > -745.0) {
            const double w = std::exp(logw);
            sum += w * detail::gamma_p(0.5 * d + j, 0.5 * x);
            weight_sum += w;
            if (weight_sum > 1.0 - 1e-12) break;
        } else if (j > half) {
            break;  // past the Poisson mode and underflowing: tail negligible
        }
        if (j > 100000) break;
    }
    return std::min(1.0, sum);
}

/// p-value of a scaled GC estimator: p = 1 - F_chi2(N Fhat; d) under the
/// null; with noncentrality lambda > 0 (power analysis) the noncentral CDF is
/// used with the noncentrality scaled as N lambda.
inline double gc_pvalue(double f_hat, int effective_samples, int dof, double lambda = 0.0) {
    if (f_hat < 0.0) throw ArgumentError("gc_pvalue: statistic must be >= 0");
    if (effective_samples < 1) throw ArgumentError("gc_pvalue: N must be >= 1");
    const double scaled = effective_samples * f_hat;
    if (lambda == 0.0) return 1.0 - chi2_cdf(scaled, dof);
    return 1.0 - noncentral_chi2_cdf(scaled, dof, effective_samples * lambda);
}

struct SignificanceSpec {
    enum class Correction { none, bonferroni };

    double alpha = 0.05;
    Correction correction = Correction::bonferroni;
    int hypotheses = 1;  ///< m, used under the Bonferroni correction

    double effective_alpha() const {
        if (alpha <= 0.0 || alpha >= 1.0)
            throw ArgumentError("SignificanceSpec: alpha must be in (0, 1)");
        if (correction == Correction::none) return alpha;
        if (hypotheses < 1) throw ArgumentError("SignificanceSpec: m must be >= 1");
        const double eff = alpha / hypotheses;
        if (eff <= 0.0)
            throw ArgumentError("SignificanceSpec: alpha/m underflows");
        return eff;
    }
};

/// Critical GC level (statistic units): chi2_quantile(1 - alpha_eff, d) / N.
inline double critical_level(const SignificanceSpec& spec, int effective_samples, int dof) {
    if (effective_samples < 1) throw ArgumentError("critical_level: N must be >= 1");
    return chi2_quantile(1.0 - spec.effective_alpha(), dof) / effective_samples;
}

}  // namespace granger
