#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "granger/common.hpp"
#include "granger/estimation.hpp"
#include "granger/inference.hpp"
#include "granger/var_model.hpp"

namespace granger {

/// Assignment of the variables to target (x), source (y) and conditioning (z)
/// blocks. x, y, z are disjoint and together cover all variables.
struct Partition {
    std::vector<int> x;
    std::vector<int> y;
    std::vector<int> z;

    /// Pairwise conditional partition: everything outside x and y goes to z.
    static Partition conditional(int n, std::vector<int> x, std::vector<int> y) {
        Partition part{std::move(x), std::move(y), {}};
        for (int v = 0; v < n; ++v) {
            const bool in_x = std::find(part.x.begin(), part.x.end(), v) != part.x.end();
            const bool in_y = std::find(part.y.begin(), part.y.end(), v) != part.y.end();
            if (!in_x && !in_y) part.z.push_back(v);
        }
        part.validate(n);
        return part;
    }

    void validate(int n) const {
        if (x.empty() || y.empty()) throw ArgumentError("Partition: x and y must be non-empty");
        std::vector<int> seen(static_cast<std::size_t>(n), 0);
        for (const auto* block : {&x, &y, &z})
            for (int v : *block) {
                if (v < 0 || v >= n) throw ArgumentError("Partition: index out of range");
                if (seen[static_cast<std::size_t>(v)]++)
                    throw ArgumentError("Partition: blocks must be disjoint");
            }
        for (int v = 0; v < n; ++v)
            if (!seen[static_cast<std::size_t>(v)])
                throw ArgumentError("Partition: blocks must cover all variables");
    }
};

enum class GcVariant { one_step, multi_step, full_future, single_lag };

inline const char* to_string(GcVariant v) {
    switch (v) {
        case GcVariant::one_step: return "onestep";
        case GcVariant::multi_step: return "multistep";
        case GcVariant::full_future: return "fullfuture";
        case GcVariant::single_lag: return "singlelag";
    }
    return "?";
}

/// A Granger-Geweke statistic (nats) with its sampling metadata. Analytic
/// values carry no dof / sample count / p-value.
struct GcResult {
    double value = 0.0;
    GcVariant variant = GcVariant::one_step;
    int horizon = 0;  ///< h for multi-step / full-future, tau for single-lag, 0 otherwise
    std::optional<int> dof;
    std::optional<int> effective_samples;
    std::optional<double> p_value;
};

namespace detail {

/// Log-det ratio clamping: values in [-1e-10, 0) report 0; anything more
/// negative signals a broken reduction and raises ConsistencyError.
inline double clamp_gc(double value, const char* who) {
    if (value >= 0.0) return value;
    if (value >= -1e-10) return 0.0;
    throw ConsistencyError(std::string(who) + ": negative statistic " + std::to_string(value) +
                           " beyond tolerance; the reduction is inconsistent");
}

inline double logdet_block(const Mat& m, const std::vector<int>& idx, const char* who) {
    const Mat sub = m(idx, idx);
    const double ld = logdet_spd(sub);
    if (!std::isfinite(ld))
        throw SingularityError(std::string(who) + ": residual covariance block is singular");
    return ld;
}

/// Positions of the x block inside the retained ordering of a reduction.
inline std::vector<int> positions_in(const std::vector<int>& retained,
                                     const std::vector<int>& x) {
    std::vector<int> pos;
    pos.reserve(x.size());
    for (int v : x) {
        const auto it = std::find(retained.begin(), retained.end(), v);
        if (it == retained.end())
            throw ArgumentError("partition x block overlaps the omitted variables");
        pos.push_back(static_cast<int>(it - retained.begin()));
    }
    return pos;
}

}  // namespace detail

/// One-step Granger-Geweke causality from model parameters:
/// F = log det(Sigma^[y]_xx) - log det(Sigma_xx) with Sigma^[y] from the
/// Yule-Walker reduction at q autocovariance lags.
inline GcResult gc_onestep_analytic(const VarModel& model, const Partition& part, int q) {
    part.validate(model.n());
    const auto red = reduced_model_yw(model, part.y, q);
    const auto x_red = detail::positions_in(red.retained, part.x);
    const double value =
        detail::logdet_block(red.model.sigma(), x_red, "gc_onestep_analytic") -
        detail::logdet_block(model.sigma(), part.x, "gc_onestep_analytic");
    return GcResult{detail::clamp_gc(value, "gc_onestep_analytic"), GcVariant::one_step, 0,
                    std::nullopt, std::nullopt, std::nullopt};
}

/// h-step prediction-error covariance Sigma(h) = sum_{k<h} B_k Sigma B_k'.
inline Mat multistep_error_cov(const MaCoefficients& mc, const Mat& sigma, int h) {
    if (h < 1) throw ArgumentError("multistep_error_cov: h must be >= 1");
    if (mc.order() < h - 1) throw ArgumentError("multistep_error_cov: insufficient MA depth");
    Mat out = Mat::Zero(sigma.rows(), sigma.cols());
    for (int k = 0; k < h; ++k) out += mc.at(k) * sigma * mc.at(k).transpose();
    return out;
}

/// Multi-step GC over a set of horizons, computing the Yule-Walker reduction
/// and the MA coefficients once. Horizon 1 reproduces the one-step statistic
/// bit for bit (same reduction, same log-det path).
inline std::vector<GcResult> gc_multistep_trace(const VarModel& model, const Partition& part,
                                                const std::vector<int>& horizons, int q) {
    part.validate(model.n());
    if (horizons.empty()) throw ArgumentError("gc_multistep_trace: no horizons given");
    const int hmax = *std::max_element(horizons.begin(), horizons.end());
    if (*std::min_element(horizons.begin(), horizons.end()) < 1)
        throw ArgumentError("gc_multistep_trace: horizons must be >= 1");
    const auto red = reduced_model_yw(model, part.y, q);
    const auto x_red = detail::positions_in(red.retained, part.x);
    const auto ma_full = ma_coefficients(model, hmax - 1);
    const auto ma_red = ma_coefficients(red.model, hmax - 1);
    std::vector<GcResult> out;
    out.reserve(horizons.size());
    for (int h : horizons) {
        const Mat cov_full = multistep_error_cov(ma_full, model.sigma(), h);
        const Mat cov_red = multistep_error_cov(ma_red, red.model.sigma(), h);
        const double value = detail::logdet_block(cov_red, x_red, "gc_multistep_analytic") -
                             detail::logdet_block(cov_full, part.x, "gc_multistep_analytic");
        out.push_back(GcResult{detail::clamp_gc(value, "gc_multistep_analytic"),
                               GcVariant::multi_step, h, std::nullopt, std::nullopt,
                               std::nullopt});
    }
    return out;
}

inline GcResult gc_multistep_analytic(const VarModel& model, const Partition& part, int h,
                                      int q) {
    return gc_multistep_trace(model, part, {h}, q).front();
}

/// Residual covariance of the joint prediction of the x components over
/// horizons 1..h: the (h nx) x (h nx) matrix B{h}_x Sigma^(x)h B{h}_x' with
/// B{h}_x the block-lower-triangular Toeplitz matrix of the x rows of the MA
/// coefficients.
inline Mat build_fullfuture_cov(const MaCoefficients& mc, const Mat& sigma, int h,
                                const std::vector<int>& x) {
    if (h < 1) throw ArgumentError("build_fullfuture_cov: h must be >= 1");
    if (mc.order() < h - 1) throw ArgumentError("build_fullfuture_cov: insufficient MA depth");
    const int nx = static_cast<int>(x.size());
    std::vector<Mat> bx(static_cast<std::size_t>(h));       // x rows of B_k
    std::vector<Mat> bx_sig(static_cast<std::size_t>(h));   // B_{k,x.} Sigma
    for (int k = 0; k < h; ++k) {
        bx[static_cast<std::size_t>(k)] = mc.at(k)(x, Eigen::all);
        bx_sig[static_cast<std::size_t>(k)] = bx[static_cast<std::size_t>(k)] * sigma;
    }
    Mat out(h * nx, h * nx);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c <= r; ++c) {
            Mat block = Mat::Zero(nx, nx);
            for (int j = 0; j <= c; ++j)
                block += bx_sig[static_cast<std::size_t>(r - j)] *
                         bx[static_cast<std::size_t>(c - j)].transpose();
            out.block(r * nx, c * nx, nx, nx) = block;
            if (c != r) out.block(c * nx, r * nx, nx, nx) = block.transpose();
        }
    return out;
}

/// Full-future GC trace F{1}..F{h_stop} with its convergence status.
struct FullFutureTrace {
    std::vector<double> values;
    bool converged = false;
    double limit_estimate = 0.0;

    int horizons() const { return static_cast<int>(values.size()); }
};

/// Full-future GC: F{h} = log det ratio of the stacked prediction-error
/// covariances, iterated until |F{h} - F{h-1}| < tol (converged) or h = hmax.
/// Both determinant sequences come from a single Cholesky factorization of
/// the hmax-sized stacked covariance (leading-block log-dets read off the
/// factor diagonal), which is algebraically identical to factoring each
/// build_fullfuture_cov(h) separately.
inline FullFutureTrace gc_fullfuture(const VarModel& model, const Partition& part, double tol,
                                     int hmax, int q) {
    part.validate(model.n());
    if (tol <= 0.0) throw ArgumentError("gc_fullfuture: tol must be > 0");
    if (hmax < 2) throw ArgumentError("gc_fullfuture: hmax must be >= 2");
    const auto red = reduced_model_yw(model, part.y, q);
    const auto x_red = detail::positions_in(red.retained, part.x);
    const auto ma_full = ma_coefficients(model, hmax - 1);
    const auto ma_red = ma_coefficients(red.model, hmax - 1);
    const Mat cov_full = build_fullfuture_cov(ma_full, model.sigma(), hmax, part.x);
    const Mat cov_red = build_fullfuture_cov(ma_red, red.model.sigma(), hmax, x_red);

    auto leading_logdets = [](const Mat& cov, int nx, int hcount) {
        Eigen::LLT<Mat> llt(cov);
        if (llt.info() != Eigen::Success)
            throw ConditioningError("gc_fullfuture: stacked covariance not positive definite");
        const Vec diag = Mat(llt.matrixL()).diagonal();
        std::vector<double> out(static_cast<std::size_t>(hcount));
        double acc = 0.0;
        for (int h = 1; h <= hcount; ++h) {
            for (int i = (h - 1) * nx; i < h * nx; ++i) acc += 2.0 * std::log(diag(i));
            out[static_cast<std::size_t>(h - 1)] = acc;
        }
        return out;
    };
    const int nx = static_cast<int>(part.x.size());
    const auto ld_full = leading_logdets(cov_full, nx, hmax);
    const auto ld_red = leading_logdets(cov_red, nx, hmax);

    FullFutureTrace trace;
    for (int h = 1; h <= hmax; ++h) {
        const double value = detail::clamp_gc(
            ld_red[static_cast<std::size_t>(h - 1)] - ld_full[static_cast<std::size_t>(h - 1)],
            "gc_fullfuture");
        trace.values.push_back(value);
        if (h >= 2 && std::abs(trace.values[static_cast<std::size_t>(h - 1)] -
                               trace.values[static_cast<std::size_t>(h - 2)]) < tol) {
            trace.converged = true;
            break;
        }
    }
    trace.limit_estimate = trace.values.back();
    return trace;
}

/// Single-lag GC from model parameters: F<tau> = log det ratio with the
/// single lag-tau y regressor deleted from the Yule-Walker system.
inline GcResult gc_singlelag_analytic(const VarModel& model, const Partition& part, int tau,
                                      int q) {
    part.validate(model.n());
    const Mat sigma_red = reduced_sigma_single_lag(model, part.y, tau, q);
    const double value =
        detail::logdet_block(sigma_red, part.x, "gc_singlelag_analytic") -
        detail::logdet_block(model.sigma(), part.x, "gc_singlelag_analytic");
    return GcResult{detail::clamp_gc(value, "gc_singlelag_analytic"), GcVariant::single_lag, tau,
                    std::nullopt, std::nullopt, std::nullopt};
}

namespace detail {

inline GcResult finish_sample_result(double value, GcVariant variant, int horizon, int dof,
                                     int effective_samples) {
    GcResult res;
    res.value = clamp_gc(value, "sample GC");
    res.variant = variant;
    res.horizon = horizon;
    res.dof = dof;
    res.effective_samples = effective_samples;
    res.p_value = gc_pvalue(res.value, effective_samples, dof);
    return res;
}

/// Sample one-step statistic on a prebuilt regression (shared by gc_graph).
inline GcResult onestep_sample_impl(const LaggedRegression& reg, const Partition& part) {
    const auto full = reg.fit(reg.all_cols(), reg.all_targets());
    const auto keep = complement(reg.n(), part.y);
    std::vector<int> cols;
    for (int k = 1; k <= reg.p(); ++k)
        for (int v : keep) cols.push_back(reg.col_index(k, v));
    const auto red = reg.fit(cols, keep);
    const auto x_red = positions_in(keep, part.x);
    const double value = logdet_block(red.sigma_hat, x_red, "gc_onestep_sample") -
                         logdet_block(full.sigma_hat, part.x, "gc_onestep_sample");
    const int dof = reg.p() * static_cast<int>(part.x.size()) * static_cast<int>(part.y.size());
    return finish_sample_result(value, GcVariant::one_step, 0, dof, reg.rows());
}

inline GcResult multistep_sample_impl(const LaggedRegression& reg, const Partition& part,
                                      int h) {
    if (h < 1 || h > reg.p()) throw ArgumentError("gc_multistep_sample: need 1 <= h <= p");
    std::vector<int> cols_full;
    for (int k = h; k <= reg.p(); ++k)
        for (int v = 0; v < reg.n(); ++v) cols_full.push_back(reg.col_index(k, v));
    const auto full = reg.fit(cols_full, reg.all_targets());
    const auto keep = complement(reg.n(), part.y);
    std::vector<int> cols_red;
    for (int k = h; k <= reg.p(); ++k)
        for (int v : keep) cols_red.push_back(reg.col_index(k, v));
    const auto red = reg.fit(cols_red, keep);
    const auto x_red = positions_in(keep, part.x);
    const double value = logdet_block(red.sigma_hat, x_red, "gc_multistep_sample") -
                         logdet_block(full.sigma_hat, part.x, "gc_multistep_sample");
    const int dof = (reg.p() - h + 1) * static_cast<int>(part.x.size()) *
                    static_cast<int>(part.y.size());
    return finish_sample_result(value, GcVariant::multi_step, h, dof, reg.rows());
}

inline GcResult singlelag_sample_impl(const LaggedRegression& reg, const Partition& part,
                                      int tau) {
    if (tau < 1 || tau > reg.p()) throw ArgumentError("gc_singlelag_sample: need 1 <= tau <= p");
    const auto full = reg.fit(reg.all_cols(), reg.all_targets());
    std::vector<int> cols;
    for (int c = 0; c < reg.n() * reg.p(); ++c) {
        const bool dropped = c / reg.n() == tau - 1 &&
                             std::find(part.y.begin(), part.y.end(), c % reg.n()) != part.y.end();
        if (!dropped) cols.push_back(c);
    }
    const auto red = reg.fit(cols, reg.all_targets());
    const double value = logdet_block(red.sigma_hat, part.x, "gc_singlelag_sample") -
                         logdet_block(full.sigma_hat, part.x, "gc_singlelag_sample");
    const int dof = static_cast<int>(part.x.size()) * static_cast<int>(part.y.size());
    return finish_sample_result(value, GcVariant::single_lag, tau, dof, reg.rows());
}

}  // namespace detail

/// Sample one-step GC from independently fitted full and reduced OLS models;
/// scaled by N = T - p it is asymptotically chi-squared(p nx ny) under the
/// null of no causality.
inline GcResult gc_onestep_sample(const TimeSeries& ts, int p, const Partition& part) {
    part.validate(ts.n());
    const LaggedRegression reg(ts, p);
    return detail::onestep_sample_impl(reg, part);
}

/// Sample h-step GC: OLS of u_t on lags h..p for full and reduced predictor
/// sets; dof = (p-h+1) nx ny.
inline GcResult gc_multistep_sample(const TimeSeries& ts, int p, const Partition& part, int h) {
    part.validate(ts.n());
    const LaggedRegression reg(ts, p);
    return detail::multistep_sample_impl(reg, part, h);
}

/// Sample single-lag GC: full regression vs the regression with the lag-tau
/// y block deleted; dof = nx ny.
inline GcResult gc_singlelag_sample(const TimeSeries& ts, int p, const Partition& part,
                                    int tau) {
    part.validate(ts.n());
    const LaggedRegression reg(ts, p);
    return detail::singlelag_sample_impl(reg, part, tau);
}

}  // namespace granger
