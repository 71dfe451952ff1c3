#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "granger/common.hpp"
#include "granger/simulation.hpp"
#include "granger/var_model.hpp"

namespace granger {

namespace detail {

/// Solve A X = B for symmetric positive-definite A by Cholesky; on failure
/// retry once with a ridge of 1e-10 trace(A)/dim on the diagonal (with a
/// warning), then throw ConditioningError.
inline Mat solve_spd_with_ridge(const Mat& a, const Mat& b, const char* who) {
    Eigen::LLT<Mat> llt(a);
    if (llt.info() == Eigen::Success) return llt.solve(b);
    const double ridge = 1e-10 * a.trace() / static_cast<double>(a.rows());
    warn(std::string(who) + ": Cholesky failed, retrying with ridge " + std::to_string(ridge));
    Mat regularized = a;
    regularized.diagonal().array() += ridge;
    llt.compute(regularized);
    if (llt.info() == Eigen::Success) return llt.solve(b);
    throw ConditioningError(std::string(who) + ": matrix not positive definite even after ridge");
}

/// log det of a symmetric positive-definite matrix via Cholesky;
/// -inf if the matrix is singular / not positive definite.
inline double logdet_spd(const Mat& m) {
    Eigen::LLT<Mat> llt(m);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    return 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
}

inline std::vector<int> complement(int n, const std::vector<int>& omit) {
    std::vector<int> keep;
    keep.reserve(n);
    for (int i = 0; i < n; ++i)
        if (std::find(omit.begin(), omit.end(), i) == omit.end()) keep.push_back(i);
    return keep;
}

}  // namespace detail

/// Centered lagged least-squares machinery shared by every OLS fit: builds
/// the Gram pieces Z'Z, Z'U, U'U once for the full design (all n variables,
/// lags 1..p, per-variable means subtracted), then any sub-selection of
/// regressor columns and target variables is a cheap SPD solve. Regressor
/// column for (lag k, variable v) is (k-1)*n + v; rows are t = p..T-1, so
/// every fit uses N = T - p observations.
class LaggedRegression {
  public:
    LaggedRegression(const TimeSeries& ts, int p) : n_(ts.n()), p_(p) {
        if (p < 1) throw ArgumentError("LaggedRegression: p must be >= 1");
        if (ts.T() <= p * (ts.n() + 1))
            throw ArgumentError("LaggedRegression: series too short (need T > p(n+1), got T = " +
                                std::to_string(ts.T()) + ", p = " + std::to_string(p) + ")");
        const int T = ts.T();
        n_rows_ = T - p;
        const Mat centered = ts.data().rowwise() - ts.data().colwise().mean();
        Mat design(n_rows_, n_ * p);
        for (int k = 1; k <= p; ++k)
            design.middleCols((k - 1) * n_, n_) = centered.middleRows(p - k, n_rows_);
        const Mat targets = centered.bottomRows(n_rows_);
        gram_ = design.transpose() * design;
        cross_ = design.transpose() * targets;
        target_gram_ = targets.transpose() * targets;
    }

    int n() const { return n_; }
    int p() const { return p_; }
    int rows() const { return n_rows_; }

    int col_index(int lag, int var) const { return (lag - 1) * n_ + var; }

    struct Fit {
        Mat coeffs;     ///< selected columns x targets
        Mat sigma_hat;  ///< residual covariance over targets, divided by N
        double log_generalized_variance;
        int effective_samples;
    };

    /// OLS on the selected regressor columns and target variables.
    Fit fit(const std::vector<int>& cols, const std::vector<int>& targets) const {
        const Mat gram_sel = gram_(cols, cols);
        const Mat cross_sel = cross_(cols, targets);
        Eigen::LDLT<Mat> ldlt(gram_sel);
        const double dmax = ldlt.vectorD().maxCoeff();
        if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-13 * dmax)
            throw_rank_deficiency(gram_sel, cols);
        Fit out;
        out.coeffs = ldlt.solve(cross_sel);
        Mat resid_gram = target_gram_(targets, targets) - cross_sel.transpose() * out.coeffs;
        out.sigma_hat = (0.5 / n_rows_) * (resid_gram + resid_gram.transpose());
        out.log_generalized_variance = detail::logdet_spd(out.sigma_hat);
        out.effective_samples = n_rows_;
        return out;
    }

    std::vector<int> all_cols() const {
        std::vector<int> cols(static_cast<std::size_t>(n_) * p_);
        std::iota(cols.begin(), cols.end(), 0);
        return cols;
    }

    std::vector<int> all_targets() const {
        std::vector<int> t(static_cast<std::size_t>(n_));
        std::iota(t.begin(), t.end(), 0);
        return t;
    }

  private:
    [[noreturn]] void throw_rank_deficiency(const Mat& gram_sel,
                                            const std::vector<int>& cols) const {
        Eigen::ColPivHouseholderQR<Mat> qr(gram_sel);
        qr.setThreshold(1e-12);
        std::string offender = "unknown column";
        const auto rank = qr.rank();
        if (rank < gram_sel.cols()) {
            const int local = qr.colsPermutation().indices()(rank);
            const int global = cols[static_cast<std::size_t>(local)];
            offender = "variable " + std::to_string(global % n_ + 1) + " at lag " +
                       std::to_string(global / n_ + 1);
        }
        throw SingularityError("OLS design is rank deficient (first redundant regressor: " +
                               offender + ")");
    }

    int n_;
    int p_;
    int n_rows_;
    Mat gram_;         ///< Z'Z, (np) x (np)
    Mat cross_;        ///< Z'U, (np) x n
    Mat target_gram_;  ///< U'U, n x n
};

/// Result of an autoregressive fit: estimated model, residual covariance
/// (divided by N = T - p), effective sample count and the log generalized
/// variance log det(sigma_hat).
struct FitResult {
    VarModel model;
    Mat sigma_hat;
    int effective_samples;
    double log_generalized_variance;
};

/// Specification of a reduced regression.
struct ReducedSpec {
    enum class Kind { omit_variables, omit_single_lag };

    Kind kind = Kind::omit_variables;
    std::vector<int> omitted;  ///< variable indices dropped entirely (omit_variables)
    std::vector<int> y;        ///< source block (omit_single_lag)
    int tau = 0;               ///< omitted lag (omit_single_lag)

    void validate(int n, int p) const {
        if (kind == Kind::omit_variables) {
            if (omitted.empty() || static_cast<int>(omitted.size()) >= n)
                throw ArgumentError("ReducedSpec: omitted set must be a non-empty proper subset");
            for (int v : omitted)
                if (v < 0 || v >= n) throw ArgumentError("ReducedSpec: omitted index out of range");
        } else {
            if (y.empty()) throw ArgumentError("ReducedSpec: y block must be non-empty");
            for (int v : y)
                if (v < 0 || v >= n) throw ArgumentError("ReducedSpec: y index out of range");
            if (tau < 1 || tau > p) throw ArgumentError("ReducedSpec: tau must be in [1, p]");
        }
    }
};

namespace detail {

inline VarModel model_from_fit(const Mat& coeffs, const Mat& sigma, int n, int p) {
    std::vector<Mat> lag_mats;
    lag_mats.reserve(static_cast<std::size_t>(p));
    for (int k = 0; k < p; ++k) lag_mats.push_back(coeffs.middleRows(k * n, n).transpose());
    return VarModel(std::move(lag_mats), sigma);
}

}  // namespace detail

/// Full VAR(p) fit by ordinary least squares on centered data.
/// sigma_hat = residual cross-product / N with N = T - p.
inline FitResult fit_var_ols(const TimeSeries& ts, int p) {
    const LaggedRegression reg(ts, p);
    const auto fit = reg.fit(reg.all_cols(), reg.all_targets());
    return FitResult{detail::model_from_fit(fit.coeffs, fit.sigma_hat, ts.n(), p), fit.sigma_hat,
                     fit.effective_samples, fit.log_generalized_variance};
}

/// Reduced OLS fit. omit_variables regresses the retained variables on their
/// own joint history (retained variables keep ascending order); omit_single_lag
/// regresses all n variables on the full history minus the y block at lag tau
/// (the dropped coefficients are zero in the returned model).
inline FitResult fit_reduced_ols(const TimeSeries& ts, int p, const ReducedSpec& spec) {
    spec.validate(ts.n(), p);
    const LaggedRegression reg(ts, p);
    const int n = ts.n();
    if (spec.kind == ReducedSpec::Kind::omit_variables) {
        const auto keep = detail::complement(n, spec.omitted);
        std::vector<int> cols;
        cols.reserve(keep.size() * static_cast<std::size_t>(p));
        for (int k = 1; k <= p; ++k)
            for (int v : keep) cols.push_back(reg.col_index(k, v));
        const auto fit = reg.fit(cols, keep);
        return FitResult{
            detail::model_from_fit(fit.coeffs, fit.sigma_hat, static_cast<int>(keep.size()), p),
            fit.sigma_hat, fit.effective_samples, fit.log_generalized_variance};
    }
    std::vector<int> cols;
    cols.reserve(static_cast<std::size_t>(n) * p - spec.y.size());
    for (int k = 1; k <= p; ++k)
        for (int v = 0; v < n; ++v)
            if (k != spec.tau || std::find(spec.y.begin(), spec.y.end(), v) == spec.y.end())
                cols.push_back(reg.col_index(k, v));
    const auto fit = reg.fit(cols, reg.all_targets());
    Mat full_coeffs = Mat::Zero(n * p, n);
    for (std::size_t i = 0; i < cols.size(); ++i) full_coeffs.row(cols[i]) = fit.coeffs.row(i);
    return FitResult{detail::model_from_fit(full_coeffs, fit.sigma_hat, n, p), fit.sigma_hat,
                     fit.effective_samples, fit.log_generalized_variance};
}

enum class OrderCriterion { aic, bic };

/// Model order selection: argmin over p in 1..pmax of
/// log det sigma_hat(p) + penalty * p n^2 / N_p, with penalty 2 (AIC) or
/// log N_p (BIC); each order is fitted on its own full sample (N_p = T - p).
/// Ties break toward smaller p.
inline int select_order(const TimeSeries& ts, int pmax, OrderCriterion criterion) {
    if (pmax < 1) throw ArgumentError("select_order: pmax must be >= 1");
    if (ts.T() <= pmax * (ts.n() + 1))
        throw ArgumentError("select_order: series too short for pmax");
    int best_p = 1;
    double best_value = std::numeric_limits<double>::infinity();
    const double n2 = static_cast<double>(ts.n()) * ts.n();
    for (int p = 1; p <= pmax; ++p) {
        const auto fit = fit_var_ols(ts, p);
        const double N = fit.effective_samples;
        const double penalty = criterion == OrderCriterion::aic ? 2.0 : std::log(N);
        const double value = fit.log_generalized_variance + penalty * p * n2 / N;
        if (value < best_value) {
            best_value = value;
            best_p = p;
        }
    }
    return best_p;
}

/// Analytic reduced model: the retained subprocess fitted at order q through
/// the Yule-Walker normal equations on the model-implied autocovariances.
struct ReducedModel {
    VarModel model;             ///< order-q AR over the retained variables
    std::vector<int> retained;  ///< original indices, ascending
};

namespace detail {

struct YwSystem {
    Mat gam;  ///< [Gamma_1 ... Gamma_q], n x (n q)
    Mat lam;  ///< block-Toeplitz [Gamma_{j-i}], (n q) x (n q)
};

inline YwSystem build_yw_system(const std::vector<Mat>& gammas, int q) {
    const int n = static_cast<int>(gammas.front().rows());
    YwSystem sys;
    sys.gam.resize(n, n * q);
    for (int j = 0; j < q; ++j) sys.gam.middleCols(j * n, n) = gammas[static_cast<std::size_t>(j + 1)];
    sys.lam.resize(n * q, n * q);
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) {
            const int k = j - i;
            sys.lam.block(i * n, j * n, n, n) =
                k >= 0 ? gammas[static_cast<std::size_t>(k)]
                       : Mat(gammas[static_cast<std::size_t>(-k)].transpose());
        }
    return sys;
}

}  // namespace detail

/// Solves the reduced-model Yule-Walker equations for the subprocess with the
/// given variables omitted, from the full model's autocovariances to lag q.
inline ReducedModel reduced_model_yw(const VarModel& model, const std::vector<int>& omit, int q) {
    if (q < 1) throw ArgumentError("reduced_model_yw: q must be >= 1");
    if (omit.empty() || static_cast<int>(omit.size()) >= model.n())
        throw ArgumentError("reduced_model_yw: omitted set must be a non-empty proper subset");
    const auto keep = detail::complement(model.n(), omit);
    const auto acov = autocovariance(model, q);
    const int nr = static_cast<int>(keep.size());
    std::vector<Mat> sub;
    sub.reserve(static_cast<std::size_t>(q) + 1);
    for (int k = 0; k <= q; ++k) sub.push_back(acov.at(k)(keep, keep));
    const auto sys = detail::build_yw_system(sub, q);
    const Mat w = detail::solve_spd_with_ridge(sys.lam, sys.gam.transpose(), "reduced_model_yw");
    Mat sigma = sub.front() - sys.gam * w;
    sigma = 0.5 * (sigma + sigma.transpose());
    std::vector<Mat> lag_mats;
    lag_mats.reserve(static_cast<std::size_t>(q));
    for (int k = 0; k < q; ++k) lag_mats.push_back(w.middleRows(k * nr, nr).transpose());
    return ReducedModel{VarModel(std::move(lag_mats), std::move(sigma)), keep};
}

/// Full-model Yule-Walker residual covariance at truncation q:
/// Sigma = Gamma_0 - Gam Lam^-1 Gam' with nothing deleted. Converges to the
/// model's innovations covariance once the autocovariance tail has decayed;
/// useful as a consistency check on the deletion machinery.
inline Mat yw_full_sigma(const VarModel& model, int q) {
    if (q < 1) throw ArgumentError("yw_full_sigma: q must be >= 1");
    const auto acov = autocovariance(model, q);
    const auto sys = detail::build_yw_system(acov.gammas(), q);
    const Mat w = detail::solve_spd_with_ridge(sys.lam, sys.gam.transpose(), "yw_full_sigma");
    Mat sigma = acov.at(0) - sys.gam * w;
    return 0.5 * (sigma + sigma.transpose());
}

/// Residual covariance of the single-lag reduced model: the full Yule-Walker
/// system Sigma = Gamma_0 - Gam Lam^-1 Gam' with the y columns of the tau-th
/// lag block deleted from the regressor set (all n targets retained).
inline Mat reduced_sigma_single_lag(const VarModel& model, const std::vector<int>& y, int tau,
                                    int q) {
    if (tau < 1 || tau > q) throw ArgumentError("reduced_sigma_single_lag: need 1 <= tau <= q");
    if (y.empty()) throw ArgumentError("reduced_sigma_single_lag: y must be non-empty");
    for (int v : y)
        if (v < 0 || v >= model.n())
            throw ArgumentError("reduced_sigma_single_lag: y index out of range");
    const int n = model.n();
    const auto acov = autocovariance(model, q);
    const auto sys = detail::build_yw_system(acov.gammas(), q);
    std::vector<int> keep;
    keep.reserve(static_cast<std::size_t>(n) * q - y.size());
    for (int c = 0; c < n * q; ++c) {
        const bool dropped = c / n == tau - 1 &&
                             std::find(y.begin(), y.end(), c % n) != y.end();
        if (!dropped) keep.push_back(c);
    }
    const Mat gam_red = sys.gam(Eigen::all, keep);
    const Mat lam_red = sys.lam(keep, keep);
    const Mat w = detail::solve_spd_with_ridge(lam_red, gam_red.transpose(),
                                               "reduced_sigma_single_lag");
    Mat sigma = acov.at(0) - gam_red * w;
    return 0.5 * (sigma + sigma.transpose());
}

}  // namespace granger
