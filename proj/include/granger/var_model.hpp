#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "granger/common.hpp"

namespace granger {

/// Stationary vector autoregression u_t = sum_k A_k u_{t-k} + e_t with
/// innovations covariance Sigma. Value type; immutable after construction.
///
/// Construction validates dimensions and that Sigma is symmetric (within
/// 1e-12 relative) and positive semidefinite. Strict positive definiteness
/// (required for simulation and the analytic reductions) is checked where
/// consumed, so that fitted models with degenerate residual covariances can
/// still be represented.
class VarModel {
  public:
    VarModel(std::vector<Mat> coeffs, Mat sigma)
        : coeffs_(std::move(coeffs)), sigma_(std::move(sigma)) {
        if (coeffs_.empty()) throw DimensionError("VarModel: needs at least one lag matrix");
        const auto n = sigma_.rows();
        if (n < 1) throw DimensionError("VarModel: empty covariance");
        if (sigma_.cols() != n) throw DimensionError("VarModel: Sigma not square");
        for (std::size_t k = 0; k < coeffs_.size(); ++k) {
            if (coeffs_[k].rows() != n || coeffs_[k].cols() != n)
                throw DimensionError("VarModel: A_" + std::to_string(k + 1) +
                                     " is not " + std::to_string(n) + "x" + std::to_string(n));
        }
        const double scale = std::max(1.0, detail::max_abs(sigma_));
        if (detail::max_abs(sigma_ - sigma_.transpose()) > 1e-12 * scale)
            throw CovarianceError("VarModel: Sigma not symmetric within 1e-12");
        sigma_ = 0.5 * (sigma_ + sigma_.transpose());
        Eigen::LDLT<Mat> ldlt(sigma_);
        if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < -1e-10 * scale)
            throw CovarianceError("VarModel: Sigma not positive semidefinite");
    }

    int n() const { return static_cast<int>(sigma_.rows()); }
    int p() const { return static_cast<int>(coeffs_.size()); }

    /// A_lag, 1-based lag in [1, p].
    const Mat& coeff(int lag) const {
        if (lag < 1 || lag > p()) throw ArgumentError("VarModel::coeff: lag out of range");
        return coeffs_[static_cast<std::size_t>(lag - 1)];
    }
    const std::vector<Mat>& coeffs() const { return coeffs_; }
    const Mat& sigma() const { return sigma_; }

    /// Lower Cholesky factor of Sigma; throws CovarianceError if singular.
    Mat sigma_cholesky() const {
        Eigen::LLT<Mat> llt(sigma_);
        if (llt.info() != Eigen::Success)
            throw CovarianceError("VarModel: Sigma is not positive definite");
        return llt.matrixL();
    }

  private:
    std::vector<Mat> coeffs_;
    Mat sigma_;
};

/// (n p) x (n p) companion matrix of the lag polynomial.
inline Mat companion_matrix(const VarModel& m) {
    const int n = m.n(), p = m.p();
    Mat comp = Mat::Zero(n * p, n * p);
    for (int k = 0; k < p; ++k) comp.block(0, k * n, n, n) = m.coeff(k + 1);
    for (int k = 1; k < p; ++k)
        comp.block(k * n, (k - 1) * n, n, n) = Mat::Identity(n, n);
    return comp;
}

/// Spectral radius of the companion matrix; < 1 means the model is stable.
inline double spectral_radius(const VarModel& m) {
    const Mat comp = companion_matrix(m);
    return comp.eigenvalues().cwiseAbs().maxCoeff();
}

/// Throws StabilityError for spectral radius >= 1; warns for radius within
/// 1e-6 of the unit circle (near-unit-root models make autocovariance
/// truncation depths explode).
inline double ensure_stable(const VarModel& m, const char* who) {
    const double rho = spectral_radius(m);
    if (rho >= 1.0)
        throw StabilityError(std::string(who) + ": model is not stable (spectral radius " +
                             std::to_string(rho) + " >= 1)");
    if (rho >= 1.0 - 1e-6)
        detail::warn(std::string(who) + ": spectral radius " + std::to_string(rho) +
                     " is within 1e-6 of the unit circle");
    return rho;
}

/// Moving-average coefficients B_0..B_K with B_0 = I.
struct MaCoefficients {
    std::vector<Mat> mats;

    int order() const { return static_cast<int>(mats.size()) - 1; }
    const Mat& at(int k) const {
        if (k < 0 || k > order()) throw ArgumentError("MaCoefficients::at: lag out of range");
        return mats[static_cast<std::size_t>(k)];
    }
};

/// MA coefficients of a stable model by the recursion
/// B_k = A_k + sum_{l=1}^{k-1} B_l A_{k-l}, B_0 = I (A_k = 0 beyond lag p).
inline MaCoefficients ma_coefficients(const VarModel& m, int K) {
    if (K < 0) throw ArgumentError("ma_coefficients: K must be >= 0");
    ensure_stable(m, "ma_coefficients");
    const int n = m.n(), p = m.p();
    MaCoefficients out;
    out.mats.reserve(static_cast<std::size_t>(K) + 1);
    out.mats.push_back(Mat::Identity(n, n));
    for (int k = 1; k <= K; ++k) {
        Mat b = k <= p ? m.coeff(k) : Mat::Zero(n, n);
        for (int l = std::max(1, k - p); l < k; ++l) b += out.mats[l] * m.coeff(k - l);
        out.mats.push_back(std::move(b));
    }
    return out;
}

/// h-step-ahead AR coefficients A(h)_k; lags below h are structurally zero.
struct MultiStepAr {
    int horizon = 1;
    std::vector<Mat> coeffs;  ///< indexed by lag 0..max_lag, zero below `horizon`

    int max_lag() const { return static_cast<int>(coeffs.size()) - 1; }
    const Mat& at_lag(int k) const {
        if (k < 0 || k > max_lag()) throw ArgumentError("MultiStepAr::at_lag: lag out of range");
        return coeffs[static_cast<std::size_t>(k)];
    }
};

/// h-step AR coefficients via the recursion
/// A(h+1)_{h+k} = A(h)_{h+k} + A(h)_h A_k, starting from A(1)_k = A_k.
/// Returns coefficients up to lag K (K >= h); the full support of A(h) is
/// h..h+p-1, so the recursion is run at that depth and truncated on return.
inline MultiStepAr multistep_ar(const VarModel& m, int h, int K) {
    if (h < 1) throw ArgumentError("multistep_ar: h must be >= 1");
    if (K < h) throw ArgumentError("multistep_ar: K must be >= h");
    ensure_stable(m, "multistep_ar");
    const int n = m.n(), p = m.p();
    const int depth = std::max(K, h + p - 1);
    std::vector<Mat> cur(static_cast<std::size_t>(depth) + 1, Mat::Zero(n, n));
    for (int k = 1; k <= std::min(p, depth); ++k) cur[static_cast<std::size_t>(k)] = m.coeff(k);
    for (int step = 1; step < h; ++step) {
        // step -> step+1
        std::vector<Mat> next(static_cast<std::size_t>(depth) + 1, Mat::Zero(n, n));
        const Mat lead = cur[static_cast<std::size_t>(step)];
        for (int k = 1; step + k <= depth; ++k) {
            next[static_cast<std::size_t>(step + k)] =
                cur[static_cast<std::size_t>(step + k)] +
                (k <= p ? Mat(lead * m.coeff(k)) : Mat::Zero(n, n));
        }
        cur = std::move(next);
    }
    MultiStepAr out;
    out.horizon = h;
    out.coeffs.assign(cur.begin(), cur.begin() + K + 1);
    return out;
}

/// One-sided autocovariance sequence Gamma_0..Gamma_q with
/// Gamma_k = E[u_t u_{t-k}']; Gamma_{-k} = Gamma_k'.
class AutocovSequence {
  public:
    explicit AutocovSequence(std::vector<Mat> gammas) : gammas_(std::move(gammas)) {
        if (gammas_.empty()) throw DimensionError("AutocovSequence: empty");
    }

    int max_lag() const { return static_cast<int>(gammas_.size()) - 1; }
    int n() const { return static_cast<int>(gammas_.front().rows()); }

    const Mat& at(int k) const {
        if (k < 0 || k > max_lag()) throw ArgumentError("AutocovSequence::at: lag out of range");
        return gammas_[static_cast<std::size_t>(k)];
    }

    /// Gamma_k for signed k (applies the transpose for negative lags).
    Mat at_signed(int k) const { return k >= 0 ? at(k) : Mat(at(-k).transpose()); }

    const std::vector<Mat>& gammas() const { return gammas_; }

  private:
    std::vector<Mat> gammas_;
};

namespace detail {

/// Stationary covariance of the companion-form state: solves
/// P = C P C' + Q by the doubling iteration P <- P + C P C', C <- C^2.
inline Mat companion_state_covariance(const Mat& comp, const Mat& q_top, int n) {
    Mat pcov = Mat::Zero(comp.rows(), comp.cols());
    pcov.topLeftCorner(n, n) = q_top;
    Mat ck = comp;
    for (int it = 0; it < 200; ++it) {
        const Mat incr = ck * pcov * ck.transpose();
        pcov += incr;
        if (max_abs(incr) <= 1e-14 * std::max(1.0, max_abs(pcov))) return pcov;
        ck = ck * ck;
    }
    throw ConditioningError("autocovariance: Lyapunov doubling did not converge");
}

}  // namespace detail

/// Autocovariances Gamma_0..Gamma_q of the stationary process: Gamma_0..
/// Gamma_{p-1} from the companion-form Lyapunov solution, the rest extended
/// by the Yule-Walker recursion Gamma_k = sum_l A_l Gamma_{k-l}.
inline AutocovSequence autocovariance(const VarModel& m, int q) {
    if (q < 0) throw ArgumentError("autocovariance: q must be >= 0");
    ensure_stable(m, "autocovariance");
    const int n = m.n(), p = m.p();
    const Mat pcov = detail::companion_state_covariance(companion_matrix(m), m.sigma(), n);
    std::vector<Mat> gammas;
    gammas.reserve(static_cast<std::size_t>(q) + 1);
    for (int k = 0; k <= std::min(q, p - 1); ++k)
        gammas.push_back(pcov.block(0, k * n, n, n));
    for (int k = static_cast<int>(gammas.size()); k <= q; ++k) {
        Mat g = Mat::Zero(n, n);
        for (int l = 1; l <= p; ++l) {
            const int j = k - l;
            g += m.coeff(l) * (j >= 0 ? gammas[static_cast<std::size_t>(j)]
                                      : Mat(gammas[static_cast<std::size_t>(-j)].transpose()));
        }
        gammas.push_back(std::move(g));
    }
    return AutocovSequence(std::move(gammas));
}

/// Truncation depth selection when the caller does not supply q: grow until
/// max-norm(Gamma_q) < 1e-12 max-norm(Gamma_0), capped at 4096. The threshold
/// must hold for p consecutive lags before stopping (sparse models can have a
/// near-zero Gamma_k rebound at longer lags; p consecutive negligible lags
/// pin the whole Yule-Walker tail).
inline int default_autocov_lags(const VarModel& m) {
    constexpr int kCap = 4096;
    ensure_stable(m, "default_autocov_lags");
    const int n = m.n(), p = m.p();
    const Mat pcov = detail::companion_state_covariance(companion_matrix(m), m.sigma(), n);
    std::vector<Mat> gammas;
    for (int k = 0; k < p; ++k) gammas.push_back(pcov.block(0, k * n, n, n));
    const double g0 = detail::max_abs(gammas.front());
    auto small_enough = [&](const Mat& g) { return detail::max_abs(g) < 1e-12 * g0; };
    int run = 0;
    for (int k = 1; k < static_cast<int>(gammas.size()); ++k) {
        run = small_enough(gammas[static_cast<std::size_t>(k)]) ? run + 1 : 0;
        if (run >= p) return k;
    }
    for (int k = static_cast<int>(gammas.size()); k <= kCap; ++k) {
        Mat g = Mat::Zero(n, n);
        for (int l = 1; l <= p; ++l) {
            const int j = k - l;
            g += m.coeff(l) * (j >= 0 ? gammas[static_cast<std::size_t>(j)]
                                      : Mat(gammas[static_cast<std::size_t>(-j)].transpose()));
        }
        gammas.push_back(g);
        run = small_enough(g) ? run + 1 : 0;
        if (run >= p) return k;
    }
    detail::warn("default_autocov_lags: truncating at " + std::to_string(kCap) +
                 " lags before the autocovariance tail decayed below 1e-12 of Gamma_0");
    return kCap;
}

}  // namespace granger
