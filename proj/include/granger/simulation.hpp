#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "granger/common.hpp"
#include "granger/rng.hpp"
#include "granger/var_model.hpp"

namespace granger {

struct TimeSeriesMeta {
    std::optional<std::uint64_t> seed;
    int burnin = 0;
    std::string source;  ///< free-form provenance (e.g. model hash or file name)
};

/// n-variable, T-sample observation record. Rows are time steps, columns are
/// variables. Immutable after construction; all entries finite.
class TimeSeries {
  public:
    explicit TimeSeries(Mat data, TimeSeriesMeta meta = {})
        : data_(std::move(data)), meta_(std::move(meta)) {
        if (data_.rows() < 1 || data_.cols() < 1)
            throw DimensionError("TimeSeries: need T >= 1 and n >= 1");
        if (!data_.allFinite()) throw ArgumentError("TimeSeries: non-finite entries");
    }

    int T() const { return static_cast<int>(data_.rows()); }
    int n() const { return static_cast<int>(data_.cols()); }
    const Mat& data() const { return data_; }
    const TimeSeriesMeta& meta() const { return meta_; }

  private:
    Mat data_;
    TimeSeriesMeta meta_;
};

/// Burn-in long enough that the zero-state transient decays below 1e-9
/// relative amplitude: ceil(log(1e-9)/log(rho)), clamped to [100, 1e5].
inline int default_burnin(const VarModel& model) {
    const double rho = ensure_stable(model, "default_burnin");
    if (rho <= 0.0) return 100;
    const double steps = std::ceil(std::log(1e-9) / std::log(rho));
    return static_cast<int>(std::min(100000.0, std::max(100.0, steps)));
}

/// Simulates T post-burn-in samples of the model with Gaussian innovations
/// e_t = L w_t, L the lower Cholesky factor of Sigma and w_t standard normal
/// (xoshiro256++ / Marsaglia polar; see rng.hpp). Deterministic: identical
/// (model, T, seed, burnin) give bit-identical output. Starts from a zero
/// state.
inline TimeSeries simulate(const VarModel& model, int T, std::uint64_t seed, int burnin) {
    if (T < 1) throw ArgumentError("simulate: T must be >= 1");
    if (burnin < 0) throw ArgumentError("simulate: burn-in must be >= 0");
    ensure_stable(model, "simulate");
    const int n = model.n(), p = model.p();
    const Mat chol_lower = model.sigma_cholesky();
    GaussianSampler normal(seed);

    Mat path = Mat::Zero(p + burnin + T, n);
    Vec noise(n);
    for (int t = p; t < path.rows(); ++t) {
        for (int i = 0; i < n; ++i) noise(i) = normal();
        Vec next = chol_lower * noise;
        for (int k = 1; k <= p; ++k) next += model.coeff(k) * path.row(t - k).transpose();
        path.row(t) = next.transpose();
    }
    TimeSeriesMeta meta;
    meta.seed = seed;
    meta.burnin = burnin;
    return TimeSeries(path.bottomRows(T), std::move(meta));
}

/// simulate() with the default burn-in.
inline TimeSeries simulate(const VarModel& model, int T, std::uint64_t seed) {
    return simulate(model, T, seed, default_burnin(model));
}

}  // namespace granger
