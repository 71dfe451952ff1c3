#pragma once

#include <array>
#include <vector>

#include "granger/var_model.hpp"

namespace granger {

/// Cross-coupling of the five-variable demonstration model:
/// target <- source at the given lag.
struct DemoCoupling {
    int target;  ///< 1-based
    int source;  ///< 1-based
    int lag;
    double value;
};

inline constexpr int kDemoVariables = 5;
inline constexpr int kDemoOrder = 20;
inline constexpr std::array<DemoCoupling, 5> kDemoCouplings{{
    {1, 2, 11, 0.221},
    {2, 1, 5, 0.306},
    {3, 1, 8, -0.403},
    {4, 3, 20, -0.215},
    {3, 5, 4, 0.352},
}};

/// Self-regression strength A_{1,ii}. The cross-couplings alone force the
/// companion spectral radius above 0.845 (1<->2 feedback at combined lag 16),
/// and any self coefficient above ~0.74 tips the model unstable; 0.05 keeps
/// the radius at 0.8515 so the autocovariance tail decays below 1e-12 of
/// Gamma_0 within 175 lags.
inline constexpr double kDemoRhoSelf = 0.05;

/// The five-variable order-20 demonstration model: identity innovations
/// covariance, lag-1 self-regression rho_self on every variable, and the
/// five cross-couplings above.
inline VarModel demo_model(double rho_self = kDemoRhoSelf) {
    std::vector<Mat> coeffs(kDemoOrder, Mat::Zero(kDemoVariables, kDemoVariables));
    for (int i = 0; i < kDemoVariables; ++i) coeffs[0](i, i) = rho_self;
    for (const auto& c : kDemoCouplings)
        coeffs[static_cast<std::size_t>(c.lag - 1)](c.target - 1, c.source - 1) = c.value;
    return VarModel(std::move(coeffs), Mat::Identity(kDemoVariables, kDemoVariables));
}

}  // namespace granger
