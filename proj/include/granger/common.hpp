#pragma once

#include <Eigen/Dense>

#include <iostream>
#include <stdexcept>
#include <string>

namespace granger {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Error taxonomy. The CLI maps these onto exit codes: validation/argument
// errors -> 2, I/O errors -> 3, numerical failures -> 4.

/// Invalid argument, dimension mismatch, bad configuration.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DimensionError : ArgumentError {
    using ArgumentError::ArgumentError;
};

/// Model violates the stability requirement (companion spectral radius >= 1).
struct StabilityError : ArgumentError {
    using ArgumentError::ArgumentError;
};

/// Numerical failure in an otherwise valid computation.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Covariance not positive definite where positive definiteness is required.
struct CovarianceError : NumericalError {
    using NumericalError::NumericalError;
};

/// Rank-deficient regression design.
struct SingularityError : NumericalError {
    using NumericalError::NumericalError;
};

/// Ill-conditioned linear system (Cholesky failed even after ridge retry).
struct ConditioningError : NumericalError {
    using NumericalError::NumericalError;
};

/// A computed quantity violates a mathematical identity beyond tolerance
/// (e.g. a GC statistic more negative than -1e-10).
struct ConsistencyError : NumericalError {
    using NumericalError::NumericalError;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void warn(const std::string& msg) { std::cerr << "[granger] warning: " << msg << "\n"; }

inline double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace detail

}  // namespace granger
