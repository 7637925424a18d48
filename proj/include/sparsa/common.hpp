#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sparsa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Raised when an input vector or image does not have the expected shape.
class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for operations a regularizer kind cannot provide (e.g. closed-form
/// subgradient tests for total variation).
class Unsupported : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Line search gave up after the configured number of backtracks.
class BacktrackLimitExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Objective became NaN or infinite at a trial point.
class NonFiniteObjective : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require_dim(Index got, Index want, const char* what) {
    if (got != want) {
        throw DimensionMismatch(std::string(what) + ": expected length " + std::to_string(want) +
                                ", got " + std::to_string(got));
    }
}

}  // namespace sparsa
