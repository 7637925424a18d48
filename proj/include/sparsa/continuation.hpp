#pragma once

#include "sparsa/problems.hpp"
#include "sparsa/solver.hpp"

#include <vector>

namespace sparsa {

/// Geometric homotopy in tau: start at xi * ||A^T b||_inf, multiply by
/// decrease_factor each stage, finish exactly at tau_target.
struct ContinuationSchedule {
    double tau_target = 0.0;
    double xi = 0.9;
    double decrease_factor = 0.25;
    /// Stopping tolerance for intermediate stages; the last stage uses cfg.eps.
    double inner_eps = 1e-3;

    /// Strictly decreasing sequence ending at tau_target. A single entry when
    /// tau_target >= xi * tau_max.
    std::vector<double> taus(double tau_max) const;
};

struct StageSummary {
    double tau = 0.0;
    int iters = 0;
    std::uint64_t matvecs = 0;
    SolveStatus status = SolveStatus::iter_limit;
};

struct ContinuationResult {
    Vector x;
    /// All stages concatenated; matvec counts are cumulative across stages.
    Trace trace;
    std::vector<StageSummary> stages;
    SolveStatus status = SolveStatus::iter_limit;
    MatvecCounter matvecs;
    double wall_time = 0.0;
};

/// Raised when a stage fails; carries the stage index in the message.
class ContinuationStageError : public std::runtime_error {
public:
    ContinuationStageError(std::size_t stage, const std::string& what)
        : std::runtime_error("continuation stage " + std::to_string(stage) + ": " + what),
          stage_(stage) {}
    std::size_t stage() const { return stage_; }

private:
    std::size_t stage_;
};

ContinuationResult solve_with_continuation(const LeastSquaresProblem& problem,
                                           const ContinuationSchedule& schedule,
                                           const SolverConfig& cfg);

}  // namespace sparsa
