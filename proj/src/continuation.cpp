#include "sparsa/continuation.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace sparsa {

std::vector<double> ContinuationSchedule::taus(double tau_max) const {
    if (!(tau_target > 0.0)) throw std::invalid_argument("continuation: tau_target must be positive");
    if (!(decrease_factor > 0.0 && decrease_factor < 1.0)) {
        throw std::invalid_argument("continuation: decrease_factor must lie in (0, 1)");
    }
    if (!(xi > 0.0)) throw std::invalid_argument("continuation: xi must be positive");
    std::vector<double> out;
    double tau = xi * tau_max;
    while (tau > tau_target) {
        out.push_back(tau);
        tau *= decrease_factor;
    }
    out.push_back(tau_target);
    return out;
}

ContinuationResult solve_with_continuation(const LeastSquaresProblem& problem,
                                           const ContinuationSchedule& schedule,
                                           const SolverConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> taus = schedule.taus(problem.atb_inf);

    // One oracle for all stages so its counter accumulates.
    const LeastSquaresObjective f = problem.objective();
    ContinuationResult out;
    Vector x = problem.x1;
    int iter_offset = 0;
    double time_offset = 0.0;

    for (std::size_t i = 0; i < taus.size(); ++i) {
        const bool last = i + 1 == taus.size();
        SolverConfig stage_cfg = cfg;
        stage_cfg.eps = last ? cfg.eps : std::max(schedule.inner_eps, cfg.eps);
        const Regularizer r = problem.regularizer.with_tau(taus[i]);

        const std::uint64_t before = f.matvecs().total();
        SolveResult res;
        try {
            res = solve(f, r, x, stage_cfg);
        } catch (const std::exception& e) {
            throw ContinuationStageError(i, e.what());
        }
        for (auto rec : res.trace.records) {
            rec.k += iter_offset;
            rec.wall_time += time_offset;
            out.trace.records.push_back(rec);
        }
        out.trace.final_obj = res.trace.final_obj;
        iter_offset += static_cast<int>(res.trace.records.size());
        time_offset += res.wall_time;
        out.stages.push_back({taus[i], static_cast<int>(res.trace.records.size()),
                              res.matvecs.total() - before, res.status});
        x = std::move(res.x);
        out.status = res.status;
    }
    out.x = std::move(x);
    out.matvecs = f.matvecs();
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace sparsa
