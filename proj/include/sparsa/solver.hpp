#pragma once

#include "sparsa/common.hpp"
#include "sparsa/linops.hpp"
#include "sparsa/regularizers.hpp"

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sparsa {

/// Smooth data term f with value and gradient.
///
/// Implementations may keep per-instance caches and product counters, so a
/// single instance belongs to a single solve. Create one per run.
class SmoothFunction {
public:
    virtual ~SmoothFunction() = default;
    virtual Index dim() const = 0;
    virtual double value(const Vector& x) const = 0;
    virtual Vector gradient(const Vector& x) const = 0;
    /// Products with A / A^T performed so far (zero for matrix-free oracles).
    virtual MatvecCounter matvecs() const { return {}; }
};

/// Adapts two callables into a SmoothFunction. Used for small analytic tests.
class FunctionOracle final : public SmoothFunction {
public:
    using ValueFn = std::function<double(const Vector&)>;
    using GradFn = std::function<Vector(const Vector&)>;

    FunctionOracle(Index dim, ValueFn value, GradFn grad)
        : dim_(dim), value_(std::move(value)), grad_(std::move(grad)) {}

    Index dim() const override { return dim_; }
    double value(const Vector& x) const override { return value_(x); }
    Vector gradient(const Vector& x) const override { return grad_(x); }

private:
    Index dim_;
    ValueFn value_;
    GradFn grad_;
};

enum class ReferencePolicy { gll_max, adaptive };

std::string_view to_string(ReferencePolicy p);
ReferencePolicy reference_policy_from_string(std::string_view s);

struct SolverConfig {
    double eta = 5.0;
    double sigma = 1e-4;
    double alpha_min = 1e-30;
    double alpha_max = 1e30;
    int memory_M = 10;
    /// BB cycle length; 0 selects it from tau (1 if tau >= 1e-2, else 3).
    int cycle_m = 0;
    ReferencePolicy ref_policy = ReferencePolicy::gll_max;
    int adapt_L = 10;
    /// Relative decrease trigger: reset when phi(x_{k-L}) - phi(x_k) <= adapt_Delta * max(1, |phi(x_k)|).
    double adapt_Delta = 1e-6;
    double eps = 1e-5;
    int max_iters = 100000;
    int max_backtracks = 100;
    /// Seed used before any (s, y) pair exists.
    double initial_alpha = 1.0;

    /// Throws std::invalid_argument on out-of-range parameters.
    void validate() const;
};

/// Cycle length actually used for a regularizer weight tau.
int resolve_cycle_length(const SolverConfig& cfg, double tau);

/// Safeguarded BB value argmin_{alpha in [alpha_min, alpha_max]} ||alpha s - y||.
double bb_seed(const Vector& s, const Vector& y, const SolverConfig& cfg);

/// Whether the cyclic rule recomputes the BB seed at iteration k (k >= 1).
bool cyclic_refresh(int k, int cycle_m);

/// Cyclic BB: the seed computed at the first iteration of each length-m cycle
/// is reused for the rest of the cycle.
class CyclicSeed {
public:
    explicit CyclicSeed(const SolverConfig& cfg, int cycle_m);

    /// Seed for iteration k. s and y are the latest differences; both empty
    /// at k = 1.
    double next(int k, const Vector& s, const Vector& y);
    double stored() const { return stored_; }

private:
    SolverConfig cfg_;
    int cycle_m_;
    double stored_;
};

/// max of the given (most recent) objective values.
double gll_reference(std::span<const double> recent);

/// Reference values phi_k^R for either policy.
///
/// Adaptive rule: phi_1^R = phi(x_1). For k > 1 the reference resets to
/// phi_k^max when k is a multiple of L, or when the decrease over the last L
/// iterations is below Delta; otherwise it is max(phi_{k-1}^R, phi_k^max).
class ReferenceTracker {
public:
    explicit ReferenceTracker(const SolverConfig& cfg);

    /// Record phi(x_k) for the next k and return phi_k^R.
    double push(double obj);

    int k() const { return static_cast<int>(history_.size()); }
    double phi_max() const { return phi_max_; }
    double phi_ref() const { return phi_ref_; }
    bool last_was_reset() const { return last_reset_; }

private:
    SolverConfig cfg_;
    std::vector<double> history_;
    double phi_max_ = 0.0;
    double phi_ref_ = 0.0;
    bool last_reset_ = false;
};

/// State at the start of iteration k.
struct IterateState {
    Vector x;
    Vector g;
    double obj = 0.0;
    double f_value = 0.0;
    double phi_ref = 0.0;
    double alpha_seed = 1.0;
    int k = 1;
};

struct LineSearchResult {
    Vector x_next;
    double alpha = 0.0;
    int backtracks = 0;
    double obj_next = 0.0;
    double f_next = 0.0;
};

/// Step 2: smallest j >= 0 such that x+ = prox at alpha = eta^j * seed
/// satisfies phi(x+) <= phi_ref - sigma * alpha * ||x+ - x||^2.
LineSearchResult line_search_step(const IterateState& state, const SmoothFunction& f,
                                  const Regularizer& r, const SolverConfig& cfg,
                                  TvWorkspace* ws = nullptr);

struct TraceRecord {
    int k = 0;
    double obj = 0.0;
    double phi_ref = 0.0;
    double alpha_seed = 0.0;
    double alpha_accepted = 0.0;
    int backtracks = 0;
    double step_norm = 0.0;
    double step_inf = 0.0;
    std::uint64_t matvecs = 0;
    double wall_time = 0.0;
};

struct Trace {
    std::vector<TraceRecord> records;
    /// phi(x_{K+1}) for the final accepted step, i.e. the objective that the
    /// last record's acceptance inequality refers to.
    double final_obj = 0.0;

    /// Objective reached after iteration index i (0-based) of `records`.
    double obj_after(std::size_t i) const {
        return i + 1 < records.size() ? records[i + 1].obj : final_obj;
    }
};

enum class SolveStatus { converged, stationary, iter_limit };

std::string_view to_string(SolveStatus s);

struct SolveResult {
    Vector x;
    Trace trace;
    SolveStatus status = SolveStatus::iter_limit;
    MatvecCounter matvecs;
    double wall_time = 0.0;
};

/// Runs the iteration from x1 until alpha_k ||x_{k+1} - x_k||_inf <= eps,
/// an exact fixed point, or max_iters.
SolveResult solve(const SmoothFunction& f, const Regularizer& r, const Vector& x1,
                  const SolverConfig& cfg);

/// Infinity-norm distance from -grad f(x) to the subdifferential of psi at x.
/// Throws Unsupported for tv-iso.
double stationarity_residual(const Vector& x, const SmoothFunction& f, const Regularizer& r);
/// Same, with a precomputed gradient.
double stationarity_residual_from_gradient(const Vector& x, const Vector& g, const Regularizer& r);

/// Column order: k,obj,phi_ref,alpha_seed,alpha_accepted,backtracks,step_norm,step_inf,matvecs,wall_time
/// A trailing "# final_obj=<value>" line carries Trace::final_obj.
void write_trace_csv(const std::filesystem::path& path, const Trace& trace);
Trace read_trace_csv(const std::filesystem::path& path);

}  // namespace sparsa
