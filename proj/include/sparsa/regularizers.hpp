#pragma once

#include "sparsa/common.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace sparsa {

enum class RegularizerKind { zero, l1, group_l2, tv_iso };

std::string_view to_string(RegularizerKind kind);

using Group = std::vector<Index>;

/// Settings for the inner total-variation solver (dual fixed-point iteration).
struct TvOptions {
    int max_inner_iters = 40;
    double step = 0.248;
    double rel_tol = 1e-5;
};

/// Mutable per-solve state for the TV inner solver. The dual field carries
/// over between calls so consecutive outer iterations warm start.
struct TvWorkspace {
    Vector dual_h;
    Vector dual_v;
    int last_inner_iters = 0;
};

/// Point at which the separable subproblem
///   argmin_z  1/2 ||z - u||^2 + psi(z) / (2 alpha)
/// is solved. Note the 2*alpha: the quadratic in the outer step is
/// alpha ||z - x||^2 with no factor 1/2.
struct ProxQuery {
    Vector u;
    double alpha = 1.0;
    double tau = 0.0;
};

/// psi(x) = tau * R(x), where R is one of: 0, ||x||_1, sum of block 2-norms
/// over a partition, or isotropic total variation on a rows x cols grid.
class Regularizer {
public:
    static Regularizer zero();
    static Regularizer l1(double tau);
    /// Throws std::invalid_argument unless `groups` partitions 0..n-1.
    static Regularizer group_l2(double tau, std::vector<Group> groups);
    static Regularizer tv_iso(double tau, Index rows, Index cols, TvOptions opts = {});

    RegularizerKind kind() const { return kind_; }
    double tau() const { return tau_; }
    const std::vector<Group>& groups() const { return groups_; }
    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    const TvOptions& tv_options() const { return tv_; }
    /// Required vector length, or nullopt when any length is accepted.
    std::optional<Index> dimension() const;

    Regularizer with_tau(double tau) const;

    double value(const Vector& x) const;

    /// Subproblem solution using this regularizer's tau.
    Vector solve_subproblem(const Vector& u, double alpha, TvWorkspace* ws = nullptr) const;
    /// Subproblem solution using q.tau in place of tau().
    Vector solve_subproblem(const ProxQuery& q, TvWorkspace* ws = nullptr) const;

    /// Whether p is a subgradient of psi at x. nullopt for tv-iso, where no
    /// closed-form test is available.
    std::optional<bool> subgradient_check(const Vector& x, const Vector& p,
                                          double tol = 1e-12) const;

private:
    Regularizer(RegularizerKind kind, double tau) : kind_(kind), tau_(tau) {}

    void check_dim(const Vector& x, const char* what) const;

    RegularizerKind kind_;
    double tau_;
    std::vector<Group> groups_;
    Index group_dim_ = 0;
    Index rows_ = 0;
    Index cols_ = 0;
    TvOptions tv_;
};

/// sign(v) * max(|v| - t, 0)
double soft_threshold(double v, double t);

/// Total variation: forward differences with zero difference across the last
/// row and column.
double total_variation(const Vector& img, Index rows, Index cols);

/// Solves argmin_z 1/2||z - u||^2 + lambda * TV(z). When `dual_objective` is
/// non-null, ||u - lambda div p||^2 is appended after every inner iteration.
Vector tv_denoise(const Vector& u, Index rows, Index cols, double lambda, const TvOptions& opts,
                  TvWorkspace& ws, std::vector<double>* dual_objective = nullptr);

}  // namespace sparsa
