#include "sparsa/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sparsa {

std::string_view to_string(RegularizerKind kind) {
    switch (kind) {
        case RegularizerKind::zero: return "zero";
        case RegularizerKind::l1: return "l1";
        case RegularizerKind::group_l2: return "group-l2";
        case RegularizerKind::tv_iso: return "tv-iso";
    }
    return "unknown";
}

double soft_threshold(double v, double t) {
    const double mag = std::abs(v) - t;
    if (mag <= 0.0) return 0.0;
    return v > 0.0 ? mag : -mag;
}

namespace {

void check_tau(double tau) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw std::invalid_argument("regularizer weight tau must be finite and nonnegative");
    }
}

// Forward differences; the difference leaving the grid is zero.
void gradient(const Vector& x, Index rows, Index cols, Vector& gh, Vector& gv) {
    gh.resize(rows * cols);
    gv.resize(rows * cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            const Index i = r * cols + c;
            gh[i] = c + 1 < cols ? x[i + 1] - x[i] : 0.0;
            gv[i] = r + 1 < rows ? x[i + cols] - x[i] : 0.0;
        }
    }
}

// Negative adjoint of gradient().
void divergence(const Vector& ph, const Vector& pv, Index rows, Index cols, Vector& div) {
    div.resize(rows * cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            const Index i = r * cols + c;
            double d = 0.0;
            if (c + 1 < cols) d += ph[i];
            if (c > 0) d -= ph[i - 1];
            if (r + 1 < rows) d += pv[i];
            if (r > 0) d -= pv[i - cols];
            div[i] = d;
        }
    }
}

}  // namespace

double total_variation(const Vector& img, Index rows, Index cols) {
    require_dim(img.size(), rows * cols, "total_variation");
    Vector gh, gv;
    gradient(img, rows, cols, gh, gv);
    double tv = 0.0;
    for (Index i = 0; i < gh.size(); ++i) tv += std::hypot(gh[i], gv[i]);
    return tv;
}

Vector tv_denoise(const Vector& u, Index rows, Index cols, double lambda, const TvOptions& opts,
                  TvWorkspace& ws, std::vector<double>* dual_objective) {
    require_dim(u.size(), rows * cols, "tv_denoise");
    const Index n = rows * cols;
    if (lambda <= 0.0) return u;
    if (ws.dual_h.size() != n || ws.dual_v.size() != n) {
        ws.dual_h = Vector::Zero(n);
        ws.dual_v = Vector::Zero(n);
    }
    Vector& ph = ws.dual_h;
    Vector& pv = ws.dual_v;
    Vector div, gh, gv;
    const double inv_lambda = 1.0 / lambda;
    ws.last_inner_iters = 0;
    for (int it = 0; it < opts.max_inner_iters; ++it) {
        divergence(ph, pv, rows, cols, div);
        gradient(div - u * inv_lambda, rows, cols, gh, gv);
        double change_sq = 0.0, norm_sq = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double denom = 1.0 + opts.step * std::hypot(gh[i], gv[i]);
            const double nh = (ph[i] + opts.step * gh[i]) / denom;
            const double nv = (pv[i] + opts.step * gv[i]) / denom;
            change_sq += (nh - ph[i]) * (nh - ph[i]) + (nv - pv[i]) * (nv - pv[i]);
            norm_sq += nh * nh + nv * nv;
            ph[i] = nh;
            pv[i] = nv;
        }
        ws.last_inner_iters = it + 1;
        if (!std::isfinite(change_sq)) throw NonFiniteObjective("tv inner solver produced non-finite dual");
        if (dual_objective != nullptr) {
            divergence(ph, pv, rows, cols, div);
            dual_objective->push_back((u - lambda * div).squaredNorm());
        }
        if (std::sqrt(change_sq) <= opts.rel_tol * std::max(1.0, std::sqrt(norm_sq))) break;
    }
    divergence(ph, pv, rows, cols, div);
    Vector z = u - lambda * div;

    // Never return something worse than the trivial candidate z = u.
    const double obj_z = 0.5 * (z - u).squaredNorm() + lambda * total_variation(z, rows, cols);
    const double obj_u = lambda * total_variation(u, rows, cols);
    if (!std::isfinite(obj_z)) throw NonFiniteObjective("tv inner solver produced non-finite iterate");
    return obj_z <= obj_u ? z : u;
}

Regularizer Regularizer::zero() { return Regularizer(RegularizerKind::zero, 0.0); }

Regularizer Regularizer::l1(double tau) {
    check_tau(tau);
    return Regularizer(RegularizerKind::l1, tau);
}

Regularizer Regularizer::group_l2(double tau, std::vector<Group> groups) {
    check_tau(tau);
    Index n = 0;
    for (const auto& g : groups) {
        if (g.empty()) throw std::invalid_argument("group-l2: empty group");
        n += static_cast<Index>(g.size());
    }
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (const auto& g : groups) {
        for (Index i : g) {
            if (i < 0 || i >= n) {
                throw std::invalid_argument("group-l2: index " + std::to_string(i) +
                                            " outside 0.." + std::to_string(n - 1));
            }
            if (seen[static_cast<std::size_t>(i)]) {
                throw std::invalid_argument("group-l2: groups overlap at index " + std::to_string(i));
            }
            seen[static_cast<std::size_t>(i)] = true;
        }
    }
    Regularizer r(RegularizerKind::group_l2, tau);
    r.groups_ = std::move(groups);
    r.group_dim_ = n;
    return r;
}

Regularizer Regularizer::tv_iso(double tau, Index rows, Index cols, TvOptions opts) {
    check_tau(tau);
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("tv-iso: grid must be nonempty");
    if (opts.max_inner_iters < 1 || !(opts.step > 0.0)) {
        throw std::invalid_argument("tv-iso: invalid inner solver options");
    }
    Regularizer r(RegularizerKind::tv_iso, tau);
    r.rows_ = rows;
    r.cols_ = cols;
    r.tv_ = opts;
    return r;
}

std::optional<Index> Regularizer::dimension() const {
    switch (kind_) {
        case RegularizerKind::group_l2: return group_dim_;
        case RegularizerKind::tv_iso: return rows_ * cols_;
        default: return std::nullopt;
    }
}

Regularizer Regularizer::with_tau(double tau) const {
    check_tau(tau);
    Regularizer r = *this;
    if (kind_ != RegularizerKind::zero) r.tau_ = tau;
    return r;
}

void Regularizer::check_dim(const Vector& x, const char* what) const {
    if (auto d = dimension()) require_dim(x.size(), *d, what);
}

double Regularizer::value(const Vector& x) const {
    check_dim(x, "Regularizer::value");
    switch (kind_) {
        case RegularizerKind::zero: return 0.0;
        case RegularizerKind::l1: return tau_ * x.lpNorm<1>();
        case RegularizerKind::group_l2: {
            double s = 0.0;
            for (const auto& g : groups_) {
                double sq = 0.0;
                for (Index i : g) sq += x[i] * x[i];
                s += std::sqrt(sq);
            }
            return tau_ * s;
        }
        case RegularizerKind::tv_iso: return tau_ * total_variation(x, rows_, cols_);
    }
    return 0.0;
}

Vector Regularizer::solve_subproblem(const Vector& u, double alpha, TvWorkspace* ws) const {
    return solve_subproblem(ProxQuery{u, alpha, tau_}, ws);
}

Vector Regularizer::solve_subproblem(const ProxQuery& q, TvWorkspace* ws) const {
    check_dim(q.u, "Regularizer::solve_subproblem");
    if (!(q.alpha > 0.0)) throw std::invalid_argument("solve_subproblem: alpha must be positive");
    check_tau(q.tau);
    const double t = q.tau / (2.0 * q.alpha);
    if (kind_ == RegularizerKind::zero || t == 0.0) return q.u;

    switch (kind_) {
        case RegularizerKind::l1: {
            Vector z(q.u.size());
            for (Index i = 0; i < z.size(); ++i) z[i] = soft_threshold(q.u[i], t);
            return z;
        }
        case RegularizerKind::group_l2: {
            Vector z = q.u;
            for (const auto& g : groups_) {
                double sq = 0.0;
                for (Index i : g) sq += q.u[i] * q.u[i];
                const double nrm = std::sqrt(sq);
                const double scale = nrm > t ? 1.0 - t / nrm : 0.0;
                for (Index i : g) z[i] = scale * q.u[i];
            }
            return z;
        }
        case RegularizerKind::tv_iso: {
            TvWorkspace local;
            return tv_denoise(q.u, rows_, cols_, t, tv_, ws != nullptr ? *ws : local);
        }
        case RegularizerKind::zero: break;
    }
    return q.u;
}

std::optional<bool> Regularizer::subgradient_check(const Vector& x, const Vector& p,
                                                   double tol) const {
    check_dim(x, "Regularizer::subgradient_check");
    require_dim(p.size(), x.size(), "Regularizer::subgradient_check");
    switch (kind_) {
        case RegularizerKind::zero: return p.lpNorm<Eigen::Infinity>() <= tol;
        case RegularizerKind::l1:
            for (Index i = 0; i < x.size(); ++i) {
                if (x[i] != 0.0) {
                    const double want = x[i] > 0.0 ? tau_ : -tau_;
                    if (std::abs(p[i] - want) > tol) return false;
                } else if (std::abs(p[i]) > tau_ + tol) {
                    return false;
                }
            }
            return true;
        case RegularizerKind::group_l2:
            for (const auto& g : groups_) {
                double xsq = 0.0, psq = 0.0;
                for (Index i : g) {
                    xsq += x[i] * x[i];
                    psq += p[i] * p[i];
                }
                const double xn = std::sqrt(xsq);
                if (xn > 0.0) {
                    double dev = 0.0;
                    for (Index i : g) {
                        const double d = p[i] - tau_ * x[i] / xn;
                        dev += d * d;
                    }
                    if (std::sqrt(dev) > tol) return false;
                } else if (std::sqrt(psq) > tau_ + tol) {
                    return false;
                }
            }
            return true;
        case RegularizerKind::tv_iso: return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace sparsa
