#include "sparsa/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace sparsa {

std::string_view to_string(ReferencePolicy p) {
    return p == ReferencePolicy::gll_max ? "gll-max" : "adaptive";
}

ReferencePolicy reference_policy_from_string(std::string_view s) {
    if (s == "gll-max" || s == "gll") return ReferencePolicy::gll_max;
    if (s == "adaptive") return ReferencePolicy::adaptive;
    throw std::invalid_argument("unknown reference policy: " + std::string(s));
}

std::string_view to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::stationary: return "stationary";
        case SolveStatus::iter_limit: return "iter-limit";
    }
    return "unknown";
}

void SolverConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("SolverConfig: " + what); };
    if (!(eta > 1.0)) fail("eta must exceed 1");
    if (!(sigma > 0.0 && sigma < 1.0)) fail("sigma must lie in (0, 1)");
    if (!(alpha_min > 0.0) || !(alpha_max >= alpha_min) || !std::isfinite(alpha_max)) {
        fail("need 0 < alpha_min <= alpha_max < inf");
    }
    if (memory_M < 1) fail("memory_M must be positive");
    if (cycle_m < 0) fail("cycle_m must be nonnegative (0 = automatic)");
    if (adapt_L < 1) fail("adapt_L must be positive");
    if (!(adapt_Delta >= 0.0)) fail("adapt_Delta must be nonnegative");
    if (!(eps > 0.0)) fail("eps must be positive");
    if (max_iters < 1) fail("max_iters must be positive");
    if (max_backtracks < 1) fail("max_backtracks must be positive");
    if (!(initial_alpha >= alpha_min && initial_alpha <= alpha_max)) {
        fail("initial_alpha must lie in [alpha_min, alpha_max]");
    }
}

int resolve_cycle_length(const SolverConfig& cfg, double tau) {
    if (cfg.cycle_m > 0) return cfg.cycle_m;
    return tau >= 1e-2 ? 1 : 3;
}

double bb_seed(const Vector& s, const Vector& y, const SolverConfig& cfg) {
    require_dim(y.size(), s.size(), "bb_seed");
    const double sts = s.squaredNorm();
    const double sty = s.dot(y);
    // Nonpositive curvature: ||alpha s - y|| is increasing on alpha > 0.
    if (sts == 0.0 || !(sty > 0.0)) return cfg.alpha_min;
    return std::clamp(sty / sts, cfg.alpha_min, cfg.alpha_max);
}

bool cyclic_refresh(int k, int cycle_m) { return (k - 1) % cycle_m == 0; }

CyclicSeed::CyclicSeed(const SolverConfig& cfg, int cycle_m)
    : cfg_(cfg), cycle_m_(cycle_m), stored_(cfg.initial_alpha) {
    if (cycle_m < 1) throw std::invalid_argument("CyclicSeed: cycle length must be positive");
}

double CyclicSeed::next(int k, const Vector& s, const Vector& y) {
    if (k < 1) throw std::invalid_argument("CyclicSeed: iterations are numbered from 1");
    if (cyclic_refresh(k, cycle_m_)) {
        stored_ = s.size() == 0 ? cfg_.initial_alpha : bb_seed(s, y, cfg_);
    }
    return stored_;
}

double gll_reference(std::span<const double> recent) {
    if (recent.empty()) throw std::invalid_argument("gll_reference: empty history");
    return *std::max_element(recent.begin(), recent.end());
}

ReferenceTracker::ReferenceTracker(const SolverConfig& cfg) : cfg_(cfg) {}

double ReferenceTracker::push(double obj) {
    history_.push_back(obj);
    const std::size_t k = history_.size();
    const std::size_t window = std::min<std::size_t>(k, static_cast<std::size_t>(cfg_.memory_M));
    phi_max_ = gll_reference(std::span<const double>(history_).last(window));

    if (cfg_.ref_policy == ReferencePolicy::gll_max) {
        phi_ref_ = phi_max_;
        last_reset_ = true;
        return phi_ref_;
    }
    if (k == 1) {
        phi_ref_ = obj;
        last_reset_ = true;
        return phi_ref_;
    }
    const auto L = static_cast<std::size_t>(cfg_.adapt_L);
    bool reset = k % L == 0;
    if (!reset && k > L) {
        const double older = history_[k - 1 - L];  // phi(x_{k-L})
        reset = older - obj <= cfg_.adapt_Delta * std::max(1.0, std::abs(obj));
    }
    phi_ref_ = reset ? phi_max_ : std::max(phi_ref_, phi_max_);
    last_reset_ = reset;
    return phi_ref_;
}

LineSearchResult line_search_step(const IterateState& state, const SmoothFunction& f,
                                  const Regularizer& r, const SolverConfig& cfg, TvWorkspace* ws) {
    double alpha = state.alpha_seed;
    for (int j = 0; j <= cfg.max_backtracks; ++j) {
        const Vector u = state.x - state.g / (2.0 * alpha);
        Vector xp = r.solve_subproblem(u, alpha, ws);
        const double fp = f.value(xp);
        const double objp = fp + r.value(xp);
        if (!std::isfinite(objp)) {
            throw NonFiniteObjective("objective is not finite at trial point (iteration " +
                                     std::to_string(state.k) + ", backtrack " + std::to_string(j) + ")");
        }
        const double d2 = (xp - state.x).squaredNorm();
        if (objp <= state.phi_ref - cfg.sigma * alpha * d2) {
            return {std::move(xp), alpha, j, objp, fp};
        }
        alpha *= cfg.eta;
    }
    throw BacktrackLimitExceeded("line search exceeded " + std::to_string(cfg.max_backtracks) +
                                 " backtracks at iteration " + std::to_string(state.k));
}

SolveResult solve(const SmoothFunction& f, const Regularizer& r, const Vector& x1,
                  const SolverConfig& cfg) {
    cfg.validate();
    require_dim(x1.size(), f.dim(), "solve: starting point");
    if (!x1.allFinite()) throw std::invalid_argument("solve: starting point is not finite");

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

    SolveResult res;
    TvWorkspace ws;
    IterateState st;
    st.x = x1;
    st.f_value = f.value(st.x);
    st.g = f.gradient(st.x);
    st.obj = st.f_value + r.value(st.x);
    if (!std::isfinite(st.obj)) throw NonFiniteObjective("objective is not finite at the starting point");

    CyclicSeed seeder(cfg, resolve_cycle_length(cfg, r.tau()));
    ReferenceTracker reference(cfg);
    Vector s, y;
    res.status = SolveStatus::iter_limit;
    res.trace.final_obj = st.obj;

    for (int k = 1; k <= cfg.max_iters; ++k) {
        st.k = k;
        st.phi_ref = reference.push(st.obj);
        st.alpha_seed = seeder.next(k, s, y);

        LineSearchResult ls = line_search_step(st, f, r, cfg, &ws);
        const Vector dx = ls.x_next - st.x;
        TraceRecord rec;
        rec.k = k;
        rec.obj = st.obj;
        rec.phi_ref = st.phi_ref;
        rec.alpha_seed = st.alpha_seed;
        rec.alpha_accepted = ls.alpha;
        rec.backtracks = ls.backtracks;
        rec.step_norm = dx.norm();
        rec.step_inf = ls.alpha * dx.lpNorm<Eigen::Infinity>();
        res.trace.final_obj = ls.obj_next;

        const bool stationary = ls.x_next == st.x;
        const bool converged = rec.step_inf <= cfg.eps;
        if (stationary || converged) {
            rec.matvecs = f.matvecs().total();
            rec.wall_time = elapsed();
            res.trace.records.push_back(rec);
            st.x = std::move(ls.x_next);
            res.status = stationary ? SolveStatus::stationary : SolveStatus::converged;
            break;
        }

        Vector g_next = f.gradient(ls.x_next);
        rec.matvecs = f.matvecs().total();
        rec.wall_time = elapsed();
        res.trace.records.push_back(rec);

        s = dx;
        y = g_next - st.g;
        st.x = std::move(ls.x_next);
        st.g = std::move(g_next);
        st.obj = ls.obj_next;
        st.f_value = ls.f_next;
    }

    res.x = std::move(st.x);
    res.matvecs = f.matvecs();
    res.wall_time = elapsed();
    return res;
}

double stationarity_residual_from_gradient(const Vector& x, const Vector& g, const Regularizer& r) {
    require_dim(g.size(), x.size(), "stationarity_residual");
    const double tau = r.tau();
    double worst = 0.0;
    switch (r.kind()) {
        case RegularizerKind::zero: return g.lpNorm<Eigen::Infinity>();
        case RegularizerKind::l1:
            for (Index i = 0; i < x.size(); ++i) {
                const double d = x[i] != 0.0 ? std::abs(g[i] + (x[i] > 0.0 ? tau : -tau))
                                             : std::max(std::abs(g[i]) - tau, 0.0);
                worst = std::max(worst, d);
            }
            return worst;
        case RegularizerKind::group_l2:
            require_dim(x.size(), *r.dimension(), "stationarity_residual");
            for (const auto& grp : r.groups()) {
                double xsq = 0.0, gsq = 0.0;
                for (Index i : grp) {
                    xsq += x[i] * x[i];
                    gsq += g[i] * g[i];
                }
                double d = 0.0;
                if (xsq > 0.0) {
                    const double xn = std::sqrt(xsq);
                    double sq = 0.0;
                    for (Index i : grp) {
                        const double e = g[i] + tau * x[i] / xn;
                        sq += e * e;
                    }
                    d = std::sqrt(sq);
                } else {
                    d = std::max(std::sqrt(gsq) - tau, 0.0);
                }
                worst = std::max(worst, d);
            }
            return worst;
        case RegularizerKind::tv_iso:
            throw Unsupported("stationarity_residual is not available for tv-iso");
    }
    return worst;
}

double stationarity_residual(const Vector& x, const SmoothFunction& f, const Regularizer& r) {
    if (r.kind() == RegularizerKind::tv_iso) {
        throw Unsupported("stationarity_residual is not available for tv-iso");
    }
    return stationarity_residual_from_gradient(x, f.gradient(x), r);
}

namespace {
constexpr const char* kTraceHeader =
    "k,obj,phi_ref,alpha_seed,alpha_accepted,backtracks,step_norm,step_inf,matvecs,wall_time";
}

void write_trace_csv(const std::filesystem::path& path, const Trace& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << kTraceHeader << '\n' << std::setprecision(17);
    for (const auto& r : trace.records) {
        out << r.k << ',' << r.obj << ',' << r.phi_ref << ',' << r.alpha_seed << ','
            << r.alpha_accepted << ',' << r.backtracks << ',' << r.step_norm << ',' << r.step_inf
            << ',' << r.matvecs << ',' << r.wall_time << '\n';
    }
    out << "# final_obj=" << trace.final_obj << '\n';
}

Trace read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("k,obj", 0) != 0) {
        throw std::runtime_error("missing trace header in " + path.string());
    }
    Trace t;
    std::optional<double> final_obj;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find("final_obj=");
            if (eq != std::string::npos) final_obj = std::stod(line.substr(eq + 10));
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 10) throw std::runtime_error("malformed trace row in " + path.string());
        TraceRecord r;
        r.k = std::stoi(cells[0]);
        r.obj = std::stod(cells[1]);
        r.phi_ref = std::stod(cells[2]);
        r.alpha_seed = std::stod(cells[3]);
        r.alpha_accepted = std::stod(cells[4]);
        r.backtracks = std::stoi(cells[5]);
        r.step_norm = std::stod(cells[6]);
        r.step_inf = std::stod(cells[7]);
        r.matvecs = std::stoull(cells[8]);
        r.wall_time = std::stod(cells[9]);
        t.records.push_back(r);
    }
    t.final_obj = final_obj ? *final_obj : (t.records.empty() ? 0.0 : t.records.back().obj);
    return t;
}

}  // namespace sparsa
