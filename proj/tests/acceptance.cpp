// Acceptance suite: one PASS/FAIL line per criterion.
//
//   sparsa_acceptance            run everything
//   sparsa_acceptance 4 5        run selected criteria

#include "oracles.hpp"

#include "sparsa/continuation.hpp"
#include "sparsa/harness.hpp"
#include "sparsa/problems.hpp"
#include "sparsa/regularizers.hpp"
#include "sparsa/serialization.hpp"
#include "sparsa/solver.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace sparsa;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::set<std::string> failed;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) failed.insert(what);
        pass = pass && cond;
    }
};

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<void(Outcome&)> run;
};

// phi* as the best objective seen by tight solves with both reference policies.
double reference_optimum(const LeastSquaresProblem& p) {
    double best = INFINITY;
    for (auto pol : {ReferencePolicy::gll_max, ReferencePolicy::adaptive}) {
        SolverConfig cfg;
        cfg.ref_policy = pol;
        cfg.eps = 1e-13;
        cfg.max_iters = 1000000;
        auto f = p.objective();
        const auto res = solve(f, p.regularizer, p.x1, cfg);
        best = std::min(best, res.trace.final_obj);
        for (const auto& r : res.trace.records) best = std::min(best, r.obj);
    }
    return best;
}

// phi_k^max recomputed from the logged objectives.
std::vector<double> phi_max_series(const Trace& t, int M) {
    std::vector<double> out;
    for (std::size_t i = 0; i < t.records.size(); ++i) {
        double m = -INFINITY;
        const std::size_t lo = i + 1 >= static_cast<std::size_t>(M) ? i + 1 - static_cast<std::size_t>(M) : 0;
        for (std::size_t j = lo; j <= i; ++j) m = std::max(m, t.records[j].obj);
        out.push_back(m);
    }
    return out;
}

// Largest violation of the acceptance inequality, relative to max(1, |phi_ref|).
double acceptance_violation(const Trace& t, double sigma) {
    double worst = 0.0;
    for (std::size_t i = 0; i < t.records.size(); ++i) {
        const auto& r = t.records[i];
        const double rhs = r.phi_ref - sigma * r.alpha_accepted * r.step_norm * r.step_norm;
        worst = std::max(worst, (t.obj_after(i) - rhs) / std::max(1.0, std::abs(r.phi_ref)));
    }
    return worst;
}

Trace via_csv(const Trace& t, const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("sparsa_acceptance_" + name + ".csv");
    write_trace_csv(p, t);
    Trace back = read_trace_csv(p);
    fs::remove(p);
    return back;
}

// ---------------------------------------------------------------------------

void criterion_prox(Outcome& out) {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> tau_d(0.0, 3.0), alpha_d(0.05, 5.0), len_d(1, 6);
    double worst_closed = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const Index n = 6;
        const Vector u = oracle::random_vec(n, rng, 2.0);
        const double tau = tau_d(rng), alpha = alpha_d(rng);
        const double thr = tau / (2.0 * alpha);

        const Vector z = Regularizer::l1(tau).solve_subproblem(ProxQuery{u, alpha, tau});
        for (Index i = 0; i < n; ++i) worst_closed = std::max(worst_closed, std::abs(z[i] - oracle::scalar_l1_prox(u[i], thr)));

        // random partition into contiguous blocks
        std::vector<Group> groups;
        Index start = 0;
        while (start < n) {
            const Index len = std::min<Index>(n - start, static_cast<Index>(len_d(rng)));
            Group g;
            for (Index i = start; i < start + len; ++i) g.push_back(i);
            groups.push_back(g);
            start += len;
        }
        const Vector w = Regularizer::group_l2(tau, groups).solve_subproblem(ProxQuery{u, alpha, tau});
        for (const auto& g : groups) {
            Vector ub(static_cast<Index>(g.size())), wb(static_cast<Index>(g.size()));
            for (std::size_t j = 0; j < g.size(); ++j) {
                ub[static_cast<Index>(j)] = u[g[j]];
                wb[static_cast<Index>(j)] = w[g[j]];
            }
            worst_closed = std::max(worst_closed, (wb - oracle::radial_l2_prox(ub, thr)).cwiseAbs().maxCoeff());
        }
    }
    out.require(worst_closed <= 1e-8, "closed-form prox differs from numeric minimizer");

    double worst_tv = 0.0;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int side : {4, 8, 16}) {
        for (int rep = 0; rep < 3; ++rep) {
            Vector u(side * side);
            for (Index i = 0; i < u.size(); ++i) u[i] = uni(rng);
            const double alpha = 0.5 + rep, lambda = 0.1;
            const double tau = 2.0 * alpha * lambda;
            TvOptions tight;
            tight.max_inner_iters = 20000;
            tight.rel_tol = 1e-12;
            const auto r = Regularizer::tv_iso(tau, side, side, tight);
            const Vector z = r.solve_subproblem(ProxQuery{u, alpha, tau});
            const Vector zs = oracle::tv_prox_projected_gradient(u, side, side, lambda, 100000);
            const double gap = oracle::tv_prox_objective(z, u, side, side, lambda) -
                               oracle::tv_prox_objective(zs, u, side, side, lambda);
            worst_tv = std::max(worst_tv, std::abs(gap));
        }
    }
    out.require(worst_tv <= 1e-4, "tv prox objective gap above 1e-4");
    out.detail << "max closed-form deviation " << worst_closed << ", max tv objective gap " << worst_tv;
}

void criterion_line_search(Outcome& out) {
    double worst_closed = 0.0, worst_tv = 0.0;
    int solves = 0;
    std::size_t iters = 0;
    auto record = [&](const SolveResult& res, double sigma, bool tv, const std::string& tag) {
        const Trace t = via_csv(res.trace, tag);
        (tv ? worst_tv : worst_closed) = std::max(tv ? worst_tv : worst_closed, acceptance_violation(t, sigma));
        ++solves;
        iters += t.records.size();
    };

    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto p0 = gen_bpdn(128, 512, 20, seed, 0.0);
        for (double rel : {1e-1, 1e-2, 1e-3}) {
            const auto p = p0.with_tau(rel * p0.atb_inf);
            for (const auto& v : standard_variants()) {
                if (v.continuation) continue;
                auto cfg = v.cfg;
                cfg.eps = 1e-8;
                auto f = p.objective();
                record(solve(f, p.regularizer, p.x1, cfg), cfg.sigma, false, "ls");
            }
        }
    }
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto p = gen_group(seed, 128, 16, 16, 3);
        auto f = p.objective();
        SolverConfig cfg;
        cfg.eps = 1e-8;
        record(solve(f, p.regularizer, p.x1, cfg), cfg.sigma, false, "ls");
    }
    {
        auto spec = GeneratorSpec::defaults(Family::deblur);
        spec.rows = spec.cols = 32;
        spec.levels = 2;
        spec.mask_size = 4;
        const auto p = generate(spec);
        auto f = p.objective();
        SolverConfig cfg;
        cfg.eps = 1e-4;
        record(solve(f, p.regularizer, p.x1, cfg), cfg.sigma, false, "ls");
    }
    for (int side : {16, 32}) {
        const auto p = gen_tv_phantom(side, side, 0, 1);
        for (auto pol : {ReferencePolicy::gll_max, ReferencePolicy::adaptive}) {
            auto f = p.objective();
            SolverConfig cfg;
            cfg.ref_policy = pol;
            cfg.eps = 1e-3;
            record(solve(f, p.regularizer, p.x1, cfg), cfg.sigma, true, "ls");
        }
    }
    out.require(worst_closed <= 1e-10, "acceptance inequality violated (closed-form prox)");
    out.require(worst_tv <= 1e-6, "acceptance inequality violated (tv)");
    out.detail << solves << " solves, " << iters << " iterations; worst relative excess " << worst_closed
               << " (closed form), " << worst_tv << " (tv)";
}

void criterion_reference(Outcome& out) {
    int resets_missing = 0, gll_increase = 0, bounds = 0;
    std::size_t iters = 0;
    for (int s = 0; s < 50; ++s) {
        std::mt19937_64 rng(500 + s);
        const auto p0 = gen_bpdn(64 + 32 * (s % 3), 256, 8 + s % 10, 1000 + static_cast<std::uint64_t>(s), 0.0);
        const double rel = std::pow(10.0, -1.0 - (s % 4));
        const auto p = p0.with_tau(rel * p0.atb_inf);
        SolverConfig cfg;
        cfg.ref_policy = s % 2 == 0 ? ReferencePolicy::gll_max : ReferencePolicy::adaptive;
        cfg.cycle_m = s % 2 == 0 ? 1 : 0;
        cfg.eps = 1e-8;
        auto f = p.objective();
        const auto res = solve(f, p.regularizer, p.x1, cfg);
        const Trace& t = res.trace;
        iters += t.records.size();
        const auto pmax = phi_max_series(t, cfg.memory_M);
        const double phi1 = t.records.front().obj;
        for (std::size_t k = 0; k < t.records.size(); ++k) {
            const auto& r = t.records[k];
            if (!(r.phi_ref >= r.obj && r.phi_ref <= phi1)) ++bounds;
            if (cfg.ref_policy == ReferencePolicy::gll_max && k > 0 && pmax[k] > pmax[k - 1]) ++gll_increase;
        }
        if (cfg.ref_policy == ReferencePolicy::adaptive) {
            const auto L = static_cast<std::size_t>(cfg.adapt_L);
            for (std::size_t k = 0; k + L <= t.records.size(); ++k) {
                bool hit = false;
                for (std::size_t j = k; j < k + L; ++j) hit = hit || t.records[j].phi_ref <= pmax[j];
                if (!hit) ++resets_missing;
            }
        }
    }
    out.require(gll_increase == 0, "phi_max increased under GLL");
    out.require(bounds == 0, "phi_ref outside [phi(x_k), phi(x_1)]");
    out.require(resets_missing == 0, "adaptive window without a reset");
    out.detail << "50 solves, " << iters << " iterations; phi_max increases " << gll_increase
               << ", bound violations " << bounds << ", windows without reset " << resets_missing;
}

void criterion_sublinear(Outcome& out) {
    int ok = 0;
    double worst_inc = INFINITY;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto p0 = gen_bpdn(64, 256, 10, 2000 + seed, 0.0);
        const auto p = p0.with_tau(0.01 * p0.atb_inf);
        const double phi_star = reference_optimum(p);
        SolverConfig cfg;
        cfg.memory_M = 1;  // monotone reference, so e_k itself is nonincreasing
        cfg.eps = 1e-9;
        auto f = p.objective();
        const auto res = solve(f, p.regularizer, p.x1, cfg);
        const auto e = objective_errors(res.trace, phi_star);
        const auto fit = fit_sublinear(e, default_burn_in(e.size()));
        ok += fit.ok ? 1 : 0;
        worst_inc = std::min(worst_inc, fit.min_increment);
    }
    out.require(ok == 10, "fit_sublinear not ok on every instance");
    out.detail << ok << "/10 instances ok, smallest reciprocal increment " << worst_inc;
}

void criterion_rlinear(Outcome& out) {
    double worst_theta = 0.0, worst_r2 = 1.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto p0 = gen_bpdn(64, 64, 8, 3000 + seed, 0.0);
        const auto p = p0.with_tau(0.01 * p0.atb_inf);
        const double phi_star = reference_optimum(p);
        SolverConfig cfg;
        cfg.eps = 1e-10;
        auto f = p.objective();
        const auto res = solve(f, p.regularizer, p.x1, cfg);
        const auto rf = fit_rates(res.trace, phi_star);
        worst_theta = std::max(worst_theta, rf.theta_hat);
        worst_r2 = std::min(worst_r2, rf.residual_r2);
    }
    out.require(worst_theta <= 0.999, "theta_hat above 0.999");
    out.require(worst_r2 >= 0.95, "r2 below 0.95");
    out.detail << "max theta_hat " << worst_theta << ", min r2 " << worst_r2;
}

void criterion_stationarity(Outcome& out) {
    double worst = 0.0;
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto p0 = gen_bpdn(128, 512, 20, 4000 + seed, 0.0);
        for (double rel : {0.5, 0.1, 0.01, 1e-3}) {
            const auto p = p0.with_tau(rel * p0.atb_inf);
            SolverConfig cfg;
            cfg.eps = 1e-9;
            auto f = p.objective();
            const auto res = solve(f, p.regularizer, p.x1, cfg);
            if (res.status == SolveStatus::iter_limit) continue;
            worst = std::max(worst, stationarity_residual(res.x, f, p.regularizer));
            ++checked;
        }
        const auto g = gen_group(4000 + seed, 128, 32, 8, 4);
        SolverConfig cfg;
        cfg.eps = 1e-9;
        auto f = g.objective();
        const auto res = solve(f, g.regularizer, g.x1, cfg);
        if (res.status != SolveStatus::iter_limit) {
            worst = std::max(worst, stationarity_residual(res.x, f, g.regularizer));
            ++checked;
        }
    }
    out.require(checked == 25, "some solves hit the iteration limit");
    out.require(worst <= 1e-6, "stationarity residual above 1e-6");
    out.detail << checked << " converged solves, max residual " << worst;
}

double median_of(const ExperimentResult& r, const std::string& variant, double tau) {
    for (const auto& row : r.table)
        if (row.variant == variant && row.tau == tau) return row.median_matvecs;
    return NAN;
}

double mean_of(const ExperimentResult& r, const std::string& variant, double tau) {
    for (const auto& row : r.table)
        if (row.variant == variant && row.tau == tau) return row.mean_matvecs;
    return NAN;
}

void criterion_table(Outcome& out) {
    ExperimentSpec spec;
    spec.generator = GeneratorSpec::defaults(Family::bpdn);
    spec.generator.seed = 1;
    spec.taus = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    spec.variants = standard_variants();
    spec.tolerances = {1e-5};
    spec.repetitions = 10;
    const auto r = run_experiment(spec);

    int failures = 0;
    for (const auto& row : r.table) failures += row.failures;
    out.require(failures == 0, "some runs failed");

    std::cout << "    mean (median) matvecs over 10 seeds, 256x1024, eps 1e-5\n";
    std::printf("    %-11s", "tau");
    for (double t : spec.taus) std::printf("%18.0e", t);
    std::printf("\n");
    for (const auto& v : spec.variants) {
        std::printf("    %-11s", v.name.c_str());
        for (double t : spec.taus) {
            char cell[64];
            std::snprintf(cell, sizeof cell, "%.1f (%.0f)", mean_of(r, v.name, t), median_of(r, v.name, t));
            std::printf("%18s", cell);
        }
        std::printf("\n");
    }

    for (std::size_t i = 1; i < 4; ++i) {
        out.require(mean_of(r, "SpaRSA", spec.taus[i]) > mean_of(r, "SpaRSA", spec.taus[i - 1]),
                    "SpaRSA matvecs not increasing as tau decreases");
    }
    for (double t : {1e-3, 1e-4}) {
        out.require(median_of(r, "Adaptive", t) <= median_of(r, "SpaRSA", t), "Adaptive above SpaRSA in median");
    }
    for (double t : {1e-4, 1e-5}) {
        out.require(median_of(r, "SpaRSA/c", t) <= median_of(r, "SpaRSA", t), "SpaRSA/c above SpaRSA in median at tau " + std::to_string(t));
        out.require(median_of(r, "Adaptive/c", t) <= median_of(r, "Adaptive", t),
                    "Adaptive/c above Adaptive in median at tau " + std::to_string(t));
    }
    const double anchor = mean_of(r, "SpaRSA", 1e-1);
    out.require(anchor < 200.0, "SpaRSA matvecs at tau 1e-1 not below 200");
    out.detail << "SpaRSA mean at tau 1e-1: " << anchor;
}

// Strict decrease of phi_max over every full memory window, and no increase in between.
bool phi_max_decreasing(const Trace& t, int M, std::string& why) {
    const auto pm = phi_max_series(t, M);
    for (std::size_t k = 1; k < pm.size(); ++k) {
        if (pm[k] > pm[k - 1]) {
            why = "phi_max increased at k=" + std::to_string(k + 1);
            return false;
        }
    }
    const auto Ms = static_cast<std::size_t>(M);
    for (std::size_t k = 0; k + Ms < pm.size(); ++k) {
        if (!(pm[k + Ms] < pm[k])) {
            why = "phi_max flat over a window at k=" + std::to_string(k + 1);
            return false;
        }
    }
    return true;
}

void criterion_images(Outcome& out) {
    SolverConfig cfg;
    cfg.eps = 1e-3;

    const auto deblur = generate(GeneratorSpec::defaults(Family::deblur));
    auto fd = deblur.objective();
    const auto rd = solve(fd, deblur.regularizer, deblur.x1, cfg);
    std::string why;
    out.require(rd.status != SolveStatus::iter_limit, "deblur did not converge");
    out.require(phi_max_decreasing(rd.trace, cfg.memory_M, why), "deblur: " + why);
    const double d0 = rd.trace.records.front().obj, d1 = rd.trace.final_obj;
    out.require(d1 < d0, "deblur objective did not decrease");

    const auto tv = generate(GeneratorSpec::defaults(Family::tv_phantom));
    auto ft = tv.objective();
    const auto rt = solve(ft, tv.regularizer, tv.x1, cfg);
    out.require(rt.status != SolveStatus::iter_limit, "tv did not converge");
    out.require(phi_max_decreasing(rt.trace, cfg.memory_M, why), "tv: " + why);
    const double t0 = rt.trace.records.front().obj, t1 = rt.trace.final_obj;
    out.require(t1 <= 0.5 * t0, "tv objective dropped by less than 50%");

    // same instance from a zero start, reported only
    auto fz = tv.objective();
    const auto rz = solve(fz, tv.regularizer, Vector::Zero(tv.x1.size()), cfg);
    const double z0 = rz.trace.records.front().obj, z1 = rz.trace.final_obj;

    out.detail << "deblur " << d0 << " -> " << d1 << " in " << rd.trace.records.size() << " iterations ("
               << to_string(rd.status) << "); tv " << t0 << " -> " << t1 << " in "
               << rt.trace.records.size() << " iterations (" << to_string(rt.status) << ", drop "
               << 100.0 * (1.0 - t1 / t0) << "%); from zero start " << z0 << " -> " << z1;
}

void criterion_determinism(Outcome& out) {
    const fs::path root = fs::temp_directory_path() / "sparsa_acceptance_bench";
    fs::remove_all(root);
    int compared = 0;

    std::vector<ExperimentSpec> specs;
    {
        ExperimentSpec s;
        s.generator = GeneratorSpec::defaults(Family::bpdn);
        s.generator.k = 64;
        s.generator.n = 256;
        s.generator.spikes = 10;
        s.taus = {1e-2, 1e-3};
        s.variants = standard_variants();
        s.tolerances = {1e-3, 1e-5};
        s.repetitions = 3;
        specs.push_back(s);
    }
    {
        ExperimentSpec s;
        s.generator = GeneratorSpec::defaults(Family::group);
        s.generator.k = 64;
        s.generator.num_groups = 16;
        s.generator.group_len = 8;
        s.generator.active_groups = 2;
        s.variants = {standard_variants()[0], standard_variants()[1]};
        s.repetitions = 2;
        specs.push_back(s);
    }
    {
        ExperimentSpec s;
        s.generator = GeneratorSpec::defaults(Family::tv_phantom);
        s.generator.rows = s.generator.cols = 16;
        s.variants = {standard_variants()[0], standard_variants()[1]};
        s.tolerances = {1e-3};
        specs.push_back(s);
    }

    for (std::size_t i = 0; i < specs.size(); ++i) {
        auto s = specs[i];
        s.output_dir = (root / ("run" + std::to_string(i))).string();
        run_experiment(s);
        const auto manifest = read_json_file(fs::path(s.output_dir) / "manifest.json");
        ExperimentSpec replay = manifest.at("spec").get<ExperimentSpec>();
        replay.output_dir = (root / ("replay" + std::to_string(i))).string();
        const auto again = run_experiment(replay);
        const auto stored = read_json_file(fs::path(replay.output_dir) / "manifest.json");
        out.require(manifests_replay_identical(manifest, again.manifest), "replayed manifest differs");
        out.require(manifests_replay_identical(manifest, stored), "stored replay manifest differs");
        compared += static_cast<int>(again.runs.size());
    }
    fs::remove_all(root);
    out.detail << specs.size() << " manifests, " << compared << " runs replayed";
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "prox oracle equivalence", 60, criterion_prox},
        {2, "line-search contract", 0, criterion_line_search},
        {3, "reference-policy invariants", 0, criterion_reference},
        {4, "sublinear rate", 120, criterion_sublinear},
        {5, "R-linear rate", 120, criterion_rlinear},
        {6, "stationarity", 0, criterion_stationarity},
        {7, "l2-l1 table pattern", 600, criterion_table},
        {8, "deblur/tv smoke", 180, criterion_images},
        {9, "bench determinism", 0, criterion_determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!selected.empty() && !selected.contains(c.id)) continue;
        Outcome out;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(out);
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail << "exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs > c.budget_s) {
            out.pass = false;
            out.failed.insert("runtime over budget");
        }
        std::string detail = out.detail.str();
        for (const auto& f : out.failed) detail += "; failed: " + f;
        std::printf("criterion %d %-28s %s  %.1fs  %s\n", c.id, c.name.c_str(), out.pass ? "PASS" : "FAIL", secs,
                    detail.c_str());
        std::fflush(stdout);
        failed += out.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
