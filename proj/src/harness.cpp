#include "sparsa/harness.hpp"

#include "sparsa/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sparsa {

using nlohmann::json;

namespace {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
};

LineFit least_squares_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    LineFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (f.intercept + f.slope * xs[i]);
        ss_res += e * e;
    }
    f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return f;
}

// (k, e_k) pairs after burn-in with e_k > 0.
void usable_samples(std::span<const double> errors, std::size_t burn_in, std::vector<double>& ks,
                    std::vector<double>& es) {
    for (std::size_t i = burn_in; i < errors.size(); ++i) {
        if (errors[i] > 0.0 && std::isfinite(errors[i])) {
            ks.push_back(static_cast<double>(i + 1));
            es.push_back(errors[i]);
        }
    }
    if (ks.size() < 5) {
        throw std::invalid_argument("rate fit needs at least 5 positive post-burn-in errors, got " +
                                    std::to_string(ks.size()));
    }
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string cell_tag(const std::string& variant, std::size_t tau_i, std::size_t eps_i, int rep) {
    std::string safe = variant;
    std::replace(safe.begin(), safe.end(), '/', '_');
    return safe + "_tau" + std::to_string(tau_i) + "_eps" + std::to_string(eps_i) + "_rep" +
           std::to_string(rep);
}

}  // namespace

SublinearFit fit_sublinear(std::span<const double> errors, std::size_t burn_in) {
    std::vector<double> ks, es;
    usable_samples(errors, burn_in, ks, es);
    std::vector<double> recip(es.size());
    for (std::size_t i = 0; i < es.size(); ++i) recip[i] = 1.0 / es[i];
    const LineFit lf = least_squares_line(ks, recip);

    SublinearFit out;
    out.samples = ks.size();
    out.slope = lf.slope;
    out.min_increment = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < recip.size(); ++i) {
        out.min_increment = std::min(out.min_increment, recip[i] - recip[i - 1]);
    }
    if (lf.slope > 0.0) {
        out.a_hat = 1.0 / lf.slope;
        out.b_hat = lf.intercept / lf.slope;
    }
    out.ok = lf.slope > 0.0 && out.min_increment >= -1e-9;
    return out;
}

LinearFit fit_linear(std::span<const double> errors, std::size_t burn_in) {
    std::vector<double> ks, es;
    usable_samples(errors, burn_in, ks, es);
    std::vector<double> logs(es.size());
    for (std::size_t i = 0; i < es.size(); ++i) logs[i] = std::log(es[i]);
    const LineFit lf = least_squares_line(ks, logs);
    LinearFit out;
    out.samples = ks.size();
    out.theta_hat = std::exp(lf.slope);
    out.c_hat = std::exp(lf.intercept);
    out.r2 = lf.r2;
    return out;
}

std::size_t default_burn_in(std::size_t n) { return n / 5; }

std::vector<double> objective_errors(const Trace& trace, double phi_star) {
    std::vector<double> e;
    e.reserve(trace.records.size() + 1);
    for (const auto& r : trace.records) e.push_back(r.obj - phi_star);
    if (!trace.records.empty()) e.push_back(trace.final_obj - phi_star);
    return e;
}

RateFit fit_rates(const Trace& trace, double phi_star, std::optional<std::size_t> burn_in) {
    const auto errors = objective_errors(trace, phi_star);
    RateFit out;
    out.burn_in = burn_in.value_or(default_burn_in(errors.size()));
    const LinearFit lin = fit_linear(errors, out.burn_in);
    out.theta_hat = lin.theta_hat;
    out.c_hat = lin.c_hat;
    out.residual_r2 = lin.r2;
    const SublinearFit sub = fit_sublinear(errors, out.burn_in);
    out.a_hat = sub.a_hat;
    out.b_hat = sub.b_hat;
    out.sublinear_ok = sub.ok;
    return out;
}

std::vector<CurvePoint> error_vs_matvec_curve(const Trace& trace, double phi_star) {
    double lowest = trace.final_obj;
    for (const auto& r : trace.records) lowest = std::min(lowest, r.obj);
    if (phi_star > lowest + 1e-9) {
        throw std::invalid_argument("phi_star exceeds the smallest objective in the trace");
    }
    std::vector<CurvePoint> curve;
    curve.reserve(trace.records.size());
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        curve.push_back({trace.records[i].matvecs, trace.obj_after(i) - phi_star});
    }
    return curve;
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& curve) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "matvecs,error\n" << std::setprecision(17);
    for (const auto& p : curve) out << p.matvecs << ',' << p.error << '\n';
}

std::vector<VariantSpec> standard_variants() {
    SolverConfig gll;
    gll.ref_policy = ReferencePolicy::gll_max;
    gll.cycle_m = 1;
    SolverConfig adaptive;
    adaptive.ref_policy = ReferencePolicy::adaptive;
    adaptive.cycle_m = 0;
    return {
        {"SpaRSA", gll, false, {}},
        {"Adaptive", adaptive, false, {}},
        {"SpaRSA/c", gll, true, {}},
        {"Adaptive/c", adaptive, true, {}},
    };
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    if (spec.repetitions < 1) throw std::invalid_argument("experiment: repetitions must be positive");
    if (spec.variants.empty()) throw std::invalid_argument("experiment: no solver variants");
    if (spec.tolerances.empty()) throw std::invalid_argument("experiment: no tolerances");
    for (const auto& v : spec.variants) v.cfg.validate();

    const std::vector<double> taus = spec.taus.empty() ? std::vector<double>{spec.generator.tau} : spec.taus;
    const std::filesystem::path outdir = spec.output_dir;
    const bool write = !spec.output_dir.empty();
    if (write && spec.write_traces) std::filesystem::create_directories(outdir / "traces");
    else if (write) std::filesystem::create_directories(outdir);

    ExperimentResult result;
    for (int rep = 0; rep < spec.repetitions; ++rep) {
        GeneratorSpec gen = spec.generator;
        gen.seed = spec.generator.seed + static_cast<std::uint64_t>(rep);
        const LeastSquaresProblem base = generate(gen);
        for (std::size_t ti = 0; ti < taus.size(); ++ti) {
            const double tau = spec.generator.tau_rule == TauRule::relative_atb ? taus[ti] * base.atb_inf
                                                                                 : taus[ti];
            const LeastSquaresProblem problem = base.with_tau(tau);
            for (const auto& variant : spec.variants) {
                for (std::size_t ei = 0; ei < spec.tolerances.size(); ++ei) {
                    RunRecord run;
                    run.variant = variant.name;
                    run.tau = taus[ti];
                    run.eps = spec.tolerances[ei];
                    run.repetition = rep;
                    run.seed = gen.seed;
                    SolverConfig cfg = variant.cfg;
                    cfg.eps = spec.tolerances[ei];
                    try {
                        Trace trace;
                        if (variant.continuation) {
                            ContinuationSchedule sched = variant.schedule;
                            sched.tau_target = tau;
                            auto res = solve_with_continuation(problem, sched, cfg);
                            run.status = std::string(to_string(res.status));
                            run.matvecs = res.matvecs.total();
                            run.wall_time = res.wall_time;
                            trace = std::move(res.trace);
                        } else {
                            const auto f = problem.objective();
                            auto res = solve(f, problem.regularizer, problem.x1, cfg);
                            run.status = std::string(to_string(res.status));
                            run.matvecs = res.matvecs.total();
                            run.wall_time = res.wall_time;
                            trace = std::move(res.trace);
                        }
                        run.iters = static_cast<int>(trace.records.size());
                        run.final_obj = trace.final_obj;
                        if (write && spec.write_traces) {
                            write_trace_csv(outdir / "traces" / (cell_tag(variant.name, ti, ei, rep) + ".csv"),
                                            trace);
                        }
                    } catch (const std::exception& e) {
                        run.status = "error";
                        run.error = e.what();
                    }
                    result.runs.push_back(std::move(run));
                }
            }
        }
    }

    // Aggregate in (tau, variant, eps) order.
    for (double tau : taus) {
        for (const auto& variant : spec.variants) {
            for (double eps : spec.tolerances) {
                TableRow row{variant.name, tau, eps};
                std::vector<double> mv;
                double wall = 0.0, obj = 0.0;
                for (const auto& r : result.runs) {
                    if (r.variant != variant.name || r.tau != tau || r.eps != eps) continue;
                    ++row.runs;
                    if (r.status == "error") {
                        ++row.failures;
                        continue;
                    }
                    mv.push_back(static_cast<double>(r.matvecs));
                    wall += r.wall_time;
                    obj += r.final_obj;
                }
                const double ok = static_cast<double>(mv.size());
                if (!mv.empty()) {
                    double sum = 0.0;
                    for (double m : mv) sum += m;
                    row.mean_matvecs = sum / ok;
                    row.median_matvecs = median(mv);
                    row.mean_wall_time = wall / ok;
                    row.mean_final_obj = obj / ok;
                }
                result.table.push_back(row);
            }
        }
    }

    json runs = json::array();
    for (const auto& r : result.runs) {
        runs.push_back({{"variant", r.variant},
                        {"tau", r.tau},
                        {"eps", r.eps},
                        {"repetition", r.repetition},
                        {"seed", r.seed},
                        {"status", r.status},
                        {"error", r.error},
                        {"iters", r.iters},
                        {"matvecs", r.matvecs},
                        {"final_obj", r.final_obj},
                        {"wall_time", r.wall_time}});
    }
    json spec_json;
    to_json(spec_json, spec);
    result.manifest = {{"spec", spec_json}, {"runs", runs}};

    if (write) {
        write_table_csv(outdir / "table.csv", result.table);
        write_json_file(outdir / "manifest.json", result.manifest);
    }
    return result;
}

bool manifests_replay_identical(const json& a, const json& b) {
    auto strip = [](json m) {
        if (m.contains("runs")) {
            for (auto& r : m["runs"]) r.erase("wall_time");
        }
        if (m.contains("spec")) m["spec"].erase("output_dir");
        return m;
    };
    return strip(a) == strip(b);
}

void write_table_csv(const std::filesystem::path& path, const std::vector<TableRow>& table) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "variant,tau,eps,runs,failures,mean_matvecs,median_matvecs,mean_wall_time,mean_final_obj\n"
        << std::setprecision(17);
    for (const auto& r : table) {
        out << r.variant << ',' << r.tau << ',' << r.eps << ',' << r.runs << ',' << r.failures << ','
            << r.mean_matvecs << ',' << r.median_matvecs << ',' << r.mean_wall_time << ','
            << r.mean_final_obj << '\n';
    }
}

void to_json(json& j, const VariantSpec& v) {
    j = json{{"name", v.name}, {"config", v.cfg}, {"continuation", v.continuation}};
    if (v.continuation) {
        j["schedule"] = json{{"xi", v.schedule.xi},
                             {"decrease_factor", v.schedule.decrease_factor},
                             {"inner_eps", v.schedule.inner_eps}};
    }
}

void from_json(const json& j, VariantSpec& v) {
    v.name = j.at("name").get<std::string>();
    v.cfg = SolverConfig{};
    if (j.contains("config")) v.cfg = j["config"].get<SolverConfig>();
    v.continuation = j.value("continuation", false);
    if (j.contains("schedule")) v.schedule = j["schedule"].get<ContinuationSchedule>();
}

void to_json(json& j, const ExperimentSpec& s) {
    j = json{{"generator", s.generator},
             {"taus", s.taus},
             {"variants", s.variants},
             {"tolerances", s.tolerances},
             {"repetitions", s.repetitions},
             {"output_dir", s.output_dir},
             {"write_traces", s.write_traces}};
}

void from_json(const json& j, ExperimentSpec& s) {
    s = ExperimentSpec{};
    s.generator = j.at("generator").get<GeneratorSpec>();
    if (j.contains("taus")) s.taus = j["taus"].get<std::vector<double>>();
    if (j.contains("variants")) {
        s.variants = j["variants"].get<std::vector<VariantSpec>>();
    } else {
        s.variants = standard_variants();
    }
    if (j.contains("tolerances")) s.tolerances = j["tolerances"].get<std::vector<double>>();
    s.repetitions = j.value("repetitions", 1);
    s.output_dir = j.value("output_dir", std::string{});
    s.write_traces = j.value("write_traces", true);
}

}  // namespace sparsa
