// sparsa: command-line front end.
//
//   sparsa generate --spec gen.json --out DIR
//   sparsa solve    --spec gen.json | --matrix A.f64 --rhs b.csv --tau T  [options]
//   sparsa bench    --spec exp.json [--out DIR] | --replay manifest.json
//   sparsa rates    --trace t.csv --phi-star V
//   sparsa curve    --trace t.csv --phi-star V --out curve.csv
//   sparsa --print-config

#include "sparsa/continuation.hpp"
#include "sparsa/harness.hpp"
#include "sparsa/io.hpp"
#include "sparsa/problems.hpp"
#include "sparsa/serialization.hpp"
#include "sparsa/solver.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

using namespace sparsa;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json default_configs() {
    json gens = json::object();
    for (auto f : {Family::bpdn, Family::group, Family::deblur, Family::tv_phantom})
        gens[std::string(to_string(f))] = GeneratorSpec::defaults(f);
    ExperimentSpec exp;
    exp.generator = GeneratorSpec::defaults(Family::bpdn);
    exp.taus = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    exp.variants = standard_variants();
    return json{{"solver", SolverConfig{}},
                {"continuation", ContinuationSchedule{}},
                {"generator", gens},
                {"experiment", exp}};
}

SolverConfig load_config(const std::string& path) {
    return path.empty() ? SolverConfig{} : read_json_file(path).get<SolverConfig>();
}

Matrix load_matrix(const fs::path& p) {
    return p.extension() == ".csv" ? read_csv_matrix(p) : read_raw_matrix(p);
}

struct SolveArgs {
    std::string spec, matrix, rhs, x1, groups, config, schedule;
    std::string trace, summary, x_out;
    std::optional<double> tau;
    bool continuation = false;
};

LeastSquaresProblem load_problem(const SolveArgs& a) {
    if (!a.spec.empty()) {
        auto p = generate(read_json_file(a.spec).get<GeneratorSpec>());
        return a.tau ? p.with_tau(*a.tau) : p;
    }
    if (a.matrix.empty() || a.rhs.empty()) throw CLI::ValidationError("solve", "need --spec or --matrix and --rhs");
    LeastSquaresProblem p;
    p.op = make_dense(load_matrix(a.matrix));
    p.b = std::make_shared<const Vector>(read_csv_vector(a.rhs));
    if (p.b->size() != p.op->range_dim()) throw std::invalid_argument("rhs length does not match the matrix");
    p.x1 = a.x1.empty() ? Vector::Zero(p.op->domain_dim()) : read_csv_vector(a.x1);
    Vector atb = p.op->adjoint(*p.b);
    p.op->reset_counts();
    p.atb_inf = atb.lpNorm<Eigen::Infinity>();
    const double tau = a.tau.value_or(0.0);
    p.regularizer = a.groups.empty() ? Regularizer::l1(tau) : Regularizer::group_l2(tau, read_groups_json(a.groups));
    return p;
}

int cmd_solve(const SolveArgs& a) {
    const auto p = load_problem(a);
    const auto cfg = load_config(a.config);

    SolveResult res;
    json stages;
    if (a.continuation) {
        ContinuationSchedule s = a.schedule.empty() ? ContinuationSchedule{}
                                                    : read_json_file(a.schedule).get<ContinuationSchedule>();
        s.tau_target = p.regularizer.tau();
        auto c = solve_with_continuation(p, s, cfg);
        res.x = std::move(c.x);
        res.trace = std::move(c.trace);
        res.status = c.status;
        res.matvecs = c.matvecs;
        res.wall_time = c.wall_time;
        stages = c.stages;
    } else {
        auto f = p.objective();
        res = solve(f, p.regularizer, p.x1, cfg);
    }

    std::optional<double> residual;
    if (p.regularizer.kind() != RegularizerKind::tv_iso) {
        auto f = p.objective();
        residual = stationarity_residual(res.x, f, p.regularizer);
    }
    json summary = solve_summary(res, residual);
    summary["tau"] = p.regularizer.tau();
    if (!stages.is_null()) summary["stages"] = stages;

    if (!a.trace.empty()) write_trace_csv(a.trace, res.trace);
    if (!a.x_out.empty()) write_csv_vector(a.x_out, res.x);
    if (!a.summary.empty()) write_json_file(a.summary, summary);
    std::cout << summary.dump(2) << '\n';
    return 0;
}

void print_table(const std::vector<TableRow>& table) {
    std::printf("%-12s %10s %10s %5s %5s %14s %14s %16s\n", "variant", "tau", "eps", "runs", "fail", "mean_matvecs",
                "median", "mean_final_obj");
    for (const auto& r : table) {
        std::printf("%-12s %10.3g %10.3g %5d %5d %14.1f %14.1f %16.9g\n", r.variant.c_str(), r.tau, r.eps, r.runs,
                    r.failures, r.mean_matvecs, r.median_matvecs, r.mean_final_obj);
    }
}

int cmd_bench(const std::string& spec_path, const std::string& out, const std::string& replay) {
    if (!replay.empty()) {
        const auto stored = read_json_file(replay);
        auto spec = stored.at("spec").get<ExperimentSpec>();
        spec.output_dir = out;
        const auto r = run_experiment(spec);
        print_table(r.table);
        const bool same = manifests_replay_identical(stored, r.manifest);
        std::cout << (same ? "replay identical\n" : "replay DIFFERS\n");
        return same ? 0 : 1;
    }
    if (spec_path.empty()) throw CLI::ValidationError("bench", "need --spec or --replay");
    auto spec = read_json_file(spec_path).get<ExperimentSpec>();
    if (!out.empty()) spec.output_dir = out;
    const auto r = run_experiment(spec);
    print_table(r.table);
    int failures = 0;
    for (const auto& row : r.table) failures += row.failures;
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SpaRSA solvers and benchmarks"};
    app.require_subcommand(0, 1);
    bool print_config = false;
    app.add_flag("--print-config", print_config, "Print all default configurations as JSON");

    auto* gen = app.add_subcommand("generate", "Generate a problem instance and write it to disk");
    std::string gen_spec, gen_out;
    gen->add_option("--spec", gen_spec, "GeneratorSpec JSON")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", gen_out, "Output directory")->required();

    auto* sol = app.add_subcommand("solve", "Solve one problem");
    SolveArgs sa;
    sol->add_option("--spec", sa.spec, "GeneratorSpec JSON")->check(CLI::ExistingFile);
    sol->add_option("--matrix", sa.matrix, "A as raw .f64 (with sidecar) or .csv")->check(CLI::ExistingFile);
    sol->add_option("--rhs", sa.rhs, "b as CSV")->check(CLI::ExistingFile);
    sol->add_option("--x1", sa.x1, "Starting point as CSV (default 0)")->check(CLI::ExistingFile);
    sol->add_option("--groups", sa.groups, "Group partition JSON; selects the group-l2 regularizer")
        ->check(CLI::ExistingFile);
    sol->add_option("--tau", sa.tau, "Regularization weight (overrides the spec)");
    sol->add_option("--config", sa.config, "SolverConfig JSON")->check(CLI::ExistingFile);
    sol->add_flag("--continuation", sa.continuation, "Solve through a decreasing tau schedule");
    sol->add_option("--schedule", sa.schedule, "ContinuationSchedule JSON")->check(CLI::ExistingFile);
    sol->add_option("--trace", sa.trace, "Write the iteration trace CSV");
    sol->add_option("--summary", sa.summary, "Write the summary JSON");
    sol->add_option("--x-out", sa.x_out, "Write the final iterate CSV");

    auto* bench = app.add_subcommand("bench", "Run an experiment grid");
    std::string bench_spec, bench_out, bench_replay;
    bench->add_option("--spec", bench_spec, "ExperimentSpec JSON")->check(CLI::ExistingFile);
    bench->add_option("--out", bench_out, "Output directory for table, manifest and traces");
    bench->add_option("--replay", bench_replay, "Rerun a stored manifest and compare")->check(CLI::ExistingFile);

    auto* rates = app.add_subcommand("rates", "Fit convergence rates to a trace");
    std::string rates_trace;
    double rates_phi = 0.0;
    std::optional<std::size_t> burn_in;
    rates->add_option("--trace", rates_trace, "Trace CSV")->required()->check(CLI::ExistingFile);
    rates->add_option("--phi-star", rates_phi, "Optimal objective value")->required();
    rates->add_option("--burn-in", burn_in, "Leading errors to skip (default 20%)");

    auto* curve = app.add_subcommand("curve", "Error versus matvec curve of a trace");
    std::string curve_trace, curve_out;
    double curve_phi = 0.0;
    curve->add_option("--trace", curve_trace, "Trace CSV")->required()->check(CLI::ExistingFile);
    curve->add_option("--phi-star", curve_phi, "Optimal objective value")->required();
    curve->add_option("--out", curve_out, "Output CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (print_config) {
            std::cout << default_configs().dump(2) << '\n';
            return 0;
        }
        if (*gen) {
            const auto spec = read_json_file(gen_spec).get<GeneratorSpec>();
            const auto p = generate(spec);
            export_problem(p, gen_out);
            write_json_file(fs::path(gen_out) / "generator.json", spec);
            if (!p.regularizer.groups().empty()) {
                json g = json::array();
                for (const auto& grp : p.regularizer.groups()) g.push_back(grp);
                write_json_file(fs::path(gen_out) / "groups.json", g);
            }
            std::cout << "wrote " << gen_out << " (tau " << p.regularizer.tau() << ")\n";
            return 0;
        }
        if (*sol) return cmd_solve(sa);
        if (*bench) return cmd_bench(bench_spec, bench_out, bench_replay);
        if (*rates) {
            const auto fit = fit_rates(read_trace_csv(rates_trace), rates_phi, burn_in);
            std::cout << json{{"theta_hat", fit.theta_hat}, {"c_hat", fit.c_hat},     {"a_hat", fit.a_hat},
                              {"b_hat", fit.b_hat},         {"burn_in", fit.burn_in}, {"residual_r2", fit.residual_r2},
                              {"sublinear_ok", fit.sublinear_ok}}
                             .dump(2)
                      << '\n';
            return 0;
        }
        if (*curve) {
            const auto c = error_vs_matvec_curve(read_trace_csv(curve_trace), curve_phi);
            if (!curve_out.empty()) {
                write_curve_csv(curve_out, c);
            } else {
                std::cout << "matvecs,error\n";
                for (const auto& pt : c) std::cout << pt.matvecs << ',' << pt.error << '\n';
            }
            return 0;
        }
        std::cout << app.help();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
