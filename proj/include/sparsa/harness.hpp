#pragma once

#include "sparsa/continuation.hpp"
#include "sparsa/problems.hpp"
#include "sparsa/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sparsa {

/// Fit of 1/e_k = (b + k)/a. Iterations are numbered from 1, so errors[i]
/// belongs to k = i + 1.
struct SublinearFit {
    double a_hat = 0.0;
    double b_hat = 0.0;
    double slope = 0.0;
    /// slope > 0 and every consecutive increment of 1/e_k is >= -1e-9.
    bool ok = false;
    double min_increment = 0.0;
    std::size_t samples = 0;
};

/// Fit of log e_k = log c + k log theta.
struct LinearFit {
    double theta_hat = 1.0;
    double c_hat = 0.0;
    double r2 = 0.0;
    std::size_t samples = 0;
};

/// Both envelopes for one trace.
struct RateFit {
    double theta_hat = 1.0;
    double c_hat = 0.0;
    double a_hat = 0.0;
    double b_hat = 0.0;
    std::size_t burn_in = 0;
    double residual_r2 = 0.0;
    bool sublinear_ok = false;
};

/// Both fits skip the first `burn_in` entries and any e_k <= 0. Throw
/// std::invalid_argument when fewer than 5 samples remain.
SublinearFit fit_sublinear(std::span<const double> errors, std::size_t burn_in);
LinearFit fit_linear(std::span<const double> errors, std::size_t burn_in);

/// First 20% of the samples.
std::size_t default_burn_in(std::size_t n);

/// phi(x_k) - phi_star for k = 1..K+1 (the last entry is the final objective).
std::vector<double> objective_errors(const Trace& trace, double phi_star);

RateFit fit_rates(const Trace& trace, double phi_star, std::optional<std::size_t> burn_in = {});

struct CurvePoint {
    std::uint64_t matvecs = 0;
    double error = 0.0;
};

/// (cumulative products after iteration k, phi(x_{k+1}) - phi_star).
/// Throws std::invalid_argument if phi_star exceeds the smallest objective in
/// the trace by more than 1e-9.
std::vector<CurvePoint> error_vs_matvec_curve(const Trace& trace, double phi_star);
void write_curve_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& curve);

struct VariantSpec {
    std::string name;
    SolverConfig cfg;
    bool continuation = false;
    ContinuationSchedule schedule;  // tau_target is filled per cell
};

/// The four variants of the l2-l1 table: GLL with plain BB, adaptive
/// reference with cyclic BB, and both with continuation.
std::vector<VariantSpec> standard_variants();

struct ExperimentSpec {
    GeneratorSpec generator;
    /// Regularization weights to sweep; empty means the generator's own tau.
    std::vector<double> taus;
    std::vector<VariantSpec> variants;
    std::vector<double> tolerances{1e-5};
    int repetitions = 1;
    /// Empty: nothing is written.
    std::string output_dir;
    bool write_traces = true;
};

struct RunRecord {
    std::string variant;
    double tau = 0.0;
    double eps = 0.0;
    int repetition = 0;
    std::uint64_t seed = 0;
    std::string status;  // solver status, or "error"
    std::string error;
    int iters = 0;
    std::uint64_t matvecs = 0;
    double final_obj = 0.0;
    double wall_time = 0.0;
};

struct TableRow {
    std::string variant;
    double tau = 0.0;
    double eps = 0.0;
    int runs = 0;
    int failures = 0;
    double mean_matvecs = 0.0;
    double median_matvecs = 0.0;
    double mean_wall_time = 0.0;
    double mean_final_obj = 0.0;
};

struct ExperimentResult {
    std::vector<RunRecord> runs;
    std::vector<TableRow> table;
    nlohmann::json manifest;
};

/// repetitions x taus x variants x tolerances solves. All variants of one
/// repetition see the same problem (seed = generator.seed + repetition).
/// A failing solve is recorded in the manifest; other cells still run.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Compares every deterministic field of two manifests (wall times and the
/// output directory excluded).
bool manifests_replay_identical(const nlohmann::json& a, const nlohmann::json& b);

void write_table_csv(const std::filesystem::path& path, const std::vector<TableRow>& table);

void to_json(nlohmann::json& j, const VariantSpec& v);
void from_json(const nlohmann::json& j, VariantSpec& v);
void to_json(nlohmann::json& j, const ExperimentSpec& s);
void from_json(const nlohmann::json& j, ExperimentSpec& s);

}  // namespace sparsa
