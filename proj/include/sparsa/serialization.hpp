#pragma once

#include "sparsa/continuation.hpp"
#include "sparsa/problems.hpp"
#include "sparsa/solver.hpp"

#include <json.hpp>

#include <filesystem>

// JSON bindings. Missing keys keep their defaults, so partial config files
// are accepted; unknown keys are rejected to catch typos.
namespace sparsa {

void to_json(nlohmann::json& j, const SolverConfig& c);
void from_json(const nlohmann::json& j, SolverConfig& c);

/// Unset fields take GeneratorSpec::defaults(family).
void to_json(nlohmann::json& j, const GeneratorSpec& s);
void from_json(const nlohmann::json& j, GeneratorSpec& s);

void to_json(nlohmann::json& j, const ContinuationSchedule& s);
void from_json(const nlohmann::json& j, ContinuationSchedule& s);

void to_json(nlohmann::json& j, const StageSummary& s);

/// Group partition as a list of index arrays. Validated as a partition.
std::vector<Group> read_groups_json(const std::filesystem::path& path);
std::vector<Group> groups_from_json(const nlohmann::json& j);

/// {status, iters, matvecs, final_obj, final_residual, wall_time}; the
/// residual is null when unavailable (tv-iso).
nlohmann::json solve_summary(const SolveResult& r, std::optional<double> final_residual);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace sparsa
