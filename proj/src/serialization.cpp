#include "sparsa/serialization.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace sparsa {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* what) {
    if (!j.is_object()) throw std::invalid_argument(std::string(what) + ": expected a JSON object");
    std::set<std::string> allowed(known.begin(), known.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.contains(it.key())) {
            throw std::invalid_argument(std::string(what) + ": unknown key '" + it.key() + "'");
        }
    }
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

void to_json(json& j, const SolverConfig& c) {
    j = json{{"eta", c.eta},
             {"sigma", c.sigma},
             {"alpha_min", c.alpha_min},
             {"alpha_max", c.alpha_max},
             {"memory_M", c.memory_M},
             {"cycle_m", c.cycle_m},
             {"ref_policy", std::string(to_string(c.ref_policy))},
             {"adapt_L", c.adapt_L},
             {"adapt_Delta", c.adapt_Delta},
             {"eps", c.eps},
             {"max_iters", c.max_iters},
             {"max_backtracks", c.max_backtracks},
             {"initial_alpha", c.initial_alpha}};
}

void from_json(const json& j, SolverConfig& c) {
    reject_unknown(j,
                   {"eta", "sigma", "alpha_min", "alpha_max", "memory_M", "cycle_m", "ref_policy",
                    "adapt_L", "adapt_Delta", "eps", "max_iters", "max_backtracks", "initial_alpha"},
                   "solver config");
    read_opt(j, "eta", c.eta);
    read_opt(j, "sigma", c.sigma);
    read_opt(j, "alpha_min", c.alpha_min);
    read_opt(j, "alpha_max", c.alpha_max);
    read_opt(j, "memory_M", c.memory_M);
    read_opt(j, "cycle_m", c.cycle_m);
    if (j.contains("ref_policy")) c.ref_policy = reference_policy_from_string(j["ref_policy"].get<std::string>());
    read_opt(j, "adapt_L", c.adapt_L);
    read_opt(j, "adapt_Delta", c.adapt_Delta);
    read_opt(j, "eps", c.eps);
    read_opt(j, "max_iters", c.max_iters);
    read_opt(j, "max_backtracks", c.max_backtracks);
    read_opt(j, "initial_alpha", c.initial_alpha);
}

void to_json(json& j, const GeneratorSpec& s) {
    j = json{{"family", std::string(to_string(s.family))},
             {"seed", s.seed},
             {"tau", s.tau},
             {"tau_rule", s.tau_rule == TauRule::absolute ? "absolute" : "relative_atb"}};
    switch (s.family) {
        case Family::bpdn:
            j.update({{"k", s.k}, {"n", s.n}, {"spikes", s.spikes}, {"noise_variance", s.noise_variance}});
            break;
        case Family::group:
            j.update({{"k", s.k},
                      {"num_groups", s.num_groups},
                      {"group_len", s.group_len},
                      {"active_groups", s.active_groups},
                      {"noise_variance", s.noise_variance}});
            break;
        case Family::deblur:
            j.update({{"rows", s.rows},
                      {"cols", s.cols},
                      {"mask_size", s.mask_size},
                      {"levels", s.levels},
                      {"noise_std", s.noise_std},
                      {"image_path", s.image_path}});
            break;
        case Family::tv_phantom:
            j.update({{"rows", s.rows},
                      {"cols", s.cols},
                      {"num_lines", s.num_lines},
                      {"noise_std", s.noise_std},
                      {"sampling_ratio", s.sampling_ratio}});
            break;
    }
}

void from_json(const json& j, GeneratorSpec& s) {
    reject_unknown(j,
                   {"family", "seed", "tau", "tau_rule", "k", "n", "spikes", "noise_variance",
                    "num_groups", "group_len", "active_groups", "rows", "cols", "mask_size", "levels",
                    "noise_std", "image_path", "num_lines", "sampling_ratio"},
                   "generator spec");
    s = GeneratorSpec::defaults(family_from_string(j.at("family").get<std::string>()));
    read_opt(j, "seed", s.seed);
    read_opt(j, "tau", s.tau);
    if (j.contains("tau_rule")) {
        const auto rule = j["tau_rule"].get<std::string>();
        if (rule == "absolute") s.tau_rule = TauRule::absolute;
        else if (rule == "relative_atb") s.tau_rule = TauRule::relative_atb;
        else throw std::invalid_argument("generator spec: unknown tau_rule '" + rule + "'");
    }
    read_opt(j, "k", s.k);
    read_opt(j, "n", s.n);
    read_opt(j, "spikes", s.spikes);
    read_opt(j, "noise_variance", s.noise_variance);
    read_opt(j, "num_groups", s.num_groups);
    read_opt(j, "group_len", s.group_len);
    read_opt(j, "active_groups", s.active_groups);
    read_opt(j, "rows", s.rows);
    read_opt(j, "cols", s.cols);
    read_opt(j, "mask_size", s.mask_size);
    read_opt(j, "levels", s.levels);
    read_opt(j, "noise_std", s.noise_std);
    read_opt(j, "image_path", s.image_path);
    read_opt(j, "num_lines", s.num_lines);
    read_opt(j, "sampling_ratio", s.sampling_ratio);
}

void to_json(json& j, const ContinuationSchedule& s) {
    j = json{{"tau_target", s.tau_target},
             {"xi", s.xi},
             {"decrease_factor", s.decrease_factor},
             {"inner_eps", s.inner_eps}};
}

void from_json(const json& j, ContinuationSchedule& s) {
    reject_unknown(j, {"tau_target", "xi", "decrease_factor", "inner_eps"}, "continuation schedule");
    read_opt(j, "tau_target", s.tau_target);
    read_opt(j, "xi", s.xi);
    read_opt(j, "decrease_factor", s.decrease_factor);
    read_opt(j, "inner_eps", s.inner_eps);
}

void to_json(json& j, const StageSummary& s) {
    j = json{{"tau", s.tau},
             {"iters", s.iters},
             {"matvecs", s.matvecs},
             {"status", std::string(to_string(s.status))}};
}

std::vector<Group> groups_from_json(const json& j) {
    if (!j.is_array()) throw std::invalid_argument("group partition: expected an array of index arrays");
    auto groups = j.get<std::vector<Group>>();
    // Validates disjointness and coverage.
    (void)Regularizer::group_l2(0.0, groups);
    return groups;
}

std::vector<Group> read_groups_json(const std::filesystem::path& path) {
    return groups_from_json(read_json_file(path));
}

json solve_summary(const SolveResult& r, std::optional<double> final_residual) {
    json j{{"status", std::string(to_string(r.status))},
           {"iters", r.trace.records.size()},
           {"matvecs", r.matvecs.total()},
           {"final_obj", r.trace.final_obj},
           {"wall_time", r.wall_time}};
    j["final_residual"] = final_residual ? json(*final_residual) : json(nullptr);
    return j;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return json::parse(in);
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace sparsa
