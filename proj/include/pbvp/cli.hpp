#pragma once

// Command-line front end. `run_cli` is the whole program; tools/pbvp_cli.cpp only forwards main.
//
// Exit codes: 0 success, 1 bad input, 2 no fixed point, 3 multiple solutions,
// 4 missing capability, 5 rejected check.

#include "pbvp/boundary_solver.hpp"
#include "pbvp/chaos.hpp"
#include "pbvp/io.hpp"
#include "pbvp/law.hpp"
#include "pbvp/linear.hpp"
#include "pbvp/parallel.hpp"
#include "pbvp/problem_spec.hpp"
#include "pbvp/reciprocal.hpp"
#include "pbvp/sensitivity.hpp"
#include "pbvp/skorohod.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace pbvp {

enum ExitCode : int {
    exit_ok = 0,
    exit_bad_input = 1,
    exit_no_fixed_point = 2,
    exit_multiple_solutions = 3,
    exit_capability = 4,
    exit_rejected = 5,
};

struct CliArgs {
    std::string command;
    std::string spec_file;
    std::string path_json;
    std::string out_dir;
    std::uint64_t seed = 1;
    std::size_t paths = 0;
    double t = 0.0;
    std::size_t order = 30;
    unsigned workers = 1;
    int case_id = 0;
    std::size_t permutations = 1000;
    std::size_t points = 101;
    double tol = 0.0;
    double ode_step = 0.0;

    bool has_seed = false, has_paths = false, has_t = false, has_workers = false, has_case = false;
    bool has_tol = false, has_ode_step = false;
};

/// What a command produced: the JSON for stdout, extra files for --out, and its verdict.
struct CommandResult {
    Json summary;
    std::string summary_file;
    std::vector<std::pair<std::string, std::string>> files;
    bool rejected = false;
};

namespace detail {

struct Resolved {
    ProblemSpec spec;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

inline Resolved resolve(const CliArgs& a) {
    Resolved r{load_problem_spec(a.spec_file)};
    if (a.has_tol) r.spec.solver.tol = a.tol;
    if (a.has_ode_step) r.spec.solver.ode_step = a.ode_step;
    if (!(r.spec.solver.tol > 0.0 && r.spec.solver.ode_step > 0.0 && r.spec.solver.ode_step <= 0.5)) {
        throw ArgumentError("--tol must be positive and --ode-step must lie in (0, 0.5]");
    }
    r.seed = a.has_seed ? a.seed : r.spec.mc.seed.value_or(1);
    r.workers = a.has_workers ? a.workers : r.spec.mc.workers.value_or(1);
    return r;
}

inline std::size_t path_count(const CliArgs& a, const Resolved& r, std::size_t fallback) {
    const std::size_t n = a.has_paths ? a.paths : r.spec.mc.n_paths.value_or(fallback);
    if (n == 0) throw ArgumentError("--paths must be positive");
    return n;
}

inline double time_arg(const CliArgs& a, double fallback) {
    const double t = a.has_t ? a.t : fallback;
    if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("--t must lie in [0, 1]");
    return t;
}

inline JumpPath requested_path(const CliArgs& a, std::uint64_t seed) {
    if (a.path_json.empty()) {
        Rng rng(seed, 0);
        return sample_path(rng);
    }
    try {
        return path_from_json(Json::parse(a.path_json));
    } catch (const Json::parse_error& e) {
        throw ArgumentError(std::string("--path is not valid JSON: ") + e.what());
    }
}

inline Trajectory solve_one(const ProblemSpec& spec, const JumpPath& path, bool skorohod) {
    if (skorohod) {
        SkorohodOptions opt;
        opt.solver = spec.solver;
        return solve_skorohod_bvp(spec.f, spec.F, spec.psi, path, opt);
    }
    return solve_bvp(spec.problem(), path);
}

inline CommandResult trajectory_result(const CliArgs& a, bool force_skorohod) {
    const auto r = resolve(a);
    const JumpPath path = requested_path(a, r.seed);
    const bool skorohod = force_skorohod || r.spec.kind == EquationKind::skorohod;
    return {record_to_json(solve_one(r.spec, path, skorohod).record(a.points)), "trajectory.json", {}, false};
}

inline CommandResult cmd_law(const CliArgs& a) {
    const auto r = resolve(a);
    if (r.spec.kind == EquationKind::skorohod) throw CapabilityError("law estimation covers forward and backward problems");
    MonteCarloOptions mc;
    mc.n_paths = path_count(a, r, 100000);
    mc.seed = r.seed;
    mc.workers = r.workers;
    const auto est = estimate_law(r.spec.problem(), time_arg(a, 1.0), mc);
    std::ostringstream csv;
    write_law_samples_csv(csv, est);
    return {law_summary_to_json(est), "law_summary.json", {{"law_samples.csv", csv.str()}}, false};
}

inline constexpr double sensitivity_tolerance = 1e-4;

inline CommandResult cmd_sensitivity(const CliArgs& a) {
    const auto r = resolve(a);
    const auto& s = r.spec;
    if (!(s.f.has_d1() && s.f.has_d2() && s.F.has_d1() && s.F.has_d2() && s.psi.has_derivative())) {
        throw CapabilityError("sensitivities need analytic partials of f, F and psi");
    }
    const std::size_t n = path_count(a, r, 50);
    const std::vector<double> times = {0.0, 0.25, 0.5, 0.75, 1.0};
    const auto p = s.problem();
    std::vector<std::vector<SensitivityRow>> per_path(n);
    parallel_for(n, r.workers, [&](std::size_t i) {
        Rng rng(r.seed, i);
        per_path[i] = sensitivity_rows(p, sample_path(rng), i, times);
    });
    std::vector<SensitivityRow> rows;
    for (auto& block : per_path) rows.insert(rows.end(), block.begin(), block.end());
    double worst = 0.0;
    for (const auto& row : rows) worst = std::max(worst, row.rel_err);
    std::ostringstream csv;
    write_sensitivity_csv(csv, rows);
    Json summary = {{"paths", n},
                    {"rows", rows.size()},
                    {"max_rel_err", worst},
                    {"tolerance", sensitivity_tolerance},
                    {"pass", worst < sensitivity_tolerance}};
    return {summary, "sensitivity_summary.json", {{"sensitivity.csv", csv.str()}}, false};
}

inline StructureReport structure_check(int case_id, const LinearCoefficients& lc, const BoundaryMap& psi,
                                       std::size_t n_paths, std::uint64_t seed, const SolverOptions& opt) {
    switch (case_id) {
    case 1:
    case 2: return degenerate_case_check(case_id, lc, psi, n_paths, seed, 1e-10, opt);
    case 3: return representation_check_case3(lc, psi, n_paths, seed, 1e-8, opt);
    case 4: return representation_check_case4(lc, psi, n_paths, seed, 1e-8, opt);
    case 5: return markov_chain_check_case5(lc, psi, n_paths, seed, 1e-8, opt);
    default: throw ArgumentError("reciprocal cases are numbered 1 to 5");
    }
}

inline CommandResult cmd_reciprocal(const CliArgs& a) {
    const auto r = resolve(a);
    const int case_id = a.has_case ? a.case_id : r.spec.reciprocal_case.value_or(0);
    if (case_id < 1 || case_id > 5) throw ArgumentError("reciprocal needs --case or reciprocal_case in 1..5");
    if (!r.spec.linear || r.spec.kind != EquationKind::forward) {
        throw CapabilityError("the reciprocal check covers forward problems with linear coefficients");
    }
    const std::size_t n = path_count(a, r, 10000);
    const CiTimes times;
    CiOptions opt;
    opt.permutations = a.permutations;
    opt.seed = r.seed;
    opt.workers = r.workers;
    const auto samples = sample_ci_data(r.spec.problem(), times, n, r.seed, r.workers);
    const auto ci = ci_permutation_test(samples, times, opt);
    const auto structure = structure_check(case_id, *r.spec.linear, r.spec.psi, std::min<std::size_t>(n, 2000),
                                           r.seed, r.spec.solver);
    const bool pass = !ci.reject && structure.pass;
    Json summary = {{"case", case_id},
                    {"ci", ci_report_to_json(ci)},
                    {"structure",
                     {{"paths", structure.paths},
                      {"failures", structure.failures},
                      {"max_deviation", structure.max_deviation},
                      {"pass", structure.pass}}},
                    {"pass", pass}};
    return {summary, "reciprocal.json", {}, !pass};
}

inline constexpr double chaos_tolerance = 1e-8;

inline bool is_constant_value(const TimeFunction& g, double v) { return g.is_constant() && *g.fixed == v; }

inline CommandResult cmd_chaos(const CliArgs& a) {
    const auto r = resolve(a);
    const auto& s = r.spec;
    if (!s.linear) throw CapabilityError("chaos expansions are available for linear coefficients only");
    const auto& lc = *s.linear;
    const double t = time_arg(a, 0.5);
    const std::size_t n = path_count(a, r, 1000);

    ChaosSeries series;
    std::function<double(const JumpPath&)> pathwise;
    std::string form;
    const bool case5 = s.kind == EquationKind::forward && is_constant_value(lc.f1, 0.0) &&
                       is_constant_value(lc.F1, 0.0) && is_constant_value(lc.F2, -1.0);
    const bool first_order = s.kind == EquationKind::skorohod && is_constant_value(lc.F2, 0.0) &&
                             (s.psi_type == "affine" || s.psi_type == "constant");
    if (case5) {
        form = "no_jump_indicator";
        const double xstar = solve_linear_bvp(lc, s.psi, JumpPath{}, s.solver).x0();
        series = build_case5_chaos(lc.f2, s.psi(0.0), xstar, t, a.order, s.solver.quad_step);
        pathwise = [&](const JumpPath& w) { return solve_linear_bvp(lc, s.psi, w, s.solver)(t); };
    } else if (first_order) {
        form = "first_order";
        series = build_first_order_chaos(lc.f1, lc.f2, lc.F1, *s.psi.slope_upper, s.psi(0.0), t, s.solver.quad_step);
        pathwise = [&](const JumpPath& w) { return solve_linear_skorohod(lc, s.psi, w, s.solver)(t); };
    } else {
        throw CapabilityError("chaos comparison needs a forward problem with f1 = F1 = 0, F2 = -1, "
                              "or a Skorohod problem with F2 = 0 and affine psi");
    }

    std::vector<double> gap(n, 0.0);
    std::vector<char> used(n, 0);
    parallel_for(n, r.workers, [&](std::size_t i) {
        Rng rng(r.seed, i);
        const JumpPath w = sample_path(rng);
        if (w.contains(t) || w.size() > 12) return;
        used[i] = 1;
        gap[i] = std::abs(eval_chaos(series, w, s.solver.quad_step) - pathwise(w));
    });
    double worst = 0.0;
    std::size_t compared = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!used[i]) continue;
        ++compared;
        worst = std::max(worst, gap[i]);
    }
    const bool flagged = !(series.tail_bound < chaos_tolerance);
    const bool pass = !flagged && worst < chaos_tolerance;
    Json summary = {{"form", form},
                    {"t", t},
                    {"order", series.truncation_order},
                    {"tail_bound", series.tail_bound},
                    {"tail_jumps", series.tail_jumps},
                    {"omegas", n},
                    {"compared", compared},
                    {"max_abs_diff", worst},
                    {"tolerance", chaos_tolerance},
                    {"truncation_flagged", flagged},
                    {"pass", pass}};
    summary["series"] = form == "first_order" ? Json() : chaos_to_json(series);
    return {summary, "chaos.json", {}, !pass};
}

inline void write_file(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw ArgumentError("cannot write " + file.string());
    out << text;
}

inline CommandResult dispatch(const CliArgs& a) {
    if (a.command == "solve") return trajectory_result(a, false);
    if (a.command == "skorohod") return trajectory_result(a, true);
    if (a.command == "law") return cmd_law(a);
    if (a.command == "sensitivity") return cmd_sensitivity(a);
    if (a.command == "reciprocal") return cmd_reciprocal(a);
    if (a.command == "chaos") return cmd_chaos(a);
    throw ArgumentError("unknown command " + a.command);
}

} // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app("Boundary value problems for Poisson-driven equations", "pbvp");
    app.require_subcommand(1);
    CliArgs a;
    const std::vector<std::pair<const char*, const char*>> commands = {
        {"solve", "solve one path and print the trajectory"},
        {"skorohod", "solve the Skorohod problem on one path"},
        {"law", "Monte Carlo law of X_t with its atom"},
        {"sensitivity", "jump-time derivatives against finite differences"},
        {"reciprocal", "conditional independence and structure checks for a reciprocal case"},
        {"chaos", "truncated chaos series against the pathwise solution"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--spec", a.spec_file, "problem spec JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", a.seed, "master seed; path i uses stream i");
        sub->add_option("--paths", a.paths, "number of sampled paths");
        sub->add_option("--t", a.t, "time in [0, 1]");
        sub->add_option("--order", a.order, "chaos truncation order");
        sub->add_option("--workers", a.workers, "worker threads (0 = hardware)");
        sub->add_option("--out", a.out_dir, "directory for JSON and CSV outputs");
        sub->add_option("--path", a.path_json, "jump times as a JSON array, e.g. [0.3, 0.7]");
        sub->add_option("--case", a.case_id, "reciprocal case 1..5");
        sub->add_option("--permutations", a.permutations, "permutations per cell");
        sub->add_option("--points", a.points, "trajectory grid points");
        sub->add_option("--tol", a.tol, "fixed-point tolerance");
        sub->add_option("--ode-step", a.ode_step, "RK4 step");
        sub->callback([&a, sub, name = std::string(name)] {
            a.command = name;
            a.has_seed = sub->count("--seed") > 0;
            a.has_paths = sub->count("--paths") > 0;
            a.has_t = sub->count("--t") > 0;
            a.has_workers = sub->count("--workers") > 0;
            a.has_case = sub->count("--case") > 0;
            a.has_tol = sub->count("--tol") > 0;
            a.has_ode_step = sub->count("--ode-step") > 0;
        });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_bad_input;
    }

    auto fail = [&err](int code, const char* kind, const std::exception& e) {
        err << "pbvp: " << kind << ": " << e.what() << "\n";
        return code;
    };
    try {
        const auto result = detail::dispatch(a);
        const std::string text = pretty(result.summary);
        out << text;
        if (!a.out_dir.empty()) {
            const std::filesystem::path dir(a.out_dir);
            std::filesystem::create_directories(dir);
            detail::write_file(dir / result.summary_file, text);
            for (const auto& [name, body] : result.files) detail::write_file(dir / name, body);
        }
        return result.rejected ? exit_rejected : exit_ok;
    } catch (const NoFixedPoint& e) {
        return fail(exit_no_fixed_point, "no fixed point", e);
    } catch (const MultipleSolutions& e) {
        return fail(exit_multiple_solutions, "multiple solutions", e);
    } catch (const CapabilityError& e) {
        return fail(exit_capability, "capability", e);
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(exit_bad_input, "file system", e);
    } catch (const std::exception& e) {
        return fail(exit_bad_input, "error", e);
    }
}

} // namespace pbvp
