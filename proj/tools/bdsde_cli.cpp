/*
   Copyright 2026 The bdsde Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// bdsde: command-line driver for the implicit scheme and its linear oracle.
//
// Exit codes: 0 ok, 2 configuration error, 3 mesh condition violated,
// 4 solver failure, 5 slope outside its window (--strict), 6 oracle not
// certified.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bdsde/bdsde.hpp"

namespace fs = std::filesystem;
using namespace bdsde;

namespace {

enum Exit : int {
    exit_ok = 0,
    exit_config = 2,
    exit_mesh = 3,
    exit_solver = 4,
    exit_slope = 5,
    exit_oracle = 6,
};

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    bool strict = false;
};

RunConfig load(const Options& o)
{
    std::ifstream is(o.config);
    if (!is)
        throw ConfigError("config: cannot open " + o.config);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    auto rc = run_config_from_json(doc);
    if (o.seed)
        override_seed(rc, *o.seed);
    const unsigned th = o.threads ? o.threads : default_thread_count();
    rc.study.threads = th;
    rc.holder.threads = th;
    rc.oracle.threads = th;
    rc.study.oracle.threads = th;
    rc.holder.oracle.threads = th;
    return rc;
}

fs::path sibling(const fs::path& out, const char* suffix)
{
    auto p = out;
    p.replace_extension();
    p += suffix;
    return p;
}

int cmd_solve(const RunConfig& rc, const Options& o, RunManifest& man)
{
    const auto part = build_uniform_partition(rc.solve.n, rc.problem.horizon_T());
    const auto pairing = validate_mesh_condition(part, rc.problem);
    const unsigned th = rc.study.threads;
    const auto bundle = sample_bundle(part, rc.solve.paths, RngSpec{rc.seed}, rc.solve.antithetic, th);
    SampleSolution sol;
    if (rc.scheme.engine == Engine::lsmc)
        sol = solve_lsmc(pairing, bundle, rc.scheme, th);
    else
        sol = solve_pathwise_bundle(PathwiseSolver(pairing, rc.scheme), bundle, th);
    write_file_atomically(o.out, [&](std::ostream& os) { write_solution_csv(os, bundle, sol); });
    man.outputs.push_back(o.out);
    if (!rc.solve.bundle_out.empty()) {
        write_file_atomically(rc.solve.bundle_out, [&](std::ostream& os) { write_bundle(os, bundle); });
        man.outputs.push_back(rc.solve.bundle_out);
    }
    std::printf("solve: n=%zu paths=%zu Y0(path 0)=%s picard_mean=%.3g\n", rc.solve.n, rc.solve.paths,
                format_double(sol.y_at(0, 0)).c_str(), sol.picard.mean_iterations());
    return exit_ok;
}

int cmd_converge(const RunConfig& rc, const Options& o, RunManifest& man)
{
    const auto rep = run_convergence_study(rc.problem, rc.study);
    const auto summary = sibling(o.out, "_summary.csv");
    write_file_atomically(o.out, [&](std::ostream& os) { write_convergence_csv(os, rep); });
    write_file_atomically(summary, [&](std::ostream& os) { write_summary_csv(os, rep); });
    man.outputs.push_back(o.out);
    man.outputs.push_back(summary.string());
    for (const auto& l : rep.levels)
        std::printf("n=%-4zu E|Y err|^p=%.4e (se %.2e)  Z proxy=%.4e (se %.2e)\n", l.n, l.y_error_p, l.y_se,
                    l.z_proxy_p, l.z_se);
    if (rep.y_exact) {
        std::printf("Y: exact (degenerate fit)\n");
    } else if (rep.y_fit) {
        std::printf("Y slope %.4f +- %.4f, window [%.2f, %.2f]: %s\n", rep.y_fit->slope, rep.y_fit->ci_half_width,
                    rep.slope_lo, rep.slope_hi, rep.y_slope_in_window() ? "pass" : "fail");
    }
    if (rep.z_fit)
        std::printf("Z slope %.4f +- %.4f (informational)\n", rep.z_fit->slope, rep.z_fit->ci_half_width);
    if (o.strict && !rep.passed()) {
        man.message = "slope outside window";
        return exit_slope;
    }
    return exit_ok;
}

int cmd_oracle_check(const RunConfig& rc, const Options& o, RunManifest& man)
{
    const auto linear = to_linear_problem(rc.problem);
    const auto rep = certify_closed_form(linear, rc.oracle);
    write_file_atomically(o.out, [&](std::ostream& os) { write_certification_csv(os, rep); });
    man.outputs.push_back(o.out);
    for (const auto& r : rep.rows)
        std::printf("probe %zu t=%.4f closed=%.10g mc=%.10g se=%.3g %s\n", r.id, r.t, r.closed_form,
                    r.mc_estimate, r.standard_error, r.pass ? "ok" : "FAIL");
    if (!rep.passed) {
        man.message = "closed form not certified";
        return exit_oracle;
    }
    return exit_ok;
}

int cmd_holder(const RunConfig& rc, const Options& o, RunManifest& man)
{
    const auto rep = run_holder_study(rc.problem, rc.holder);
    write_file_atomically(o.out, [&](std::ostream& os) { write_holder_csv(os, rep); });
    man.outputs.push_back(o.out);
    for (const auto& t : rep.tables) {
        std::printf("%s/%s:", to_string(t.quantity), to_string(t.source));
        for (const auto& r : t.rows)
            std::printf(" %.4g", r.ratio);
        std::printf("%s\n", t.growth_flag ? "  GROWTH" : "");
    }
    return exit_ok;
}

template <class Fn>
int run(const char* name, const Options& o, Fn&& fn)
{
    RunManifest man;
    man.command = name;
    man.started = utc_timestamp();
    int code = exit_ok;
    std::optional<RunConfig> rc;
    try {
        rc = load(o);
        man.config_digest = config_digest(rc->document);
        man.seed = rc->seed;
        code = fn(*rc, o, man);
    } catch (const ConfigError& e) {
        code = exit_config, man.message = e.what();
    } catch (const MeshTooCoarse& e) {
        code = exit_mesh, man.message = e.what();
    } catch (const UncertifiedOracle& e) {
        code = exit_oracle, man.message = e.what();
    } catch (const InvalidArgument& e) {
        code = exit_config, man.message = e.what();
    } catch (const std::exception& e) {
        code = exit_solver, man.message = e.what();
    }
    man.exit_code = code;
    man.status = code == exit_ok ? "ok" : "error";
    man.finished = utc_timestamp();
    if (!man.message.empty())
        std::fprintf(stderr, "%s: %s\n", name, man.message.c_str());
    try {
        const auto path = sibling(o.out, ".manifest.json");
        write_file_atomically(path, [&](std::ostream& os) { os << man.to_json().dump(2) << '\n'; });
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s: manifest not written: %s\n", name, e.what());
    }
    return code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"bdsde: implicit scheme for backward doubly stochastic SDEs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string);

    Options o;
    auto common = [&](CLI::App* sub, const char* default_out) {
        sub->add_option("--config", o.config, "JSON run configuration")->required();
        sub->add_option("--out", o.out, "output CSV")->default_val(default_out);
        sub->add_option("--seed", o.seed, "override the master seed");
        sub->add_option("--threads", o.threads, "worker threads (0: BDSDE_THREADS or hardware)");
    };
    auto* solve = app.add_subcommand("solve", "solve on sampled paths and write the trajectories");
    common(solve, "solve.csv");
    auto* converge = app.add_subcommand("converge", "error against the closed form over refined partitions");
    common(converge, "converge.csv");
    converge->add_flag("--strict", o.strict, "exit 5 when the Y slope leaves its window");
    auto* oracle = app.add_subcommand("oracle-check", "certify the closed form against Monte Carlo");
    common(oracle, "oracle_check.csv");
    auto* holder = app.add_subcommand("holder", "time-regularity ratios of the exact and discrete solution");
    common(holder, "holder.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    if (solve->parsed())
        return run("solve", o, cmd_solve);
    if (converge->parsed())
        return run("converge", o, cmd_converge);
    if (oracle->parsed())
        return run("oracle-check", o, cmd_oracle_check);
    return run("holder", o, cmd_holder);
}
