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

#pragma once

/// \file config.hpp
/// JSON documents: ProblemSpec descriptors and the run configuration read by
/// the command-line tool. Unknown keys are rejected so that typos surface as
/// errors naming the offending field.

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bdsde/analysis.hpp"
#include "bdsde/core.hpp"
#include "bdsde/errors.hpp"
#include "bdsde/oracle.hpp"
#include "bdsde/scheme.hpp"

namespace bdsde {

using json = nlohmann::json;

/// Malformed configuration; the message starts with the dotted field path.
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

namespace detail {

inline void check_keys(const json& j, const std::string& where,
                       std::initializer_list<const char*> allowed)
{
    if (!j.is_object())
        throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            ok = ok || key == a;
        if (!ok)
            throw ConfigError(where + "." + key + ": unknown key");
    }
}

template <class T>
T get(const json& j, const std::string& where, const char* key)
{
    if (!j.contains(key))
        throw ConfigError(where + "." + key + ": missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

template <class T>
T get_or(const json& j, const std::string& where, const char* key, T fallback)
{
    if (!j.contains(key))
        return fallback;
    return get<T>(j, where, key);
}

inline std::pair<std::string, json> descriptor(const json& j, const std::string& where)
{
    check_keys(j, where, {"family", "params"});
    auto family = get<std::string>(j, where, "family");
    json params = j.contains("params") ? j.at("params") : json::object();
    if (!params.is_object())
        throw ConfigError(where + ".params: expected an object");
    return {family, params};
}

}  // namespace detail

inline TimeFunction time_function_from_json(const json& j, const std::string& where)
{
    using namespace detail;
    const auto [family, p] = descriptor(j, where);
    const std::string pw = where + ".params";
    if (family == "constant") {
        check_keys(p, pw, {"value"});
        return TimeFunction::constant(get_or(p, pw, "value", 0.0));
    }
    if (family == "affine") {
        check_keys(p, pw, {"a", "b"});
        return TimeFunction::affine(get_or(p, pw, "a", 0.0), get_or(p, pw, "b", 0.0));
    }
    if (family == "sine") {
        check_keys(p, pw, {"amplitude", "omega"});
        return TimeFunction::sine(get<double>(p, pw, "amplitude"), get<double>(p, pw, "omega"));
    }
    throw ConfigError(where + ".family: unknown schedule family '" + family + "'");
}

inline Terminal terminal_from_json(const json& j, const std::string& where)
{
    using namespace detail;
    const auto [family, p] = descriptor(j, where);
    const std::string pw = where + ".params";
    if (family == "identity") {
        check_keys(p, pw, {});
        return terminal::Identity{};
    }
    if (family == "constant") {
        check_keys(p, pw, {"value"});
        return terminal::Constant{get<double>(p, pw, "value")};
    }
    if (family == "exp") {
        check_keys(p, pw, {"rate"});
        return terminal::Exp{get<double>(p, pw, "rate")};
    }
    if (family == "call") {
        check_keys(p, pw, {"strike"});
        return terminal::Call{get<double>(p, pw, "strike")};
    }
    throw ConfigError(where + ".family: unknown terminal family '" + family + "'");
}

inline Generator generator_from_json(const json& j, const std::string& where)
{
    using namespace detail;
    const auto [family, p] = descriptor(j, where);
    const std::string pw = where + ".params";
    if (family == "zero") {
        check_keys(p, pw, {});
        return generator::Zero{};
    }
    if (family == "linear") {
        check_keys(p, pw, {"alpha", "beta", "forcing"});
        generator::Linear g{get_or(p, pw, "alpha", 0.0), get_or(p, pw, "beta", 0.0), {}};
        if (p.contains("forcing"))
            g.forcing = time_function_from_json(p.at("forcing"), pw + ".forcing");
        return g;
    }
    if (family == "sin_linear") {
        check_keys(p, pw, {"alpha", "beta", "amplitude"});
        return generator::SinLinear{get_or(p, pw, "alpha", 0.0), get_or(p, pw, "beta", 0.0),
                                    get<double>(p, pw, "amplitude")};
    }
    throw ConfigError(where + ".family: unknown generator family '" + family + "'");
}

inline BackwardCoeff backward_from_json(const json& j, const std::string& where)
{
    using namespace detail;
    const auto [family, p] = descriptor(j, where);
    const std::string pw = where + ".params";
    if (family == "zero") {
        check_keys(p, pw, {});
        return backward::Zero{};
    }
    if (family == "constant") {
        check_keys(p, pw, {"value"});
        return backward::Constant{get<double>(p, pw, "value")};
    }
    if (family == "linear") {
        check_keys(p, pw, {"gamma"});
        return backward::Linear{get<double>(p, pw, "gamma")};
    }
    if (family == "sin") {
        check_keys(p, pw, {"amplitude"});
        return backward::Sin{get<double>(p, pw, "amplitude")};
    }
    throw ConfigError(where + ".family: unknown backward_coeff family '" + family + "'");
}

/// ProblemSpec from {terminal, generator, backward_coeff, lipschitz_L,
/// time_lipschitz_L1, horizon_T}.
inline ProblemSpec problem_from_json(const json& j, const std::string& where = "problem")
{
    using namespace detail;
    check_keys(j, where,
               {"terminal", "generator", "backward_coeff", "lipschitz_L", "time_lipschitz_L1", "horizon_T"});
    for (const char* k : {"terminal", "generator", "backward_coeff"})
        if (!j.contains(k))
            throw ConfigError(where + "." + k + ": missing");
    try {
        return ProblemSpec(terminal_from_json(j.at("terminal"), where + ".terminal"),
                           generator_from_json(j.at("generator"), where + ".generator"),
                           backward_from_json(j.at("backward_coeff"), where + ".backward_coeff"),
                           get<double>(j, where, "lipschitz_L"),
                           get_or(j, where, "time_lipschitz_L1", 0.0),
                           get<double>(j, where, "horizon_T"));
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(where + "." + e.what());
    }
}

inline SchemeConfig scheme_from_json(const json& j, const std::string& where = "scheme")
{
    using namespace detail;
    check_keys(j, where,
               {"engine", "picard_tolerance", "picard_max_iterations", "quadrature_nodes", "grid",
                "interpolation", "lsmc_degree", "terminal_perturbation"});
    SchemeConfig c;
    const auto engine = get_or<std::string>(j, where, "engine", "pathwise");
    if (engine == "pathwise")
        c.engine = Engine::pathwise;
    else if (engine == "lsmc")
        c.engine = Engine::lsmc;
    else
        throw ConfigError(where + ".engine: expected 'pathwise' or 'lsmc'");
    c.picard_tolerance = get_or(j, where, "picard_tolerance", c.picard_tolerance);
    c.picard_max_iterations = get_or(j, where, "picard_max_iterations", c.picard_max_iterations);
    c.quadrature_nodes = get_or(j, where, "quadrature_nodes", c.quadrature_nodes);
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        check_keys(g, where + ".grid", {"nodes", "kappa"});
        c.grid.nodes = get_or(g, where + ".grid", "nodes", c.grid.nodes);
        c.grid.kappa = get_or(g, where + ".grid", "kappa", c.grid.kappa);
    }
    const auto interp = get_or<std::string>(j, where, "interpolation", "cubic");
    if (interp == "cubic")
        c.interpolation = Interpolation::cubic;
    else if (interp == "linear")
        c.interpolation = Interpolation::linear;
    else
        throw ConfigError(where + ".interpolation: expected 'cubic' or 'linear'");
    c.lsmc_degree = get_or(j, where, "lsmc_degree", c.lsmc_degree);
    c.terminal_perturbation = get_or(j, where, "terminal_perturbation", c.terminal_perturbation);
    try {
        c.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(where + "." + e.what());
    }
    return c;
}

inline CertificationOptions oracle_from_json(const json& j, const std::string& where = "oracle")
{
    using namespace detail;
    check_keys(j, where, {"probes", "samples", "segment_cells", "sigma_tolerance", "closed_form_bias"});
    CertificationOptions o;
    o.probes = get_or(j, where, "probes", o.probes);
    o.samples = get_or(j, where, "samples", o.samples);
    o.segment_cells = get_or(j, where, "segment_cells", o.segment_cells);
    o.sigma_tolerance = get_or(j, where, "sigma_tolerance", o.sigma_tolerance);
    o.closed_form_scale = 1.0 + get_or(j, where, "closed_form_bias", 0.0);
    if (o.probes == 0)
        throw ConfigError(where + ".probes: must be positive");
    if (o.samples < 100)
        throw ConfigError(where + ".samples: need at least 100");
    if (o.segment_cells == 0)
        throw ConfigError(where + ".segment_cells: must be positive");
    return o;
}

struct SolveSection {
    std::size_t n = 16;
    std::size_t paths = 100;
    bool antithetic = false;
    /// optional binary dump of the sampled increments
    std::string bundle_out;
};

/// Everything one CLI invocation needs.
struct RunConfig {
    json document;
    ProblemSpec problem;
    SchemeConfig scheme;
    SolveSection solve;
    StudyConfig study;
    HolderConfig holder;
    CertificationOptions oracle;
    std::uint64_t seed = 1;
};

inline RunConfig run_config_from_json(const json& doc)
{
    using namespace detail;
    check_keys(doc, "config", {"problem", "scheme", "solve", "study", "holder", "oracle", "seed"});
    if (!doc.contains("problem"))
        throw ConfigError("config.problem: missing");
    RunConfig rc{doc, problem_from_json(doc.at("problem")), {}, {}, {}, {}, {}, 1};
    rc.seed = get_or<std::uint64_t>(doc, "config", "seed", 1);
    if (doc.contains("scheme"))
        rc.scheme = scheme_from_json(doc.at("scheme"));
    if (doc.contains("oracle"))
        rc.oracle = oracle_from_json(doc.at("oracle"));
    rc.oracle.seed = rc.seed ^ 0x5bd1e995ull;

    if (doc.contains("solve")) {
        const auto& s = doc.at("solve");
        check_keys(s, "solve", {"n", "paths", "antithetic", "bundle_out"});
        rc.solve.n = get_or(s, "solve", "n", rc.solve.n);
        rc.solve.paths = get_or(s, "solve", "paths", rc.solve.paths);
        rc.solve.antithetic = get_or(s, "solve", "antithetic", rc.solve.antithetic);
        rc.solve.bundle_out = get_or(s, "solve", "bundle_out", rc.solve.bundle_out);
        if (rc.solve.n == 0)
            throw ConfigError("solve.n: must be positive");
        if (rc.solve.paths == 0)
            throw ConfigError("solve.paths: must be positive");
    }

    rc.study.scheme = rc.scheme;
    rc.study.seed = rc.seed;
    rc.study.oracle = rc.oracle;
    if (doc.contains("study")) {
        const auto& s = doc.at("study");
        check_keys(s, "study",
                   {"partition_sizes", "b_paths", "w_paths_per_b", "p_exp", "crn", "slope_window", "exact_floor"});
        rc.study.partition_sizes = get_or(s, "study", "partition_sizes", rc.study.partition_sizes);
        rc.study.b_paths = get_or(s, "study", "b_paths", rc.study.b_paths);
        rc.study.w_paths_per_b = get_or(s, "study", "w_paths_per_b", rc.study.w_paths_per_b);
        rc.study.p_exp = get_or(s, "study", "p_exp", rc.study.p_exp);
        rc.study.crn = get_or(s, "study", "crn", rc.study.crn);
        rc.study.exact_floor = get_or(s, "study", "exact_floor", rc.study.exact_floor);
        if (s.contains("slope_window")) {
            const auto w = get<std::vector<double>>(s, "study", "slope_window");
            if (w.size() != 2)
                throw ConfigError("study.slope_window: expected [lo, hi]");
            rc.study.slope_lo = w[0];
            rc.study.slope_hi = w[1];
        }
        try {
            rc.study.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("study.") + e.what());
        }
    }

    rc.holder.scheme = rc.scheme;
    rc.holder.seed = rc.seed;
    rc.holder.oracle = rc.oracle;
    if (doc.contains("holder")) {
        const auto& h = doc.at("holder");
        check_keys(h, "holder", {"min_level", "max_level", "fine_n", "b_paths", "p_exp", "quadrature_nodes"});
        rc.holder.min_level = get_or(h, "holder", "min_level", rc.holder.min_level);
        rc.holder.max_level = get_or(h, "holder", "max_level", rc.holder.max_level);
        rc.holder.fine_n = get_or(h, "holder", "fine_n", rc.holder.fine_n);
        rc.holder.b_paths = get_or(h, "holder", "b_paths", rc.holder.b_paths);
        rc.holder.p_exp = get_or(h, "holder", "p_exp", rc.holder.p_exp);
        rc.holder.quadrature_nodes = get_or(h, "holder", "quadrature_nodes", rc.holder.quadrature_nodes);
        try {
            rc.holder.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("holder.") + e.what());
        }
    }
    return rc;
}

/// Applies a seed override everywhere the seed is used.
inline void override_seed(RunConfig& rc, std::uint64_t seed)
{
    rc.seed = seed;
    rc.study.seed = seed;
    rc.holder.seed = seed;
    rc.oracle.seed = seed ^ 0x5bd1e995ull;
    rc.study.oracle.seed = rc.oracle.seed;
    rc.holder.oracle.seed = rc.oracle.seed;
}

}  // namespace bdsde
