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

/// \file report.hpp
/// CSV writers for solutions, studies and oracle probes, and the run manifest.
/// Floating point values are printed with 17 significant digits so that a
/// CSV round-trips bit for bit.

#include <array>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "bdsde/analysis.hpp"
#include "bdsde/errors.hpp"
#include "bdsde/oracle.hpp"
#include "bdsde/paths.hpp"
#include "bdsde/scheme.hpp"

namespace bdsde {

inline constexpr const char* version_string = "0.1.0";

inline std::string format_double(double x)
{
    std::array<char, 40> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
    return std::string(buf.data(), r.ptr);
}

inline const char* to_string(Quantity q) { return q == Quantity::Y ? "Y" : "Z"; }
inline const char* to_string(HolderSource s) { return s == HolderSource::oracle ? "oracle" : "scheme"; }

/// path, i, t_i, W, B_T_minus_B_t, Y_pi, Z_pi
inline void write_solution_csv(std::ostream& os, const PathBundle& bundle, const SampleSolution& sol)
{
    const auto& part = bundle.partition();
    os << "path,i,t_i,W,B_T_minus_B_t,Y_pi,Z_pi\n";
    for (std::size_t k = 0; k < sol.paths; ++k) {
        const auto wv = forward_values(bundle.w_increments(k));
        const auto rv = backward_remainders(bundle.b_increments(k));
        for (std::size_t i = 0; i <= sol.steps; ++i)
            os << k << ',' << i << ',' << format_double(part.time(i)) << ',' << format_double(wv[i]) << ','
               << format_double(rv[i]) << ',' << format_double(sol.y_at(k, i)) << ','
               << format_double(sol.z_at(k, i)) << '\n';
    }
}

/// n, mesh, y_error_p, y_se, z_proxy_p, z_se, extrapolation_count
inline void write_convergence_csv(std::ostream& os, const ErrorReport& rep)
{
    os << "n,mesh,y_error_p,y_se,z_proxy_p,z_se,extrapolation_count\n";
    for (const auto& l : rep.levels)
        os << l.n << ',' << format_double(l.mesh) << ',' << format_double(l.y_error_p) << ','
           << format_double(l.y_se) << ',' << format_double(l.z_proxy_p) << ',' << format_double(l.z_se)
           << ',' << l.extrapolated << '\n';
}

/// One row per quantity: fitted slope, its window and a status word.
/// Z carries no window, its status is informational.
inline void write_summary_csv(std::ostream& os, const ErrorReport& rep)
{
    os << "quantity,slope,intercept,ci_half_width,window_lo,window_hi,status\n";
    auto row = [&](const char* q, const std::optional<SlopeFit>& fit, bool exact, bool windowed) {
        os << q << ',';
        if (fit)
            os << format_double(fit->slope) << ',' << format_double(fit->intercept) << ','
               << format_double(fit->ci_half_width);
        else
            os << ",,";
        os << ',';
        if (windowed)
            os << format_double(rep.slope_lo) << ',' << format_double(rep.slope_hi);
        else
            os << ',';
        os << ',';
        if (exact)
            os << "exact";
        else if (!fit)
            os << "degenerate";
        else if (!windowed)
            os << "info";
        else
            os << (rep.y_slope_in_window() ? "pass" : "fail");
        os << '\n';
    };
    row("Y", rep.y_fit, rep.y_exact, true);
    row("Z", rep.z_fit, rep.z_exact, false);
}

/// probe_id, t, w, B_T_minus_B_t, closed_form, mc_estimate, se, pass
inline void write_certification_csv(std::ostream& os, const CertificationReport& rep)
{
    os << "probe_id,t,w,B_T_minus_B_t,closed_form,mc_estimate,se,pass\n";
    for (const auto& r : rep.rows)
        os << r.id << ',' << format_double(r.t) << ',' << format_double(r.w) << ','
           << format_double(r.b_remainder) << ',' << format_double(r.closed_form) << ','
           << format_double(r.mc_estimate) << ',' << format_double(r.standard_error) << ','
           << (r.pass ? "pass" : "fail") << '\n';
}

/// quantity, source, level, gap, ratio, se, s_at_max, growth_flag
inline void write_holder_csv(std::ostream& os, const HolderReport& rep)
{
    os << "quantity,source,level,gap,ratio,se,s_at_max,growth_flag\n";
    for (const auto& t : rep.tables)
        for (const auto& r : t.rows)
            os << to_string(t.quantity) << ',' << to_string(t.source) << ',' << r.level << ','
               << format_double(r.gap) << ',' << format_double(r.ratio) << ','
               << format_double(r.standard_error) << ',' << format_double(r.s_at_max) << ','
               << (t.growth_flag ? 1 : 0) << '\n';
}

/// Writes through a temporary sibling and renames, so a failed run never
/// leaves a truncated file behind.
template <class Writer>
void write_file_atomically(const std::filesystem::path& path, Writer&& writer)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
            throw Error("cannot open " + tmp.string() + " for writing");
        writer(os);
        os.flush();
        if (!os)
            throw Error("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw Error("cannot rename " + tmp.string() + ": " + ec.message());
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Digest of the canonical dump (sorted keys, no whitespace) of a config.
inline std::string config_digest(const nlohmann::json& doc)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(doc.dump())));
    return buf;
}

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunManifest {
    std::string command;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::string started;
    std::string finished;
    std::vector<std::string> outputs;
    std::string status = "ok";
    int exit_code = 0;
    std::string message;

    nlohmann::json to_json() const
    {
        return {{"command", command},   {"config_digest", config_digest},
                {"seed", seed},         {"version", version_string},
                {"started", started},   {"finished", finished},
                {"outputs", outputs},   {"status", status},
                {"exit_code", exit_code}, {"message", message}};
    }
};

}  // namespace bdsde
