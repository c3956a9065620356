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

/// \file paths.hpp
/// Reproducible Brownian increments for the forward driver W and the
/// backward driver B, and discrete backward Ito sums.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "bdsde/core.hpp"
#include "bdsde/errors.hpp"
#include "bdsde/parallel.hpp"

namespace bdsde {

enum class Driver { W, B };

/// Substream tags. Extra W replicas for nested sampling start at `w_replica`.
namespace stream {
inline constexpr std::uint32_t w = 0;
inline constexpr std::uint32_t b = 1;
inline constexpr std::uint32_t oracle = 2;
inline constexpr std::uint32_t w_replica = 16;
}  // namespace stream

/// Master seed plus the rule (seed, path, stream) -> independent engine.
///
/// Every path owns its substream, so the increments of a path never depend on
/// which thread generated it or in which order.
struct RngSpec {
    std::uint64_t master_seed = 0;

    std::mt19937_64 engine(std::uint64_t path, std::uint32_t stream_id) const
    {
        std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                          static_cast<std::uint32_t>(master_seed >> 32),
                          static_cast<std::uint32_t>(path),
                          static_cast<std::uint32_t>(path >> 32), stream_id, 0x9e3779b9u};
        return std::mt19937_64(seq);
    }
};

/// Standard normal by inversion of a 53-bit uniform on (0, 1).
template <class Engine>
double standard_normal(Engine& eng)
{
    const double u = (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

/// Sampled increments of W and B on a common partition, path-major.
class PathBundle {
public:
    PathBundle(Partition partition, std::size_t paths, std::uint64_t seed,
               std::vector<double> w, std::vector<double> b)
        : partition_(std::move(partition)), paths_(paths), seed_(seed), w_(std::move(w)),
          b_(std::move(b))
    {
        const std::size_t expect = paths_ * partition_.size();
        if (w_.size() != expect || b_.size() != expect)
            throw InvalidArgument("bundle: increment block size does not match paths * n");
    }

    const Partition& partition() const noexcept { return partition_; }
    std::size_t path_count() const noexcept { return paths_; }
    std::size_t steps() const noexcept { return partition_.size(); }
    std::uint64_t seed() const noexcept { return seed_; }

    std::span<const double> w_increments(std::size_t path) const
    {
        return row(w_, path);
    }
    std::span<const double> b_increments(std::size_t path) const
    {
        return row(b_, path);
    }
    std::span<const double> increments(Driver d, std::size_t path) const
    {
        return d == Driver::W ? w_increments(path) : b_increments(path);
    }

    const std::vector<double>& w_block() const noexcept { return w_; }
    const std::vector<double>& b_block() const noexcept { return b_; }

    friend bool operator==(const PathBundle&, const PathBundle&) = default;

private:
    std::span<const double> row(const std::vector<double>& block, std::size_t path) const
    {
        if (path >= paths_)
            throw InvalidArgument("bundle: path index out of range");
        const std::size_t n = partition_.size();
        return {block.data() + path * n, n};
    }

    Partition partition_;
    std::size_t paths_;
    std::uint64_t seed_;
    std::vector<double> w_;
    std::vector<double> b_;
};

/// Fills `out` with increments Normal(0, step_i) from one substream.
inline void sample_increments(const Partition& p, const RngSpec& rng, std::uint64_t path,
                              std::uint32_t stream_id, std::span<double> out)
{
    auto eng = rng.engine(path, stream_id);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::sqrt(p.step(i)) * standard_normal(eng);
}

/// M paths of independent increments for both drivers.
///
/// With `antithetic`, path 2k+1 is the sign flip of path 2k (both drivers) and
/// M must be even.
inline PathBundle sample_bundle(const Partition& p, std::size_t paths, const RngSpec& rng,
                                bool antithetic = false, unsigned threads = 0)
{
    if (paths == 0)
        throw InvalidArgument("paths: need at least one path");
    if (antithetic && paths % 2 != 0)
        throw InvalidArgument("paths: antithetic sampling needs an even path count");
    const std::size_t n = p.size();
    std::vector<double> w(paths * n), b(paths * n);
    parallel_for(paths, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            std::span<double> wk(w.data() + k * n, n), bk(b.data() + k * n, n);
            if (antithetic && k % 2 == 1) {
                // the partner may live in another chunk; regenerate it
                sample_increments(p, rng, k - 1, stream::w, wk);
                sample_increments(p, rng, k - 1, stream::b, bk);
                for (std::size_t i = 0; i < n; ++i) {
                    wk[i] = -wk[i];
                    bk[i] = -bk[i];
                }
            } else {
                sample_increments(p, rng, k, stream::w, wk);
                sample_increments(p, rng, k, stream::b, bk);
            }
        }
    });
    return PathBundle(p, paths, rng.master_seed, std::move(w), std::move(b));
}

/// W_{t_i} or B_{t_i} of one path; the value at i = 0 is 0.
inline double brownian_value(const PathBundle& bundle, std::size_t path, Driver d, std::size_t i)
{
    if (i > bundle.steps())
        throw InvalidArgument("grid index out of range");
    const auto inc = bundle.increments(d, path);
    double v = 0.0;
    for (std::size_t j = 0; j < i; ++j)
        v += inc[j];
    return v;
}

/// B_T - B_{t_i} for i = 0..n, accumulated from the right.
inline std::vector<double> backward_remainders(std::span<const double> b_increments)
{
    const std::size_t n = b_increments.size();
    std::vector<double> r(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;)
        r[i] = r[i + 1] + b_increments[i];
    return r;
}

/// W_{t_i} for i = 0..n.
inline std::vector<double> forward_values(std::span<const double> w_increments)
{
    std::vector<double> v(w_increments.size() + 1, 0.0);
    for (std::size_t i = 0; i < w_increments.size(); ++i)
        v[i + 1] = v[i] + w_increments[i];
    return v;
}

/// sum_{i=j}^{k-1} h_{t_{i+1}} dB_i, with `right_values[i - j]` = h_{t_{i+1}}.
///
/// The integrand is taken at the right end of each cell, the discrete form of
/// the backward Ito integral.
inline double backward_ito_sum(const PathBundle& bundle, std::size_t path,
                               std::span<const double> right_values, std::size_t j, std::size_t k)
{
    if (j > k || k > bundle.steps())
        throw InvalidArgument("backward sum: range out of bounds");
    if (right_values.size() != k - j)
        throw InvalidArgument("backward sum: integrand length does not match range");
    const auto db = bundle.b_increments(path);
    double s = 0.0;
    for (std::size_t i = j; i < k; ++i)
        s += right_values[i - j] * db[i];
    return s;
}

/// Restricts a bundle to a coarser partition whose times are a subset of the
/// fine ones, summing the fine increments inside each coarse cell.
inline PathBundle coarsen_bundle(const PathBundle& fine, const Partition& coarse)
{
    const Partition& fp = fine.partition();
    std::vector<std::size_t> cut;  // fine index of every coarse time
    cut.reserve(coarse.size() + 1);
    std::size_t j = 0;
    const double tol = 1e-12 * fp.horizon();
    for (double t : coarse.times()) {
        while (j < fp.times().size() && fp.time(j) < t - tol)
            ++j;
        if (j == fp.times().size() || std::abs(fp.time(j) - t) > tol)
            throw InvalidArgument("coarsen: coarse time is not a fine grid time");
        cut.push_back(j);
    }
    if (cut.back() != fp.size())
        throw InvalidArgument("coarsen: horizons differ");

    const std::size_t m = fine.path_count();
    const std::size_t n = coarse.size();
    std::vector<double> w(m * n, 0.0), b(m * n, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        const auto fw = fine.w_increments(k);
        const auto fb = fine.b_increments(k);
        for (std::size_t i = 0; i < n; ++i) {
            double sw = 0.0, sb = 0.0;
            for (std::size_t q = cut[i]; q < cut[i + 1]; ++q) {
                sw += fw[q];
                sb += fb[q];
            }
            w[k * n + i] = sw;
            b[k * n + i] = sb;
        }
    }
    return PathBundle(coarse, m, fine.seed(), std::move(w), std::move(b));
}

//---------------------------------------------------------------------------//
// Binary dump / restore
//
// Header: seed (u64), n (u64), M (u64), T (f64); payload: f64 W block then
// B block, path-major. All little-endian. Restored bundles use a uniform
// partition of [0, T].
//---------------------------------------------------------------------------//

namespace detail {
inline void put_u64(std::ostream& os, std::uint64_t v)
{
    char bytes[8];
    for (int i = 0; i < 8; ++i)
        bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(bytes, 8);
}

inline std::uint64_t get_u64(std::istream& is)
{
    unsigned char bytes[8];
    if (!is.read(reinterpret_cast<char*>(bytes), 8))
        throw InvalidArgument("bundle file: truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}
}  // namespace detail

inline void write_bundle(std::ostream& os, const PathBundle& bundle)
{
    detail::put_u64(os, bundle.seed());
    detail::put_u64(os, bundle.steps());
    detail::put_u64(os, bundle.path_count());
    detail::put_u64(os, std::bit_cast<std::uint64_t>(bundle.partition().horizon()));
    for (double x : bundle.w_block())
        detail::put_u64(os, std::bit_cast<std::uint64_t>(x));
    for (double x : bundle.b_block())
        detail::put_u64(os, std::bit_cast<std::uint64_t>(x));
}

inline PathBundle read_bundle(std::istream& is)
{
    const std::uint64_t seed = detail::get_u64(is);
    const std::uint64_t n = detail::get_u64(is);
    const std::uint64_t m = detail::get_u64(is);
    const double horizon = std::bit_cast<double>(detail::get_u64(is));
    if (n == 0 || m == 0 || n > (1u << 24) || m > (1ull << 32))
        throw InvalidArgument("bundle file: implausible header");
    std::vector<double> w(n * m), b(n * m);
    for (auto& x : w)
        x = std::bit_cast<double>(detail::get_u64(is));
    for (auto& x : b)
        x = std::bit_cast<double>(detail::get_u64(is));
    return PathBundle(build_uniform_partition(n, horizon), m, seed, std::move(w), std::move(b));
}

}  // namespace bdsde
