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

/// \file expectation.hpp
/// E[u(c + sqrt(h) N)] and E[u(c + sqrt(h) N) sqrt(h) N] for N ~ Normal(0, 1),
/// by Gauss-Hermite quadrature on an interpolated grid function.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "bdsde/errors.hpp"
#include "bdsde/quadrature.hpp"
#include "bdsde/value_function.hpp"

namespace bdsde {

struct GaussianExpectation {
    double plain = 0.0;
    double weighted = 0.0;
    /// quadrature abscissae that fell outside the grid
    std::size_t extrapolated = 0;
};

namespace detail {
/// w_k / sqrt(pi), renormalised to sum to one.
inline std::vector<double> probability_weights(const QuadratureRule& rule)
{
    std::vector<double> p(rule.size());
    double total = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
        p[k] = rule.weights[k] / std::sqrt(std::numbers::pi);
        total += p[k];
    }
    for (auto& v : p)
        v /= total;
    return p;
}
}  // namespace detail

inline GaussianExpectation expect_gaussian(const ValueFunction& u, double center, double variance,
                                           const QuadratureRule& rule)
{
    if (!(variance >= 0.0))
        throw InvalidArgument("variance: must be nonnegative");
    GaussianExpectation r;
    if (variance == 0.0) {
        r.plain = u(center);
        r.extrapolated = u.grid().contains(center) ? 0 : 1;
        return r;
    }
    const auto p = detail::probability_weights(rule);
    const double scale = std::sqrt(2.0 * variance);
    for (std::size_t k = 0; k < rule.size(); ++k) {
        const double shift = scale * rule.nodes[k];
        const auto st = u.grid().stencil(center + shift, u.order());
        const double v = st.apply(u.values());
        r.plain += p[k] * v;
        r.weighted += p[k] * shift * v;
        if (st.extrapolated)
            ++r.extrapolated;
    }
    return r;
}

/// expect_gaussian at every grid node for one fixed variance, precomputed as a
/// pair of banded matrices acting on grid values.
///
/// Row j of `plain` holds the combined interpolation and quadrature weights of
/// node w_j; applying the operator to u gives the same numbers as calling
/// expect_gaussian(u, w_j, h, rule) for every j, up to summation order.
class ExpectationOperator {
public:
    ExpectationOperator(const UniformGrid& grid, double variance, const QuadratureRule& rule,
                        Interpolation order)
        : grid_(grid), variance_(variance)
    {
        if (!(variance >= 0.0))
            throw InvalidArgument("variance: must be nonnegative");
        const std::size_t g = grid.size();
        first_.resize(g);
        offsets_.resize(g + 1);
        offsets_[0] = 0;
        std::vector<double> plain_row(g), weighted_row(g);
        const auto p = detail::probability_weights(rule);
        const double scale = std::sqrt(2.0 * variance);
        for (std::size_t j = 0; j < g; ++j) {
            std::fill(plain_row.begin(), plain_row.end(), 0.0);
            std::fill(weighted_row.begin(), weighted_row.end(), 0.0);
            std::size_t lo = g, hi = 0;
            auto add = [&](const Stencil& st, double pw, double ww) {
                for (std::size_t q = 0; q < st.size; ++q) {
                    plain_row[st.first + q] += pw * st.weights[q];
                    weighted_row[st.first + q] += ww * st.weights[q];
                }
                lo = std::min(lo, st.first);
                hi = std::max(hi, st.first + st.size);
            };
            if (variance == 0.0) {
                add(grid.stencil(grid.node(j), order), 1.0, 0.0);
            } else {
                for (std::size_t k = 0; k < rule.size(); ++k) {
                    const double shift = scale * rule.nodes[k];
                    const auto st = grid.stencil(grid.node(j) + shift, order);
                    if (st.extrapolated)
                        ++extrapolated_per_apply_;
                    add(st, p[k], p[k] * shift);
                }
            }
            first_[j] = lo;
            plain_.insert(plain_.end(), plain_row.begin() + lo, plain_row.begin() + hi);
            weighted_.insert(weighted_.end(), weighted_row.begin() + lo, weighted_row.begin() + hi);
            offsets_[j + 1] = plain_.size();
        }
    }

    const UniformGrid& grid() const noexcept { return grid_; }
    double variance() const noexcept { return variance_; }
    std::size_t extrapolated_per_apply() const noexcept { return extrapolated_per_apply_; }

    /// plain[j] = E[u(w_j + dW)], weighted[j] = E[u(w_j + dW) dW], dW ~ Normal(0, h).
    void apply(std::span<const double> values, std::span<double> plain,
               std::span<double> weighted) const
    {
        const std::size_t g = grid_.size();
        if (values.size() != g || plain.size() != g || weighted.size() != g)
            throw InvalidArgument("expectation operator: size mismatch");
        for (std::size_t j = 0; j < g; ++j) {
            const double* u = values.data() + first_[j];
            double a = 0.0, b = 0.0;
            for (std::size_t q = offsets_[j]; q < offsets_[j + 1]; ++q) {
                a += plain_[q] * u[q - offsets_[j]];
                b += weighted_[q] * u[q - offsets_[j]];
            }
            plain[j] = a;
            weighted[j] = b;
        }
    }

private:
    UniformGrid grid_;
    double variance_;
    std::size_t extrapolated_per_apply_ = 0;
    std::vector<std::size_t> first_;
    std::vector<std::size_t> offsets_;
    std::vector<double> plain_;
    std::vector<double> weighted_;
};

}  // namespace bdsde
