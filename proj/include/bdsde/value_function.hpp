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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bdsde/errors.hpp"

namespace bdsde {

enum class Interpolation { linear, cubic };

/// Interpolation weights of one evaluation point: value = sum weights[k] * u[first + k].
struct Stencil {
    std::size_t first = 0;
    std::size_t size = 0;
    std::array<double, 4> weights{};
    bool extrapolated = false;

    double apply(std::span<const double> values) const
    {
        double v = 0.0;
        for (std::size_t k = 0; k < size; ++k)
            v += weights[k] * values[first + k];
        return v;
    }
};

/// Uniform spatial grid lo = w_0 < ... < w_G = hi.
class UniformGrid {
public:
    UniformGrid(double lo, double hi, std::size_t nodes) : lo_(lo), hi_(hi), nodes_(nodes)
    {
        if (nodes < 2)
            throw InvalidArgument("grid nodes: need at least two nodes");
        if (!(hi > lo))
            throw InvalidArgument("grid: upper end must exceed lower end");
        spacing_ = (hi - lo) / static_cast<double>(nodes - 1);
    }

    /// Grid on [-kappa sqrt(T), kappa sqrt(T)].
    static UniformGrid symmetric(double kappa, double horizon, std::size_t nodes)
    {
        const double r = kappa * std::sqrt(horizon);
        return UniformGrid(-r, r, nodes);
    }

    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    std::size_t size() const noexcept { return nodes_; }
    double spacing() const noexcept { return spacing_; }

    double node(std::size_t j) const noexcept
    {
        return j + 1 == nodes_ ? hi_ : lo_ + static_cast<double>(j) * spacing_;
    }

    std::vector<double> nodes() const
    {
        std::vector<double> out(nodes_);
        for (std::size_t j = 0; j < nodes_; ++j)
            out[j] = node(j);
        return out;
    }

    bool contains(double x) const noexcept { return x >= lo_ && x <= hi_; }

    /// Local Lagrange stencil (2 or 4 points) inside the grid; outside, the
    /// secant of the end cell continued linearly.
    Stencil stencil(double x, Interpolation order) const
    {
        Stencil st;
        const double pos = (x - lo_) / spacing_;
        const auto last_cell = static_cast<double>(nodes_ - 2);
        if (!(x >= lo_ && x <= hi_) || order == Interpolation::linear || nodes_ < 4) {
            st.extrapolated = !(x >= lo_ && x <= hi_);
            const double cell = std::clamp(std::floor(pos), 0.0, last_cell);
            const double s = pos - cell;
            st.first = static_cast<std::size_t>(cell);
            st.size = 2;
            st.weights = {1.0 - s, s, 0.0, 0.0};
            return st;
        }
        const double cell = std::clamp(std::floor(pos), 0.0, last_cell);
        const double start = std::clamp(cell - 1.0, 0.0, static_cast<double>(nodes_ - 4));
        const double s = pos - start;
        st.first = static_cast<std::size_t>(start);
        st.size = 4;
        const double s0 = s, s1 = s - 1.0, s2 = s - 2.0, s3 = s - 3.0;
        st.weights = {-s1 * s2 * s3 / 6.0, s0 * s2 * s3 / 2.0, -s0 * s1 * s3 / 2.0,
                      s0 * s1 * s2 / 6.0};
        return st;
    }

    friend bool operator==(const UniformGrid&, const UniformGrid&) = default;

private:
    double lo_;
    double hi_;
    std::size_t nodes_;
    double spacing_ = 0.0;
};

/// Grid function w -> u(w) with local polynomial interpolation and linear
/// extrapolation.
class ValueFunction {
public:
    ValueFunction(UniformGrid grid, std::vector<double> values,
                  Interpolation order = Interpolation::cubic)
        : grid_(grid), values_(std::move(values)), order_(order)
    {
        if (values_.size() != grid_.size())
            throw InvalidArgument("value function: value count does not match grid");
    }

    template <class F>
    static ValueFunction sample(UniformGrid grid, F&& fn, Interpolation order = Interpolation::cubic)
    {
        std::vector<double> v(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j)
            v[j] = fn(grid.node(j));
        return ValueFunction(grid, std::move(v), order);
    }

    double operator()(double x) const { return grid_.stencil(x, order_).apply(values_); }

    const UniformGrid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    Interpolation order() const noexcept { return order_; }

private:
    UniformGrid grid_;
    std::vector<double> values_;
    Interpolation order_;
};

}  // namespace bdsde
