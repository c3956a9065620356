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

/// \file core.hpp
/// Problem data of a one-dimensional BDSDE
///
///   Y_t = xi + int_t^T f(r, Y_r, Z_r) dr + int_t^T g(Y_r) dB<-_r - int_t^T Z_r dW_r
///
/// with xi = phi(W_T), and the time partitions the scheme runs on.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "bdsde/errors.hpp"

namespace bdsde {

//---------------------------------------------------------------------------//
// Deterministic time schedules (forcing terms, time-dependent coefficients)
//---------------------------------------------------------------------------//

namespace schedule {
struct Constant {
    double value = 0.0;
};
/// a + b t
struct Affine {
    double a = 0.0;
    double b = 0.0;
};
/// amplitude * sin(omega t)
struct Sine {
    double amplitude = 0.0;
    double omega = 0.0;
};
}  // namespace schedule

class TimeFunction {
public:
    using Kind = std::variant<schedule::Constant, schedule::Affine, schedule::Sine>;

    TimeFunction() = default;
    TimeFunction(Kind kind) : kind_(kind) {}

    static TimeFunction constant(double c) { return {schedule::Constant{c}}; }
    static TimeFunction affine(double a, double b) { return {schedule::Affine{a, b}}; }
    static TimeFunction sine(double amplitude, double omega)
    {
        return {schedule::Sine{amplitude, omega}};
    }

    double operator()(double t) const
    {
        return std::visit(
            [t](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, schedule::Constant>)
                    return k.value;
                else if constexpr (std::is_same_v<K, schedule::Affine>)
                    return k.a + k.b * t;
                else
                    return k.amplitude * std::sin(k.omega * t);
            },
            kind_);
    }

    bool is_constant() const
    {
        if (const auto* a = std::get_if<schedule::Affine>(&kind_))
            return a->b == 0.0;
        if (const auto* s = std::get_if<schedule::Sine>(&kind_))
            return s->amplitude == 0.0 || s->omega == 0.0;
        return true;
    }

    bool is_zero() const { return is_constant() && (*this)(0.0) == 0.0; }

    /// Smallest C with |h(t2) - h(t1)| <= C |t2 - t1|^{1/2} on [0, horizon].
    double half_holder_constant(double horizon) const
    {
        return std::visit(
            [horizon](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, schedule::Constant>)
                    return 0.0;
                else if constexpr (std::is_same_v<K, schedule::Affine>)
                    return std::abs(k.b) * std::sqrt(horizon);
                else
                    return std::abs(k.amplitude * k.omega) * std::sqrt(horizon);
            },
            kind_);
    }

    /// Sup of |h| on [0, horizon].
    double sup_norm(double horizon) const
    {
        return std::visit(
            [horizon](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, schedule::Constant>)
                    return std::abs(k.value);
                else if constexpr (std::is_same_v<K, schedule::Affine>)
                    return std::max(std::abs(k.a), std::abs(k.a + k.b * horizon));
                else
                    return std::abs(k.amplitude);
            },
            kind_);
    }

    const Kind& kind() const { return kind_; }

private:
    Kind kind_ = schedule::Constant{0.0};
};

//---------------------------------------------------------------------------//
// Registries
//---------------------------------------------------------------------------//

/// Terminal functionals phi with xi = phi(W_T).
namespace terminal {
struct Identity {};
struct Constant {
    double value = 0.0;
};
/// e^{rate w}
struct Exp {
    double rate = 0.0;
};
/// max(w - strike, 0)
struct Call {
    double strike = 0.0;
};
}  // namespace terminal

using Terminal = std::variant<terminal::Identity, terminal::Constant, terminal::Exp, terminal::Call>;

inline double evaluate(const Terminal& phi, double w)
{
    return std::visit(
        [w](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, terminal::Identity>)
                return w;
            else if constexpr (std::is_same_v<K, terminal::Constant>)
                return k.value;
            else if constexpr (std::is_same_v<K, terminal::Exp>)
                return std::exp(k.rate * w);
            else
                return std::max(w - k.strike, 0.0);
        },
        phi);
}

/// Generators f(t, y, z).
namespace generator {
struct Zero {};
/// alpha y + beta z + forcing(t)
struct Linear {
    double alpha = 0.0;
    double beta = 0.0;
    TimeFunction forcing;
};
/// alpha y + beta z + amplitude sin(y)
struct SinLinear {
    double alpha = 0.0;
    double beta = 0.0;
    double amplitude = 0.0;
};
}  // namespace generator

using Generator = std::variant<generator::Zero, generator::Linear, generator::SinLinear>;

inline double evaluate(const Generator& f, double t, double y, double z)
{
    return std::visit(
        [=](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, generator::Zero>)
                return 0.0;
            else if constexpr (std::is_same_v<K, generator::Linear>)
                return k.alpha * y + k.beta * z + k.forcing(t);
            else
                return k.alpha * y + k.beta * z + k.amplitude * std::sin(y);
        },
        f);
}

/// Analytic joint Lipschitz constant in (y, z) w.r.t. |dy| + |dz|.
inline double lipschitz_constant(const Generator& f)
{
    return std::visit(
        [](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, generator::Zero>)
                return 0.0;
            else if constexpr (std::is_same_v<K, generator::Linear>)
                return std::max(std::abs(k.alpha), std::abs(k.beta));
            else
                return std::max(std::abs(k.alpha) + std::abs(k.amplitude), std::abs(k.beta));
        },
        f);
}

inline double half_holder_constant(const Generator& f, double horizon)
{
    if (const auto* lin = std::get_if<generator::Linear>(&f))
        return lin->forcing.half_holder_constant(horizon);
    return 0.0;
}

/// Backward coefficients g(y).
namespace backward {
struct Zero {};
struct Constant {
    double value = 0.0;
};
/// gamma y
struct Linear {
    double gamma = 0.0;
};
/// amplitude sin(y)
struct Sin {
    double amplitude = 0.0;
};
}  // namespace backward

using BackwardCoeff = std::variant<backward::Zero, backward::Constant, backward::Linear, backward::Sin>;

inline double evaluate(const BackwardCoeff& g, double y)
{
    return std::visit(
        [y](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, backward::Zero>)
                return 0.0;
            else if constexpr (std::is_same_v<K, backward::Constant>)
                return k.value;
            else if constexpr (std::is_same_v<K, backward::Linear>)
                return k.gamma * y;
            else
                return k.amplitude * std::sin(y);
        },
        g);
}

inline double lipschitz_constant(const BackwardCoeff& g)
{
    if (const auto* lin = std::get_if<backward::Linear>(&g))
        return std::abs(lin->gamma);
    if (const auto* s = std::get_if<backward::Sin>(&g))
        return std::abs(s->amplitude);
    return 0.0;
}

//---------------------------------------------------------------------------//
// ProblemSpec
//---------------------------------------------------------------------------//

/// Immutable description of one BDSDE instance.
///
/// Construction rejects declared constants smaller than the registry's
/// analytic ones, so the scheme's contraction argument can rely on them.
class ProblemSpec {
public:
    ProblemSpec(Terminal terminal, Generator generator, BackwardCoeff backward_coeff,
                double lipschitz_L, double time_lipschitz_L1, double horizon_T)
        : terminal_(terminal), generator_(std::move(generator)), backward_(backward_coeff),
          lipschitz_(lipschitz_L), time_lipschitz_(time_lipschitz_L1), horizon_(horizon_T)
    {
        if (!(horizon_T > 0.0) || !std::isfinite(horizon_T))
            throw InvalidArgument("horizon_T: must be positive and finite");
        if (!(lipschitz_L >= 0.0) || !std::isfinite(lipschitz_L))
            throw InvalidArgument("lipschitz_L: must be nonnegative and finite");
        if (!(time_lipschitz_L1 >= 0.0) || !std::isfinite(time_lipschitz_L1))
            throw InvalidArgument("time_lipschitz_L1: must be nonnegative and finite");
        const double lf = lipschitz_constant(generator_);
        const double lg = lipschitz_constant(backward_);
        if (lipschitz_L < std::max(lf, lg))
            throw InvalidArgument("lipschitz_L: declared " + std::to_string(lipschitz_L) +
                                  " is below the registry constant " +
                                  std::to_string(std::max(lf, lg)));
        const double l1 = half_holder_constant(generator_, horizon_T);
        if (time_lipschitz_L1 < l1)
            throw InvalidArgument("time_lipschitz_L1: declared " +
                                  std::to_string(time_lipschitz_L1) +
                                  " is below the registry constant " + std::to_string(l1));
    }

    const Terminal& terminal() const noexcept { return terminal_; }
    const Generator& generator() const noexcept { return generator_; }
    const BackwardCoeff& backward_coeff() const noexcept { return backward_; }
    double lipschitz_L() const noexcept { return lipschitz_; }
    double time_lipschitz_L1() const noexcept { return time_lipschitz_; }
    double horizon_T() const noexcept { return horizon_; }

    double f(double t, double y, double z) const { return evaluate(generator_, t, y, z); }
    double g(double y) const { return evaluate(backward_, y); }
    double phi(double w) const { return evaluate(terminal_, w); }

    bool has_zero_backward_coeff() const
    {
        return std::holds_alternative<backward::Zero>(backward_);
    }

private:
    Terminal terminal_;
    Generator generator_;
    BackwardCoeff backward_;
    double lipschitz_;
    double time_lipschitz_;
    double horizon_;
};

inline double evaluate_generator(const ProblemSpec& s, double t, double y, double z)
{
    return s.f(t, y, z);
}

inline double evaluate_backward_coeff(const ProblemSpec& s, double y) { return s.g(y); }

inline double evaluate_terminal(const ProblemSpec& s, double w) { return s.phi(w); }

//---------------------------------------------------------------------------//
// Partition
//---------------------------------------------------------------------------//

/// Time grid 0 = t_0 < t_1 < ... < t_n = T.
class Partition {
public:
    explicit Partition(std::vector<double> times) : times_(std::move(times))
    {
        if (times_.size() < 2)
            throw InvalidArgument("partition: needs at least two times");
        if (times_.front() != 0.0)
            throw InvalidArgument("partition: first time must be 0");
        steps_.reserve(times_.size() - 1);
        for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
            if (!(times_[i + 1] > times_[i]))
                throw InvalidArgument("partition: times must be strictly increasing");
            steps_.push_back(times_[i + 1] - times_[i]);
        }
        mesh_ = *std::max_element(steps_.begin(), steps_.end());
    }

    std::size_t size() const noexcept { return steps_.size(); }
    double horizon() const noexcept { return times_.back(); }
    double mesh() const noexcept { return mesh_; }
    double time(std::size_t i) const { return times_.at(i); }
    double step(std::size_t i) const { return steps_.at(i); }
    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<double>& steps() const noexcept { return steps_; }

    bool is_uniform() const noexcept
    {
        return std::all_of(steps_.begin(), steps_.end(),
                           [&](double d) { return std::abs(d - mesh_) <= 4e-16 * times_.back(); });
    }

    friend bool operator==(const Partition&, const Partition&) = default;

private:
    std::vector<double> times_;
    std::vector<double> steps_;
    double mesh_ = 0.0;
};

inline Partition build_uniform_partition(std::size_t n, double horizon)
{
    if (n == 0)
        throw InvalidArgument("n: partition needs at least one step");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw InvalidArgument("T: horizon must be positive");
    std::vector<double> times(n + 1);
    for (std::size_t i = 0; i < n; ++i)
        times[i] = static_cast<double>(i) * horizon / static_cast<double>(n);
    times[n] = horizon;
    return Partition(std::move(times));
}

/// A partition attached to a problem with mesh * L < 1.
class MeshPairing {
public:
    const ProblemSpec& spec() const noexcept { return spec_; }
    const Partition& partition() const noexcept { return partition_; }

private:
    MeshPairing(ProblemSpec spec, Partition partition)
        : spec_(std::move(spec)), partition_(std::move(partition))
    {}

    friend MeshPairing validate_mesh_condition(const Partition&, const ProblemSpec&);

    ProblemSpec spec_;
    Partition partition_;
};

inline MeshPairing validate_mesh_condition(const Partition& p, const ProblemSpec& s)
{
    if (std::abs(p.horizon() - s.horizon_T()) > 1e-12 * s.horizon_T())
        throw InvalidArgument("partition: horizon does not match horizon_T");
    if (p.mesh() * s.lipschitz_L() >= 1.0)
        throw MeshTooCoarse(p.mesh(), s.lipschitz_L());
    return MeshPairing(s, p);
}

//---------------------------------------------------------------------------//
// Probe-based invariant checks
//---------------------------------------------------------------------------//

struct ProbeReport {
    std::size_t probes = 0;
    std::size_t generator_violations = 0;
    std::size_t backward_violations = 0;
    std::size_t time_violations = 0;
    /// max of |df| / (L (|dy| + |dz|)) over probes; <= 1 when the constant holds
    double worst_generator_ratio = 0.0;
    double worst_backward_ratio = 0.0;
    double worst_time_ratio = 0.0;

    bool ok() const
    {
        return generator_violations == 0 && backward_violations == 0 && time_violations == 0;
    }
};

/// Checks the declared constants of s at `count` quasi-random probe pairs in
/// [-10, 10]^3 (additive recurrence on the plastic-number generalisation of the
/// golden ratio, so no two runs differ).
inline ProbeReport check_lipschitz_probes(const ProblemSpec& s, std::size_t count = 1000)
{
    // R_d sequence for d = 7 (t1, y1, z1, t2, y2, z2, spare)
    constexpr int dim = 7;
    double phi = 2.0;
    for (int k = 0; k < 64; ++k)
        phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
    double alpha[dim];
    for (int d = 0; d < dim; ++d)
        alpha[d] = std::fmod(std::pow(1.0 / phi, d + 1), 1.0);

    ProbeReport r;
    r.probes = count;
    const double T = s.horizon_T();
    const double L = s.lipschitz_L();
    const double L1 = s.time_lipschitz_L1();
    auto coord = [&](std::size_t i, int d) { return std::fmod(0.5 + alpha[d] * double(i + 1), 1.0); };
    for (std::size_t i = 0; i < count; ++i) {
        const double t1 = T * coord(i, 0);
        const double y1 = -10.0 + 20.0 * coord(i, 1);
        const double z1 = -10.0 + 20.0 * coord(i, 2);
        const double t2 = T * coord(i, 3);
        const double y2 = -10.0 + 20.0 * coord(i, 4);
        const double z2 = -10.0 + 20.0 * coord(i, 5);

        const double df = std::abs(s.f(t1, y1, z1) - s.f(t1, y2, z2));
        const double bf = L * (std::abs(y1 - y2) + std::abs(z1 - z2));
        // 1e-12 absorbs rounding in the evaluation itself
        if (df > bf * (1.0 + 1e-12) + 1e-12)
            ++r.generator_violations;
        if (bf > 0.0)
            r.worst_generator_ratio = std::max(r.worst_generator_ratio, df / bf);

        const double dg = std::abs(s.g(y1) - s.g(y2));
        const double bg = L * std::abs(y1 - y2);
        if (dg > bg * (1.0 + 1e-12) + 1e-12)
            ++r.backward_violations;
        if (bg > 0.0)
            r.worst_backward_ratio = std::max(r.worst_backward_ratio, dg / bg);

        const double dt = std::abs(s.f(t2, y1, z1) - s.f(t1, y1, z1));
        const double bt = L1 * std::sqrt(std::abs(t2 - t1));
        if (dt > bt * (1.0 + 1e-12) + 1e-12)
            ++r.time_violations;
        if (bt > 0.0)
            r.worst_time_ratio = std::max(r.worst_time_ratio, dt / bt);
    }
    return r;
}

}  // namespace bdsde
