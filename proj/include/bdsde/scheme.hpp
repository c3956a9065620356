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

/// \file scheme.hpp
/// The implicit backward recursion
///
///   Y^pi_{t_n} = xi^pi,  Z^pi_{t_n} = 0,
///   Z^pi_{t_i} = E[(Y^pi_{t_{i+1}} + g(Y^pi_{t_{i+1}}) dB_i) dW_i | F_{t_i}] / D_i,
///   Y^pi_{t_i} = E[Y^pi_{t_{i+1}} + g(Y^pi_{t_{i+1}}) dB_i | F_{t_i}] + f(t_i, Y^pi_{t_i}, Z^pi_{t_i}) D_i,
///
/// with F_{t_i} generated by W up to t_i and by the B increments after t_i.
/// Two realisations of the conditional expectations are provided: a pathwise
/// engine that fixes one B path and integrates dW_i by quadrature on a grid of
/// W values, and a least-squares Monte Carlo engine.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "bdsde/core.hpp"
#include "bdsde/errors.hpp"
#include "bdsde/expectation.hpp"
#include "bdsde/parallel.hpp"
#include "bdsde/paths.hpp"
#include "bdsde/quadrature.hpp"
#include "bdsde/regression.hpp"
#include "bdsde/value_function.hpp"

namespace bdsde {

enum class Engine { pathwise, lsmc };

struct GridSpec {
    std::size_t nodes = 129;
    /// half-width in units of sqrt(T)
    double kappa = 6.0;
};

struct SchemeConfig {
    Engine engine = Engine::pathwise;
    double picard_tolerance = 1e-12;
    int picard_max_iterations = 50;
    int quadrature_nodes = 12;
    GridSpec grid;
    Interpolation interpolation = Interpolation::cubic;
    int lsmc_degree = 3;
    /// xi^pi = phi(W_T) + terminal_perturbation
    double terminal_perturbation = 0.0;

    void validate() const
    {
        if (!(picard_tolerance > 0.0))
            throw InvalidArgument("picard_tolerance: must be positive");
        if (picard_max_iterations < 1)
            throw InvalidArgument("picard_max_iterations: must be at least 1");
        if (quadrature_nodes < 1 || quadrature_nodes > 64)
            throw InvalidArgument("quadrature_nodes: must be in [1, 64]");
        if (grid.nodes < 4)
            throw InvalidArgument("grid.nodes: need at least 4 nodes");
        if (!(grid.kappa > 0.0))
            throw InvalidArgument("grid.kappa: must be positive");
        if (lsmc_degree < 0 || lsmc_degree > 8)
            throw InvalidArgument("lsmc_degree: must be in [0, 8]");
    }
};

//---------------------------------------------------------------------------//
// Implicit step
//---------------------------------------------------------------------------//

struct PicardResult {
    double value = 0.0;
    int iterations = 0;
    /// largest observed |y_{k+2} - y_{k+1}| / |y_{k+1} - y_k| (0 if fewer than two steps)
    double max_ratio = 0.0;
};

/// Solves y = eta + h f(t, y, z) by Picard iteration from y_0 = eta.
///
/// Stops once successive iterates differ by at most tol * max(1, |y|). The
/// contraction ratio is only sampled while the step is well above rounding
/// level (|y_{k+1} - y_k| >= 1e-6 max(1, |y|)).
template <class F>
PicardResult picard_solve_implicit(double eta, double z, double t, double h, F&& f,
                                   double tol = 1e-12, int max_iterations = 50)
{
    PicardResult r;
    double y = eta;
    double prev_step = -1.0;
    for (int k = 1; k <= max_iterations; ++k) {
        const double next = eta + h * f(t, y, z);
        const double step = std::abs(next - y);
        const double scale = std::max(1.0, std::abs(next));
        if (prev_step >= 1e-6 * scale)
            r.max_ratio = std::max(r.max_ratio, step / prev_step);
        prev_step = step;
        y = next;
        r.iterations = k;
        if (!std::isfinite(y))
            break;
        if (step <= tol * scale) {
            r.value = y;
            return r;
        }
    }
    throw NoConvergence("picard: no convergence after " + std::to_string(max_iterations) +
                        " iterations (eta " + std::to_string(eta) + ", h " + std::to_string(h) + ")");
}

inline PicardResult picard_solve_implicit(double eta, double z, double t, double h,
                                          const ProblemSpec& spec, const SchemeConfig& cfg)
{
    return picard_solve_implicit(
        eta, z, t, h, [&spec](double tt, double y, double zz) { return spec.f(tt, y, zz); },
        cfg.picard_tolerance, cfg.picard_max_iterations);
}

struct PicardStats {
    std::size_t solves = 0;
    std::size_t total_iterations = 0;
    int max_iterations = 0;
    double max_ratio = 0.0;

    void add(const PicardResult& r)
    {
        ++solves;
        total_iterations += std::size_t(r.iterations);
        max_iterations = std::max(max_iterations, r.iterations);
        max_ratio = std::max(max_ratio, r.max_ratio);
    }

    void merge(const PicardStats& o)
    {
        solves += o.solves;
        total_iterations += o.total_iterations;
        max_iterations = std::max(max_iterations, o.max_iterations);
        max_ratio = std::max(max_ratio, o.max_ratio);
    }

    double mean_iterations() const
    {
        return solves == 0 ? 0.0 : double(total_iterations) / double(solves);
    }
};

//---------------------------------------------------------------------------//
// Pathwise engine
//---------------------------------------------------------------------------//

struct StepResult {
    ValueFunction u;
    ValueFunction v;
    PicardStats picard;
    /// max_j |u_j - f(t_i, u_j, v_j) h - E(...)_j|
    double consistency_residual = 0.0;
    std::size_t extrapolated = 0;
};

/// One backward step on the grid for a realised dB_i.
///
/// The expectations of u_next and g(u_next) enter only through
/// u_next + dB_i g(u_next), which is fed once through the (linear) operator.
inline StepResult backward_step_pathwise(const ValueFunction& u_next, double delta_b, double t_i,
                                         double h, const ProblemSpec& spec,
                                         const ExpectationOperator& op, const SchemeConfig& cfg)
{
    if (!(h > 0.0))
        throw InvalidArgument("step: h must be positive");
    const auto& grid = u_next.grid();
    if (!(grid == op.grid()))
        throw InvalidArgument("step: operator grid differs from value grid");
    const std::size_t g = grid.size();
    const auto un = u_next.values();
    std::vector<double> combined(g), plain(g), weighted(g), u(g), v(g);
    for (std::size_t j = 0; j < g; ++j)
        combined[j] = un[j] + delta_b * spec.g(un[j]);
    op.apply(combined, plain, weighted);

    PicardStats stats;
    double residual = 0.0;
    for (std::size_t j = 0; j < g; ++j) {
        v[j] = weighted[j] / h;
        const auto r = picard_solve_implicit(plain[j], v[j], t_i, h, spec, cfg);
        u[j] = r.value;
        stats.add(r);
        residual = std::max(residual, std::abs(u[j] - spec.f(t_i, u[j], v[j]) * h - plain[j]));
    }
    return {ValueFunction(grid, std::move(u), u_next.order()),
            ValueFunction(grid, std::move(v), u_next.order()), stats, residual,
            op.extrapolated_per_apply()};
}

inline StepResult backward_step_pathwise(const ValueFunction& u_next, double delta_b, double t_i,
                                         double h, const ProblemSpec& spec,
                                         const QuadratureRule& rule, const SchemeConfig& cfg)
{
    return backward_step_pathwise(u_next, delta_b, t_i, h, spec,
                                  ExpectationOperator(u_next.grid(), h, rule, u_next.order()), cfg);
}

/// Value functions u_i(w) ~ Y^pi_{t_i}, v_i(w) ~ Z^pi_{t_i} for one B path.
struct PathwiseSolution {
    std::vector<ValueFunction> u;
    std::vector<ValueFunction> v;
    Terminal terminal;
    double terminal_perturbation = 0.0;
    PicardStats picard;
    double consistency_residual = 0.0;
    std::size_t extrapolated = 0;

    std::size_t steps() const noexcept { return u.size() - 1; }
};

/// Shared, immutable state of the pathwise engine: grid, rule and one
/// expectation operator per distinct step size. solve() is safe to call
/// concurrently.
class PathwiseSolver {
public:
    PathwiseSolver(MeshPairing pairing, SchemeConfig cfg)
        : pairing_(std::move(pairing)), cfg_(cfg),
          grid_(UniformGrid::symmetric(cfg.grid.kappa, pairing_.spec().horizon_T(), cfg.grid.nodes))
    {
        cfg_.validate();
        rule_ = gauss_hermite_rule(cfg_.quadrature_nodes);
        const auto& steps = pairing_.partition().steps();
        op_index_.resize(steps.size());
        for (std::size_t i = 0; i < steps.size(); ++i) {
            std::size_t found = ops_.size();
            for (std::size_t q = 0; q < ops_.size(); ++q)
                if (ops_[q]->variance() == steps[i])
                    found = q;
            if (found == ops_.size())
                ops_.push_back(std::make_shared<const ExpectationOperator>(grid_, steps[i], rule_,
                                                                           cfg_.interpolation));
            op_index_[i] = found;
        }
    }

    const MeshPairing& pairing() const noexcept { return pairing_; }
    const SchemeConfig& config() const noexcept { return cfg_; }
    const UniformGrid& grid() const noexcept { return grid_; }
    const QuadratureRule& rule() const noexcept { return rule_; }

    ValueFunction terminal_values() const
    {
        const auto& spec = pairing_.spec();
        const double eps = cfg_.terminal_perturbation;
        return ValueFunction::sample(grid_, [&](double w) { return spec.phi(w) + eps; },
                                     cfg_.interpolation);
    }

    PathwiseSolution solve(std::span<const double> b_increments) const
    {
        const auto& part = pairing_.partition();
        const auto& spec = pairing_.spec();
        const std::size_t n = part.size();
        if (b_increments.size() != n)
            throw InvalidArgument("solve: B increments do not match the partition");

        PathwiseSolution sol;
        sol.terminal = spec.terminal();
        sol.terminal_perturbation = cfg_.terminal_perturbation;
        sol.u.reserve(n + 1);
        sol.v.reserve(n + 1);
        // built back to front, reversed at the end
        sol.u.push_back(terminal_values());
        sol.v.push_back(ValueFunction(grid_, std::vector<double>(grid_.size(), 0.0), cfg_.interpolation));
        for (std::size_t i = n; i-- > 0;) {
            auto step = backward_step_pathwise(sol.u.back(), b_increments[i], part.time(i),
                                               part.step(i), spec, *ops_[op_index_[i]], cfg_);
            sol.picard.merge(step.picard);
            sol.consistency_residual = std::max(sol.consistency_residual, step.consistency_residual);
            sol.extrapolated += step.extrapolated;
            sol.u.push_back(std::move(step.u));
            sol.v.push_back(std::move(step.v));
        }
        std::reverse(sol.u.begin(), sol.u.end());
        std::reverse(sol.v.begin(), sol.v.end());
        return sol;
    }

private:
    MeshPairing pairing_;
    SchemeConfig cfg_;
    UniformGrid grid_;
    QuadratureRule rule_;
    std::vector<std::shared_ptr<const ExpectationOperator>> ops_;
    std::vector<std::size_t> op_index_;
};

inline PathwiseSolution solve_backward_pathwise(const MeshPairing& pairing,
                                                std::span<const double> b_increments,
                                                const SchemeConfig& cfg)
{
    return PathwiseSolver(pairing, cfg).solve(b_increments);
}

struct PathEvaluation {
    std::vector<double> y;
    std::vector<double> z;
    std::size_t extrapolated = 0;
};

/// (Y^pi_{t_i}, Z^pi_{t_i}) = (u_i(W_{t_i}), v_i(W_{t_i})), i = 0..n. The
/// terminal pair is (xi^pi, 0) exactly.
inline PathEvaluation evaluate_along_path(const PathwiseSolution& sol,
                                          std::span<const double> w_increments)
{
    const std::size_t n = sol.steps();
    if (w_increments.size() != n)
        throw InvalidArgument("evaluate: W increments do not match the partition");
    PathEvaluation ev;
    ev.y.resize(n + 1);
    ev.z.resize(n + 1);
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& grid = sol.u[i].grid();
        if (!grid.contains(w))
            ++ev.extrapolated;
        ev.y[i] = sol.u[i](w);
        ev.z[i] = sol.v[i](w);
        w += w_increments[i];
    }
    ev.y[n] = evaluate(sol.terminal, w) + sol.terminal_perturbation;
    ev.z[n] = 0.0;
    return ev;
}

//---------------------------------------------------------------------------//
// Sample-form solutions
//---------------------------------------------------------------------------//

/// Y^pi, Z^pi along every joint path of a bundle, path-major with n + 1
/// entries per path.
struct SampleSolution {
    std::size_t paths = 0;
    std::size_t steps = 0;
    std::vector<double> y;
    std::vector<double> z;
    PicardStats picard;
    double consistency_residual = 0.0;
    std::size_t extrapolated = 0;

    double y_at(std::size_t path, std::size_t i) const { return y[path * (steps + 1) + i]; }
    double z_at(std::size_t path, std::size_t i) const { return z[path * (steps + 1) + i]; }
};

/// Pathwise engine on every path of the bundle: solve with the path's B
/// increments, then evaluate along its W increments.
inline SampleSolution solve_pathwise_bundle(const PathwiseSolver& solver, const PathBundle& bundle,
                                            unsigned threads = 0)
{
    if (!(bundle.partition() == solver.pairing().partition()))
        throw InvalidArgument("solve: bundle partition differs from the solver partition");
    const std::size_t m = bundle.path_count();
    const std::size_t n = bundle.steps();
    SampleSolution out;
    out.paths = m;
    out.steps = n;
    out.y.resize(m * (n + 1));
    out.z.resize(m * (n + 1));
    std::vector<PicardStats> stats(m);
    std::vector<double> residual(m);
    std::vector<std::size_t> extra(m);
    parallel_for(m, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const auto sol = solver.solve(bundle.b_increments(k));
            const auto ev = evaluate_along_path(sol, bundle.w_increments(k));
            std::copy(ev.y.begin(), ev.y.end(), out.y.begin() + std::ptrdiff_t(k * (n + 1)));
            std::copy(ev.z.begin(), ev.z.end(), out.z.begin() + std::ptrdiff_t(k * (n + 1)));
            stats[k] = sol.picard;
            residual[k] = sol.consistency_residual;
            extra[k] = sol.extrapolated + ev.extrapolated;
        }
    });
    for (std::size_t k = 0; k < m; ++k) {
        out.picard.merge(stats[k]);
        out.consistency_residual = std::max(out.consistency_residual, residual[k]);
        out.extrapolated += extra[k];
    }
    return out;
}

//---------------------------------------------------------------------------//
// LSMC engine
//---------------------------------------------------------------------------//

struct LsmcStepDiagnostics {
    std::size_t basis_size = 0;
    double smallest_singular_value = 0.0;
    double largest_singular_value = 0.0;
};

struct LsmcSolution : SampleSolution {
    /// indexed by step i = 0..n-1
    std::vector<LsmcStepDiagnostics> diagnostics;
};

/// Regression realisation of the recursion on the joint paths of a bundle.
///
/// At step i both conditional expectations are projected on polynomials of
/// (W_{t_i}, B_T - B_{t_i}); a coordinate that is constant across paths (W at
/// t_0) is dropped from the basis.
inline LsmcSolution solve_lsmc(const MeshPairing& pairing, const PathBundle& bundle,
                               const SchemeConfig& cfg, unsigned threads = 0)
{
    cfg.validate();
    const auto& spec = pairing.spec();
    const auto& part = pairing.partition();
    if (!(bundle.partition() == part))
        throw InvalidArgument("solve_lsmc: bundle partition differs from the pairing");
    const std::size_t m = bundle.path_count();
    const std::size_t n = part.size();
    {
        BasisSpec full;
        full.degree = cfg.lsmc_degree;
        if (m < 10 * monomial_exponents(full).size())
            throw InvalidArgument("paths: LSMC needs at least 10 paths per basis function");
    }

    std::vector<double> w_now(m * (n + 1)), r_now(m * (n + 1));
    for (std::size_t k = 0; k < m; ++k) {
        const auto wv = forward_values(bundle.w_increments(k));
        const auto rv = backward_remainders(bundle.b_increments(k));
        std::copy(wv.begin(), wv.end(), w_now.begin() + std::ptrdiff_t(k * (n + 1)));
        std::copy(rv.begin(), rv.end(), r_now.begin() + std::ptrdiff_t(k * (n + 1)));
    }

    LsmcSolution out;
    out.paths = m;
    out.steps = n;
    out.y.assign(m * (n + 1), 0.0);
    out.z.assign(m * (n + 1), 0.0);
    out.diagnostics.resize(n);
    auto at = [n](std::size_t k, std::size_t i) { return k * (n + 1) + i; };
    for (std::size_t k = 0; k < m; ++k)
        out.y[at(k, n)] = spec.phi(w_now[at(k, n)]) + cfg.terminal_perturbation;

    std::vector<State> states(m);
    std::vector<double> target_y(m), target_z(m);
    std::vector<PicardStats> stats(m);
    std::vector<double> residual(m);
    for (std::size_t i = n; i-- > 0;) {
        const double h = part.step(i);
        for (std::size_t k = 0; k < m; ++k) {
            states[k] = {w_now[at(k, i)], r_now[at(k, i)]};
            const double next = out.y[at(k, i + 1)];
            target_y[k] = next + spec.g(next) * bundle.b_increments(k)[i];
            target_z[k] = target_y[k] * bundle.w_increments(k)[i] / h;
        }
        BasisSpec basis;
        basis.degree = cfg.lsmc_degree;
        for (int d = 0; d < 2; ++d) {
            const auto [lo, hi] = std::minmax_element(
                states.begin(), states.end(), [d](const State& a, const State& b) { return a[d] < b[d]; });
            basis.active[d] = (*hi)[d] > (*lo)[d];
        }
        const LeastSquaresProjector proj(states, basis);
        const auto eta = proj.fitted(proj.fit(target_y));
        const auto zhat = proj.fitted(proj.fit(target_z));
        out.diagnostics[i] = {proj.basis_size(), proj.smallest_singular_value(),
                              proj.largest_singular_value()};

        const double t = part.time(i);
        parallel_for(m, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t k = begin; k < end; ++k) {
                const auto r = picard_solve_implicit(eta[k], zhat[k], t, h, spec, cfg);
                out.y[at(k, i)] = r.value;
                out.z[at(k, i)] = zhat[k];
                stats[k].add(r);
                residual[k] = std::max(residual[k],
                                       std::abs(r.value - spec.f(t, r.value, zhat[k]) * h - eta[k]));
            }
        });
    }
    for (std::size_t k = 0; k < m; ++k) {
        out.picard.merge(stats[k]);
        out.consistency_residual = std::max(out.consistency_residual, residual[k]);
    }
    return out;
}

}  // namespace bdsde
