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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bdsde/numerics.hpp"
#include "bdsde/oracle.hpp"
#include "bdsde/scheme.hpp"

using namespace bdsde;

namespace {

double bisect(double lo, double hi, double (*fn)(double))
{
    double flo = fn(lo);
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        const double fm = fn(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

ProblemSpec zero_problem(double c)
{
    return ProblemSpec(terminal::Constant{c}, generator::Zero{}, backward::Zero{}, 0.0, 0.0, 1.0);
}

ProblemSpec constant_g_problem(double xi, double c0)
{
    return ProblemSpec(terminal::Constant{xi}, generator::Zero{}, backward::Constant{c0}, 0.0, 0.0, 1.0);
}

ProblemSpec identity_problem()
{
    return ProblemSpec(terminal::Identity{}, generator::Zero{}, backward::Zero{}, 0.0, 0.0, 1.0);
}

ProblemSpec linear_problem()
{
    return ProblemSpec(terminal::Exp{0.5}, generator::Linear{0.3, 0.2, {}}, backward::Linear{0.4}, 1.0, 0.0, 1.0);
}

PathwiseSolver make_solver(const ProblemSpec& s, std::size_t n, SchemeConfig cfg = {})
{
    return PathwiseSolver(validate_mesh_condition(build_uniform_partition(n, s.horizon_T()), s), cfg);
}

}  // namespace

//---------------------------------------------------------------------------//
// Implicit step
//---------------------------------------------------------------------------//

TEST(Picard, ZeroGeneratorIsExplicit)
{
    const auto r = picard_solve_implicit(1.7, 0.3, 0.0, 0.5, [](double, double, double) { return 0.0; });
    EXPECT_EQ(r.value, 1.7);
    EXPECT_EQ(r.iterations, 1);
}

TEST(Picard, LinearDecay)
{
    // y = 1 - y/2
    const auto r = picard_solve_implicit(1.0, 0.0, 0.0, 0.5, [](double, double y, double) { return -y; });
    EXPECT_NEAR(r.value, 2.0 / 3.0, 1e-12);
    EXPECT_LE(r.max_ratio, 0.5 + 1e-9);
}

TEST(Picard, SineMatchesBisection)
{
    const double root = bisect(0.0, 3.0, [](double y) { return y - 1.0 - 0.25 * std::sin(y); });
    const auto r = picard_solve_implicit(1.0, 0.0, 0.0, 0.25,
                                         [](double, double y, double) { return std::sin(y); });
    EXPECT_NEAR(r.value, root, 1e-10);
    EXPECT_LE(std::abs(r.value - 1.0 - 0.25 * std::sin(r.value)), 1e-12);
}

TEST(Picard, ObservedContractionBoundedByHL)
{
    std::mt19937_64 eng(123);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int probe = 0; probe < 1000; ++probe) {
        const double a = u(eng), b = u(eng), amp = 0.5 * u(eng);
        const double L = std::max(std::abs(a) + std::abs(amp), std::abs(b));
        const double hl = 0.9 * (0.5 * (u(eng) + 1.0));
        const double h = L > 0.0 ? hl / L : 0.5;
        const double eta = 5.0 * u(eng), z = 5.0 * u(eng);
        auto f = [&](double, double y, double zz) { return a * y + b * zz + amp * std::sin(y); };
        const auto r = picard_solve_implicit(eta, z, 0.0, h, f, 1e-12, 2000);
        EXPECT_LE(r.max_ratio, h * L + 1e-9) << probe;
        EXPECT_LE(std::abs(r.value - eta - h * f(0.0, r.value, z)), 1e-12 * std::max(1.0, std::abs(r.value)));
    }
}

TEST(Picard, ReportsNoConvergence)
{
    EXPECT_THROW(picard_solve_implicit(1.0, 0.0, 0.0, 0.9, [](double, double y, double) { return y; }, 1e-12, 5),
                 NoConvergence);
    // hL > 1 diverges
    EXPECT_THROW(picard_solve_implicit(1.0, 0.0, 0.0, 2.0, [](double, double y, double) { return y; }),
                 NoConvergence);
}

//---------------------------------------------------------------------------//
// One pathwise step
//---------------------------------------------------------------------------//

TEST(BackwardStep, IdentityTerminal)
{
    const auto spec = identity_problem();
    const auto grid = UniformGrid::symmetric(6.0, 1.0, 129);
    const auto u_next = ValueFunction::sample(grid, [](double w) { return w; });
    const auto st = backward_step_pathwise(u_next, 0.37, 0.75, 0.25, spec, gauss_hermite_rule(12), SchemeConfig{});
    for (std::size_t j = 0; j < grid.size(); ++j) {
        EXPECT_NEAR(st.u.values()[j], grid.node(j), 1e-12);
        EXPECT_NEAR(st.v.values()[j], 1.0, 1e-12);
    }
}

TEST(BackwardStep, ConstantBackwardCoefficient)
{
    const double c0 = 0.7, k = 1.25, db = -0.3;
    const auto spec = constant_g_problem(k, c0);
    const auto grid = UniformGrid::symmetric(6.0, 1.0, 129);
    const ValueFunction u_next(grid, std::vector<double>(grid.size(), k));
    const auto st = backward_step_pathwise(u_next, db, 0.0, 0.25, spec, gauss_hermite_rule(12), SchemeConfig{});
    for (std::size_t j = 0; j < grid.size(); ++j) {
        EXPECT_NEAR(st.u.values()[j], k + c0 * db, 1e-14);
        EXPECT_NEAR(st.v.values()[j], 0.0, 1e-14);
    }
}

TEST(BackwardStep, ExponentialTerminal)
{
    // E e^{w + dW} = E[e^{w + dW} dW] / h = e^{w + h/2}
    const auto spec = ProblemSpec(terminal::Exp{1.0}, generator::Zero{}, backward::Zero{}, 0.0, 0.0, 1.0);
    const auto grid = UniformGrid::symmetric(6.0, 1.0, 129);
    const auto u_next = ValueFunction::sample(grid, [](double w) { return std::exp(w); });
    const auto st = backward_step_pathwise(u_next, 0.1, 0.75, 0.25, spec, gauss_hermite_rule(12), SchemeConfig{});
    // 4-point Lagrange error for e^x: spacing^4 * max|prod (s - k)| / 4! * e^x,
    // with max|prod| = 9/16 on the middle cell
    const double d = grid.spacing();
    const double interp = std::pow(d, 4) * (9.0 / 16.0) / 24.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double w = grid.node(j);
        // beyond |w| ~ 3.25 the outer abscissae leave the grid
        if (std::abs(w) > 3.0)
            continue;
        const double exact = std::exp(w + 0.125);
        EXPECT_NEAR(st.u.values()[j] / exact, 1.0, interp) << w;
        EXPECT_NEAR(st.v.values()[j] / exact, 1.0, interp) << w;
    }
}

TEST(BackwardStep, RejectsBadStep)
{
    const auto grid = UniformGrid::symmetric(6.0, 1.0, 129);
    const auto u = ValueFunction::sample(grid, [](double w) { return w; });
    EXPECT_THROW(backward_step_pathwise(u, 0.0, 0.0, 0.0, identity_problem(), gauss_hermite_rule(12), SchemeConfig{}),
                 InvalidArgument);
}

//---------------------------------------------------------------------------//
// Full pathwise recursion
//---------------------------------------------------------------------------//

TEST(PathwiseSolve, ZeroProblem)
{
    const auto solver = make_solver(zero_problem(2.0), 8);
    const std::vector<double> db = {0.1, -0.2, 0.3, 0.0, 0.5, -0.1, 0.2, 0.05};
    const auto sol = solver.solve(db);
    ASSERT_EQ(sol.u.size(), 9u);
    for (std::size_t i = 0; i <= 8; ++i)
        for (std::size_t j = 0; j < solver.grid().size(); ++j) {
            EXPECT_NEAR(sol.u[i].values()[j], 2.0, 1e-14);
            // weighted / h carries rounding of order 1e-15 / h
            EXPECT_NEAR(sol.v[i].values()[j], 0.0, 1e-13);
        }
}

TEST(PathwiseSolve, ConstantBackwardCoefficientIsExact)
{
    const double xi = 1.5, c0 = 0.7;
    const auto solver = make_solver(constant_g_problem(xi, c0), 16);
    const auto bundle = sample_bundle(solver.pairing().partition(), 5, RngSpec{9});
    for (std::size_t k = 0; k < 5; ++k) {
        const auto db = bundle.b_increments(k);
        const auto sol = solver.solve(db);
        const auto rem = backward_remainders(db);
        for (std::size_t i = 0; i <= 16; ++i)
            for (std::size_t j = 0; j < solver.grid().size(); ++j) {
                EXPECT_NEAR(sol.u[i].values()[j], xi + c0 * rem[i], 1e-12);
                EXPECT_NEAR(sol.v[i].values()[j], 0.0, 1e-12);
            }
    }
}

TEST(PathwiseSolve, LinearProblemNearClosedForm)
{
    // RMS of the Y_0 error over B paths at n = 64; the convergence study sees
    // E max_i |err|^2 ~ 1e-3 at this level
    const auto spec = linear_problem();
    const auto cf = closed_form(spec);
    const auto solver = make_solver(spec, 64);
    const auto bundle = sample_bundle(solver.pairing().partition(), 200, RngSpec{31});
    SampleStats sq;
    for (std::size_t k = 0; k < bundle.path_count(); ++k) {
        const auto db = bundle.b_increments(k);
        const auto sol = solver.solve(db);
        const double e = sol.u[0](0.0) - cf.Y(0.0, 0.0, backward_remainders(db)[0]);
        sq.add(e * e);
    }
    EXPECT_LT(std::sqrt(sq.mean()), 0.05);
}

TEST(PathwiseSolve, TerminalSeedingIsExact)
{
    SchemeConfig cfg;
    cfg.terminal_perturbation = 0.01;
    const auto spec = linear_problem();
    const auto solver = make_solver(spec, 8, cfg);
    const auto bundle = sample_bundle(solver.pairing().partition(), 20, RngSpec{77});
    const auto s = solve_pathwise_bundle(solver, bundle, 1);
    for (std::size_t k = 0; k < 20; ++k) {
        const double wT = forward_values(bundle.w_increments(k))[8];
        EXPECT_EQ(s.y_at(k, 8), spec.phi(wT) + 0.01);
        EXPECT_EQ(s.z_at(k, 8), 0.0);
    }
}

TEST(PathwiseSolve, ConsistencyIdentity)
{
    for (const auto& spec :
         {linear_problem(),
          ProblemSpec(terminal::Call{0.0}, generator::SinLinear{0.1, 0.2, 0.5}, backward::Sin{0.3}, 1.0, 0.0, 1.0)}) {
        const auto solver = make_solver(spec, 16);
        const auto bundle = sample_bundle(solver.pairing().partition(), 10, RngSpec{5});
        for (std::size_t k = 0; k < 10; ++k) {
            const auto sol = solver.solve(bundle.b_increments(k));
            double scale = 1.0;
            for (const auto& u : sol.u)
                for (double x : u.values())
                    scale = std::max(scale, std::abs(x));
            EXPECT_LE(sol.consistency_residual, solver.config().picard_tolerance * scale);
            EXPECT_LE(sol.picard.max_ratio, (1.0 / 16.0) * spec.lipschitz_L() + 1e-9);
        }
    }
}

TEST(PathwiseSolve, ConsistencyResidualRecomputed)
{
    // u_i - f(t_i, u_i, v_i) h equals E[u_{i+1} + g(u_{i+1}) dB_i] at every node
    const auto spec = linear_problem();
    const auto solver = make_solver(spec, 4);
    const std::vector<double> db = {0.2, -0.1, 0.4, -0.3};
    const auto sol = solver.solve(db);
    const auto& grid = solver.grid();
    const auto& part = solver.pairing().partition();
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<double> comb(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double x = sol.u[i + 1].values()[j];
            comb[j] = x + db[i] * spec.g(x);
        }
        const ValueFunction target(grid, comb);
        for (std::size_t j = 0; j < grid.size(); j += 8) {
            const auto e = expect_gaussian(target, grid.node(j), part.step(i), solver.rule());
            const double u = sol.u[i].values()[j], v = sol.v[i].values()[j];
            EXPECT_NEAR(u - spec.f(part.time(i), u, v) * part.step(i), e.plain, 1e-11 * std::max(1.0, std::abs(u)));
            EXPECT_NEAR(v, e.weighted / part.step(i), 1e-11 * std::max(1.0, std::abs(v)));
        }
    }
}

TEST(PathwiseSolve, ZeroBackwardCoefficientIgnoresB)
{
    const auto spec = ProblemSpec(terminal::Call{0.2}, generator::SinLinear{0.1, 0.3, 0.4}, backward::Zero{}, 1.0, 0.0, 1.0);
    const auto solver = make_solver(spec, 8);
    const auto bundle = sample_bundle(solver.pairing().partition(), 4, RngSpec{1});
    const auto ref = solver.solve(bundle.b_increments(0));
    for (std::size_t k = 1; k < 4; ++k) {
        const auto sol = solver.solve(bundle.b_increments(k));
        for (std::size_t i = 0; i <= 8; ++i) {
            EXPECT_TRUE(std::equal(ref.u[i].values().begin(), ref.u[i].values().end(), sol.u[i].values().begin()));
            EXPECT_TRUE(std::equal(ref.v[i].values().begin(), ref.v[i].values().end(), sol.v[i].values().begin()));
        }
    }
}

TEST(PathwiseSolve, RejectsMismatchedIncrements)
{
    const auto solver = make_solver(linear_problem(), 4);
    const std::vector<double> db(3, 0.0);
    EXPECT_THROW(solver.solve(db), InvalidArgument);
}

//---------------------------------------------------------------------------//
// Evaluation along paths
//---------------------------------------------------------------------------//

TEST(EvaluateAlongPath, ZeroProblemIsConstant)
{
    const auto solver = make_solver(zero_problem(-0.5), 6);
    const auto bundle = sample_bundle(solver.pairing().partition(), 3, RngSpec{2});
    for (std::size_t k = 0; k < 3; ++k) {
        const auto ev = evaluate_along_path(solver.solve(bundle.b_increments(k)), bundle.w_increments(k));
        for (double y : ev.y)
            EXPECT_NEAR(y, -0.5, 1e-14);
    }
}

TEST(EvaluateAlongPath, IdentityTerminalTracksW)
{
    const auto solver = make_solver(identity_problem(), 10);
    const auto bundle = sample_bundle(solver.pairing().partition(), 5, RngSpec{3});
    for (std::size_t k = 0; k < 5; ++k) {
        const auto ev = evaluate_along_path(solver.solve(bundle.b_increments(k)), bundle.w_increments(k));
        const auto wv = forward_values(bundle.w_increments(k));
        for (std::size_t i = 0; i <= 10; ++i) {
            EXPECT_NEAR(ev.y[i], wv[i], 1e-12);
            EXPECT_NEAR(ev.z[i], i < 10 ? 1.0 : 0.0, 1e-12);
        }
    }
}

TEST(EvaluateAlongPath, AgreesWithShiftedGridResolve)
{
    // the same problem on a grid with different nodes gives the same values
    // along the path up to interpolation error
    const auto spec = linear_problem();
    SchemeConfig shifted;
    shifted.grid.kappa = 6.3;
    shifted.grid.nodes = 137;
    const auto a = make_solver(spec, 16);
    const auto b = make_solver(spec, 16, shifted);
    const auto bundle = sample_bundle(a.pairing().partition(), 10, RngSpec{4});
    for (std::size_t k = 0; k < 10; ++k) {
        const auto ea = evaluate_along_path(a.solve(bundle.b_increments(k)), bundle.w_increments(k));
        const auto eb = evaluate_along_path(b.solve(bundle.b_increments(k)), bundle.w_increments(k));
        for (std::size_t i = 0; i <= 16; ++i) {
            EXPECT_NEAR(ea.y[i], eb.y[i], 1e-5 * std::max(1.0, std::abs(ea.y[i])));
            EXPECT_NEAR(ea.z[i], eb.z[i], 1e-5 * std::max(1.0, std::abs(ea.z[i])));
        }
    }
}

TEST(SolvePathwiseBundle, ThreadCountDoesNotMatter)
{
    const auto solver = make_solver(linear_problem(), 8);
    const auto bundle = sample_bundle(solver.pairing().partition(), 33, RngSpec{6});
    const auto one = solve_pathwise_bundle(solver, bundle, 1);
    const auto many = solve_pathwise_bundle(solver, bundle, 8);
    EXPECT_EQ(one.y, many.y);
    EXPECT_EQ(one.z, many.z);
    EXPECT_EQ(one.extrapolated, many.extrapolated);
}

//---------------------------------------------------------------------------//
// LSMC
//---------------------------------------------------------------------------//

TEST(Lsmc, ZeroProblem)
{
    const double c = 2.0;
    const auto spec = zero_problem(c);
    const auto part = build_uniform_partition(4, 1.0);
    const std::size_t M = 2000;
    const auto bundle = sample_bundle(part, M, RngSpec{8});
    SchemeConfig cfg;
    cfg.engine = Engine::lsmc;
    const auto s = solve_lsmc(validate_mesh_condition(part, spec), bundle, cfg, 1);
    for (std::size_t k = 0; k < M; ++k)
        for (std::size_t i = 0; i <= 4; ++i)
            EXPECT_NEAR(s.y_at(k, i), c, 1e-10);
    // the constant basis function makes the mean fitted Z equal the mean of the
    // targets c dW_i / h, whose standard error is c / sqrt(h M)
    for (std::size_t i = 0; i < 4; ++i) {
        SampleStats z;
        for (std::size_t k = 0; k < M; ++k)
            z.add(s.z_at(k, i));
        const double se = c / std::sqrt(part.step(i) * double(M));
        EXPECT_LE(std::abs(z.mean()), 5.0 * se) << i;
    }
}

TEST(Lsmc, IdentityTerminalConvergesToW)
{
    // the target W_{i+1} = W_i + dW_i lies in the span up to the projected
    // noise dW_i, whose in-sample RMS is sqrt(p h / M); it accumulates over the
    // remaining steps
    const auto spec = identity_problem();
    const auto part = build_uniform_partition(8, 1.0);
    SchemeConfig cfg;
    cfg.engine = Engine::lsmc;
    cfg.lsmc_degree = 1;
    const double p = 3.0;
    std::vector<double> rms_at_zero;
    for (std::size_t M : {1000u, 16000u}) {
        const auto bundle = sample_bundle(part, M, RngSpec{10});
        const auto s = solve_lsmc(validate_mesh_condition(part, spec), bundle, cfg, 1);
        for (std::size_t i = 0; i <= 8; ++i) {
            SampleStats sq;
            for (std::size_t k = 0; k < M; ++k) {
                const double e = s.y_at(k, i) - forward_values(bundle.w_increments(k))[i];
                sq.add(e * e);
            }
            const double bound = 2.0 * std::sqrt(p * (1.0 - part.time(i)) / double(M));
            EXPECT_LE(std::sqrt(sq.mean()), bound + 1e-12) << M << ' ' << i;
            if (i == 0)
                rms_at_zero.push_back(std::sqrt(sq.mean()));
        }
    }
    EXPECT_LT(rms_at_zero[1], rms_at_zero[0] / 2.0);
}

TEST(Lsmc, ConsistencyAndTerminal)
{
    const auto spec = linear_problem();
    const auto part = build_uniform_partition(8, 1.0);
    const auto bundle = sample_bundle(part, 5000, RngSpec{12});
    SchemeConfig cfg;
    cfg.engine = Engine::lsmc;
    const auto s = solve_lsmc(validate_mesh_condition(part, spec), bundle, cfg, 2);
    double scale = 1.0;
    for (double y : s.y)
        scale = std::max(scale, std::abs(y));
    EXPECT_LE(s.consistency_residual, cfg.picard_tolerance * scale);
    for (std::size_t k = 0; k < 5000; k += 97) {
        EXPECT_EQ(s.y_at(k, 8), spec.phi(forward_values(bundle.w_increments(k))[8]));
        EXPECT_EQ(s.z_at(k, 8), 0.0);
    }
    ASSERT_EQ(s.diagnostics.size(), 8u);
    // W_{t_0} = 0 on every path, so only B_T enters at the first step
    EXPECT_EQ(s.diagnostics[0].basis_size, 4u);
    EXPECT_EQ(s.diagnostics[1].basis_size, 10u);
}

TEST(Lsmc, ThreadCountDoesNotMatter)
{
    const auto spec = linear_problem();
    const auto part = build_uniform_partition(4, 1.0);
    const auto bundle = sample_bundle(part, 3000, RngSpec{13});
    SchemeConfig cfg;
    cfg.engine = Engine::lsmc;
    const auto pairing = validate_mesh_condition(part, spec);
    const auto a = solve_lsmc(pairing, bundle, cfg, 1);
    const auto b = solve_lsmc(pairing, bundle, cfg, 8);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.z, b.z);
}

TEST(Lsmc, NeedsTenPathsPerBasisFunction)
{
    const auto spec = linear_problem();
    const auto part = build_uniform_partition(4, 1.0);
    SchemeConfig cfg;
    cfg.engine = Engine::lsmc;
    EXPECT_THROW(solve_lsmc(validate_mesh_condition(part, spec), sample_bundle(part, 99, RngSpec{1}), cfg),
                 InvalidArgument);
    EXPECT_NO_THROW(solve_lsmc(validate_mesh_condition(part, spec), sample_bundle(part, 100, RngSpec{1}), cfg));
}

TEST(SchemeConfig, Validation)
{
    SchemeConfig c;
    EXPECT_NO_THROW(c.validate());
    c.picard_tolerance = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.picard_max_iterations = 0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.quadrature_nodes = 65;
    EXPECT_THROW(c.validate(), InvalidArgument);
}
