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

/// \file oracle.hpp
/// Ground truth for the linear BDSDE
///
///   Y_t = xi + int_t^T (alpha_s Y_s + beta_s Z_s + f_s) ds + int_t^T gamma_s Y_s dB<-_s - int_t^T Z_s dW_s
///
/// through its representation Y_t = rho_t^{-1} E(xi rho_T + int_t^T rho_s f_s ds | G_t),
/// where G_t holds W up to t and all of B, and
///
///   rho_t = exp(int_0^t beta dW + int_0^t gamma dB<- + int_0^t (alpha - beta^2/2 - gamma^2/2) ds).
///
/// For constant coefficients and zero forcing the conditional expectation is a
/// one-dimensional Gaussian integral, which gives the closed forms below.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bdsde/core.hpp"
#include "bdsde/errors.hpp"
#include "bdsde/numerics.hpp"
#include "bdsde/parallel.hpp"
#include "bdsde/paths.hpp"
#include "bdsde/quadrature.hpp"

namespace bdsde {

/// Linear BDSDE with deterministic coefficients.
///
/// `backward_constant` c0 adds c0 dB<- to the backward integral; it is only
/// accepted when the linear coefficients and the forcing vanish, where the
/// solution is E[xi | W_t] + c0 (B_T - B_t).
struct LinearProblem {
    TimeFunction alpha;
    TimeFunction beta;
    TimeFunction gamma;
    TimeFunction forcing;
    Terminal terminal = terminal::Identity{};
    double horizon = 1.0;
    /// declared bound L with |alpha| + |beta| + |gamma| <= L
    double bound_L = 0.0;
    double backward_constant = 0.0;

    bool has_constant_coefficients() const
    {
        return alpha.is_constant() && beta.is_constant() && gamma.is_constant();
    }

    void validate() const
    {
        if (!(horizon > 0.0))
            throw InvalidArgument("horizon_T: must be positive");
        const double sum = alpha.sup_norm(horizon) + beta.sup_norm(horizon) + gamma.sup_norm(horizon);
        if (sum > bound_L * (1.0 + 1e-12))
            throw InvalidArgument("bound_L: |alpha| + |beta| + |gamma| = " + std::to_string(sum) +
                                  " exceeds the declared bound");
        if (backward_constant != 0.0 &&
            !(alpha.is_zero() && beta.is_zero() && gamma.is_zero() && forcing.is_zero()))
            throw UnsupportedFamily(
                "backward_constant: only supported with zero linear coefficients and forcing");
    }
};

/// Reads a ProblemSpec as a linear BDSDE; UnsupportedFamily for nonlinear f or g.
inline LinearProblem to_linear_problem(const ProblemSpec& s)
{
    LinearProblem p;
    p.terminal = s.terminal();
    p.horizon = s.horizon_T();
    if (const auto* lin = std::get_if<generator::Linear>(&s.generator())) {
        p.alpha = TimeFunction::constant(lin->alpha);
        p.beta = TimeFunction::constant(lin->beta);
        p.forcing = lin->forcing;
    } else if (!std::holds_alternative<generator::Zero>(s.generator())) {
        throw UnsupportedFamily("generator: no linear representation for this family");
    }
    const auto& g = s.backward_coeff();
    if (const auto* lin = std::get_if<backward::Linear>(&g))
        p.gamma = TimeFunction::constant(lin->gamma);
    else if (const auto* c = std::get_if<backward::Constant>(&g))
        p.backward_constant = c->value;
    else if (!std::holds_alternative<backward::Zero>(g))
        throw UnsupportedFamily("backward_coeff: no linear representation for this family");
    p.bound_L = p.alpha.sup_norm(p.horizon) + p.beta.sup_norm(p.horizon) + p.gamma.sup_norm(p.horizon);
    p.validate();
    return p;
}

/// rho_t for constant coefficients given w = W_t and b = B_t
/// (the backward integral of a constant gamma over [0, t] is gamma B_t).
inline double rho_at(const LinearProblem& p, double t, double w, double b)
{
    if (!p.has_constant_coefficients())
        throw UnsupportedFamily("rho_at: time-dependent coefficients need a path, use representation_mc");
    const double a = p.alpha(0.0), be = p.beta(0.0), ga = p.gamma(0.0);
    return std::exp(be * w + ga * b + (a - 0.5 * be * be - 0.5 * ga * ga) * t);
}

namespace detail {
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double normal_pdf(double x)
{
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}
}  // namespace detail

/// Exact (Y, Z) of a constant-coefficient, unforced linear problem as
/// functions of (t, W_t, B_T - B_t).
class ClosedFormSolution {
public:
    explicit ClosedFormSolution(const LinearProblem& p) : problem_(p)
    {
        p.validate();
        if (!p.has_constant_coefficients())
            throw UnsupportedFamily("closed form: coefficients must be constant");
        if (!p.forcing.is_zero())
            throw UnsupportedFamily("closed form: forcing must vanish");
        alpha_ = p.alpha(0.0);
        beta_ = p.beta(0.0);
        gamma_ = p.gamma(0.0);
        k0_ = alpha_ - 0.5 * beta_ * beta_ - 0.5 * gamma_ * gamma_;
    }

    /// alpha - beta^2/2 - gamma^2/2
    double k0() const noexcept { return k0_; }
    double horizon() const noexcept { return problem_.horizon; }
    const LinearProblem& problem() const noexcept { return problem_; }

    /// Test hook: multiplies the returned Y and Z.
    void set_scale(double s) noexcept { scale_ = s; }

    double Y(double t, double w, double r) const { return scale_ * value(t, w, r, false); }
    double Z(double t, double w, double r) const { return scale_ * value(t, w, r, true); }

private:
    double value(double t, double w, double r, bool derivative) const
    {
        const double tau = problem_.horizon - t;
        // exp(int_t^T gamma dB<- + K0 tau) times the W-expectation under the
        // beta-tilted measure, which shifts W_T - W_t by beta tau
        const double common = std::exp(gamma_ * r + k0_ * tau + 0.5 * beta_ * beta_ * tau);
        const double shifted = w + beta_ * tau;
        const double additive = derivative ? 0.0 : problem_.backward_constant * r;
        return std::visit(
            [&](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, terminal::Identity>) {
                    return (derivative ? common : common * shifted) + additive;
                } else if constexpr (std::is_same_v<K, terminal::Constant>) {
                    return (derivative ? 0.0 : common * k.value) + additive;
                } else if constexpr (std::is_same_v<K, terminal::Exp>) {
                    const double c = k.rate;
                    const double y = std::exp(c * w + gamma_ * r +
                                              (k0_ + 0.5 * (c + beta_) * (c + beta_)) * tau);
                    return (derivative ? c * y : y) + additive;
                } else {
                    const double x = shifted - k.strike;
                    if (tau <= 0.0)
                        return (derivative ? common * (x > 0.0 ? 1.0 : 0.0)
                                           : common * std::max(x, 0.0)) +
                               additive;
                    const double sd = std::sqrt(tau);
                    const double d = x / sd;
                    if (derivative)
                        return common * detail::normal_cdf(d);
                    return common * (x * detail::normal_cdf(d) + sd * detail::normal_pdf(d)) + additive;
                }
            },
            problem_.terminal);
    }

    LinearProblem problem_;
    double alpha_ = 0.0;
    double beta_ = 0.0;
    double gamma_ = 0.0;
    double k0_ = 0.0;
    double scale_ = 1.0;
};

inline ClosedFormSolution closed_form(const LinearProblem& p) { return ClosedFormSolution(p); }

inline ClosedFormSolution closed_form(const ProblemSpec& s)
{
    return ClosedFormSolution(to_linear_problem(s));
}

//---------------------------------------------------------------------------//
// Monte Carlo of the representation
//---------------------------------------------------------------------------//

/// Realised B increments on a uniform grid of [start, horizon].
struct BSegment {
    double start = 0.0;
    double horizon = 1.0;
    std::vector<double> increments;

    double total() const
    {
        double s = 0.0;
        for (double x : increments)
            s += x;
        return s;
    }
};

inline BSegment sample_b_segment(double start, double horizon, std::size_t cells,
                                 std::mt19937_64& eng)
{
    BSegment seg{start, horizon, std::vector<double>(cells)};
    const double sd = std::sqrt((horizon - start) / double(cells));
    for (auto& x : seg.increments)
        x = sd * standard_normal(eng);
    return seg;
}

struct McEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
};

struct RepresentationOptions {
    std::size_t samples = 100000;
    std::size_t batches = 100;
    RngSpec rng;
    /// substream namespace so separate probes never share draws
    std::uint64_t probe = 0;
    unsigned threads = 0;
};

/// rho_t^{-1} E(xi rho_T + int_t^T rho_s f_s ds | G_t) by Monte Carlo over
/// W on [t, T] with the B path held fixed; batch-mean standard error.
///
/// Constant coefficients without forcing need only W_T - W_t. Otherwise W is
/// simulated on the segment's grid: Ito sums for beta dW, right-endpoint sums
/// for gamma dB<-, trapezoid rule in time.
inline McEstimate representation_mc(const LinearProblem& p, double t, double w, const BSegment& seg,
                                    const RepresentationOptions& opt)
{
    p.validate();
    if (opt.samples < 100)
        throw InvalidArgument("samples: representation_mc needs at least 100 samples");
    if (seg.increments.empty())
        throw InvalidArgument("b_path: empty B segment");
    const double tau = p.horizon - t;
    const double r = seg.total();
    const std::size_t batches = std::clamp<std::size_t>(opt.batches, 2, opt.samples / 2);
    const std::size_t per_batch = opt.samples / batches;
    const bool simple = p.has_constant_coefficients() && p.forcing.is_zero();

    std::vector<double> means(batches);
    parallel_for(batches, opt.threads, [&](std::size_t begin, std::size_t end) {
        const std::size_t cells = seg.increments.size();
        const double ds = tau / double(cells);
        std::vector<double> rho(cells + 1), s(cells + 1);
        for (std::size_t j = 0; j <= cells; ++j)
            s[j] = t + ds * double(j);
        for (std::size_t bi = begin; bi < end; ++bi) {
            auto eng = opt.rng.engine(opt.probe * 65536 + bi, stream::oracle);
            SampleStats acc;
            for (std::size_t q = 0; q < per_batch; ++q) {
                double value;
                if (simple) {
                    const double a = p.alpha(t), be = p.beta(t), ga = p.gamma(t);
                    const double x = std::sqrt(tau) * standard_normal(eng);
                    value = evaluate(p.terminal, w + x) *
                            std::exp(be * x + ga * r + (a - 0.5 * be * be - 0.5 * ga * ga) * tau);
                } else {
                    double log_rho = 0.0, wsum = 0.0;
                    CompensatedSum forcing_integral;
                    rho[0] = 1.0;
                    auto drift = [&](double u) {
                        const double be = p.beta(u), ga = p.gamma(u);
                        return p.alpha(u) - 0.5 * be * be - 0.5 * ga * ga;
                    };
                    for (std::size_t j = 0; j < cells; ++j) {
                        const double dw = std::sqrt(ds) * standard_normal(eng);
                        log_rho += p.beta(s[j]) * dw + p.gamma(s[j + 1]) * seg.increments[j] +
                                   0.5 * (drift(s[j]) + drift(s[j + 1])) * ds;
                        wsum += dw;
                        rho[j + 1] = std::exp(log_rho);
                        forcing_integral.add(0.5 * ds *
                                             (rho[j] * p.forcing(s[j]) + rho[j + 1] * p.forcing(s[j + 1])));
                    }
                    value = evaluate(p.terminal, w + wsum) * rho[cells] + forcing_integral.value();
                }
                acc.add(value + p.backward_constant * r);
            }
            means[bi] = acc.mean();
        }
    });
    SampleStats over;
    for (double m : means)
        over.add(m);
    return {over.mean(), over.standard_error()};
}

//---------------------------------------------------------------------------//
// Certification
//---------------------------------------------------------------------------//

struct CertificationOptions {
    std::size_t probes = 5;
    std::size_t samples = 100000;
    std::size_t segment_cells = 256;
    double sigma_tolerance = 3.0;
    std::uint64_t seed = 20260101;
    /// multiplies the closed form; anything but 1 is a deliberate fault
    double closed_form_scale = 1.0;
    unsigned threads = 0;
};

struct ProbeRow {
    std::size_t id = 0;
    double t = 0.0;
    double w = 0.0;
    double b_remainder = 0.0;
    double closed_form = 0.0;
    double mc_estimate = 0.0;
    double standard_error = 0.0;
    bool pass = false;
};

struct CertificationReport {
    std::vector<ProbeRow> rows;
    bool passed = false;
};

/// Compares the closed form with representation_mc at independent
/// (t, W_t, B path) probes. A probe passes when the two agree within
/// sigma_tolerance standard errors (or to 1e-12 when the estimator has no
/// variance).
inline CertificationReport certify_closed_form(const LinearProblem& p, const CertificationOptions& opt)
{
    ClosedFormSolution cf(p);
    cf.set_scale(opt.closed_form_scale);
    const RngSpec rng{opt.seed};
    CertificationReport rep;
    rep.passed = true;
    for (std::size_t id = 0; id < opt.probes; ++id) {
        auto eng = rng.engine(id, stream::oracle + 1);
        const double u = (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
        const double t = 0.9 * p.horizon * u;
        const double w = std::sqrt(t) * standard_normal(eng);
        const auto seg = sample_b_segment(t, p.horizon, opt.segment_cells, eng);
        RepresentationOptions ro;
        ro.samples = opt.samples;
        ro.rng = rng;
        ro.probe = id + 1;
        ro.threads = opt.threads;
        const auto est = representation_mc(p, t, w, seg, ro);
        ProbeRow row;
        row.id = id;
        row.t = t;
        row.w = w;
        row.b_remainder = seg.total();
        row.closed_form = cf.Y(t, w, row.b_remainder);
        row.mc_estimate = est.estimate;
        row.standard_error = est.standard_error;
        const double diff = std::abs(row.closed_form - row.mc_estimate);
        row.pass = est.standard_error > 0.0
                       ? diff <= opt.sigma_tolerance * est.standard_error
                       : diff <= 1e-12 * std::max(1.0, std::abs(row.closed_form));
        rep.passed = rep.passed && row.pass;
        rep.rows.push_back(row);
    }
    return rep;
}

/// A closed form that has passed certification.
class CertifiedOracle {
public:
    static CertifiedOracle certify(const LinearProblem& p, const CertificationOptions& opt)
    {
        auto rep = certify_closed_form(p, opt);
        if (!rep.passed)
            throw UncertifiedOracle("oracle: closed form disagrees with the representation Monte Carlo");
        ClosedFormSolution cf(p);
        cf.set_scale(opt.closed_form_scale);
        return CertifiedOracle(std::move(cf), std::move(rep));
    }

    const ClosedFormSolution& solution() const noexcept { return cf_; }
    const CertificationReport& report() const noexcept { return report_; }

private:
    CertifiedOracle(ClosedFormSolution cf, CertificationReport rep)
        : cf_(std::move(cf)), report_(std::move(rep))
    {}

    ClosedFormSolution cf_;
    CertificationReport report_;
};

//---------------------------------------------------------------------------//
// Hoelder ratios E|X_t - X_s|^p / |t - s|^{p/2} of the exact solution
//---------------------------------------------------------------------------//

enum class Quantity { Y, Z };

struct TimePair {
    double s = 0.0;
    double t = 0.0;
};

struct PairRatio {
    TimePair pair;
    double ratio = 0.0;
    double standard_error = 0.0;
};

struct HolderSummary {
    std::vector<PairRatio> pairs;
    double max_ratio = 0.0;
    double max_standard_error = 0.0;
};

namespace detail {
inline HolderSummary summarize(std::vector<PairRatio> pairs)
{
    HolderSummary h;
    h.pairs = std::move(pairs);
    for (const auto& r : h.pairs)
        if (r.ratio >= h.max_ratio) {
            h.max_ratio = r.ratio;
            h.max_standard_error = r.standard_error;
        }
    return h;
}

/// X_t - X_s from the four independent Gaussian coordinates
/// W_s, W_t - W_s, B_t - B_s, B_T - B_t.
inline double increment(const ClosedFormSolution& cf, Quantity q, const TimePair& pr, double ws,
                        double dw, double db, double rem)
{
    if (q == Quantity::Y)
        return cf.Y(pr.t, ws + dw, rem) - cf.Y(pr.s, ws, rem + db);
    return cf.Z(pr.t, ws + dw, rem) - cf.Z(pr.s, ws, rem + db);
}
}  // namespace detail

/// Deterministic ratio by tensor Gauss-Hermite quadrature over the four
/// Gaussian coordinates; exact for polynomial increments of degree < 2m.
inline HolderSummary holder_ratio_quadrature(const ClosedFormSolution& cf, Quantity q,
                                             std::span<const TimePair> pairs, double p_exp,
                                             int nodes = 16)
{
    const auto rule = gauss_hermite_rule(nodes);
    const std::size_t m = rule.size();
    std::vector<double> prob(m);
    for (std::size_t k = 0; k < m; ++k)
        prob[k] = rule.weights[k] / std::sqrt(std::numbers::pi);
    const double T = cf.horizon();
    std::vector<PairRatio> out;
    for (const auto& pr : pairs) {
        if (!(pr.s >= 0.0 && pr.t > pr.s && pr.t <= T * (1.0 + 1e-15)))
            throw InvalidArgument("pairs: need 0 <= s < t <= T");
        const double d = pr.t - pr.s;
        const double sc_ws = std::sqrt(2.0 * pr.s), sc_d = std::sqrt(2.0 * d),
                     sc_r = std::sqrt(2.0 * std::max(0.0, T - pr.t));
        CompensatedSum acc;
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
                for (std::size_t c = 0; c < m; ++c) {
                    const double wabc = prob[a] * prob[b] * prob[c];
                    for (std::size_t e = 0; e < m; ++e) {
                        const double x = detail::increment(cf, q, pr, sc_ws * rule.nodes[a],
                                                           sc_d * rule.nodes[b], sc_d * rule.nodes[c],
                                                           sc_r * rule.nodes[e]);
                        acc.add(wabc * prob[e] * std::pow(std::abs(x), p_exp));
                    }
                }
        out.push_back({pr, acc.value() / std::pow(d, 0.5 * p_exp), 0.0});
    }
    return detail::summarize(std::move(out));
}

/// Monte Carlo ratio with standard error; each pair uses its own substream.
inline HolderSummary holder_ratio_mc(const ClosedFormSolution& cf, Quantity q,
                                     std::span<const TimePair> pairs, std::size_t samples,
                                     double p_exp, const RngSpec& rng)
{
    const double T = cf.horizon();
    std::vector<PairRatio> out;
    std::uint64_t id = 0;
    for (const auto& pr : pairs) {
        if (!(pr.s >= 0.0 && pr.t > pr.s && pr.t <= T * (1.0 + 1e-15)))
            throw InvalidArgument("pairs: need 0 <= s < t <= T");
        const double d = pr.t - pr.s;
        const double norm = std::pow(d, 0.5 * p_exp);
        auto eng = rng.engine(id++, stream::oracle + 2);
        SampleStats acc;
        for (std::size_t k = 0; k < samples; ++k) {
            const double ws = std::sqrt(pr.s) * standard_normal(eng);
            const double dw = std::sqrt(d) * standard_normal(eng);
            const double db = std::sqrt(d) * standard_normal(eng);
            const double rem = std::sqrt(std::max(0.0, T - pr.t)) * standard_normal(eng);
            acc.add(std::pow(std::abs(detail::increment(cf, q, pr, ws, dw, db, rem)), p_exp) / norm);
        }
        out.push_back({pr, acc.mean(), acc.standard_error()});
    }
    return detail::summarize(std::move(out));
}

/// Pairs (k delta, (k + 1) delta) for delta = T / 2^level, k = 0 .. 2^level - 1.
inline std::vector<TimePair> dyadic_pairs(double horizon, int level)
{
    const std::size_t count = std::size_t(1) << level;
    const double delta = horizon / double(count);
    std::vector<TimePair> out;
    for (std::size_t k = 0; k < count; ++k)
        out.push_back({delta * double(k), k + 1 == count ? horizon : delta * double(k + 1)});
    return out;
}

}  // namespace bdsde
