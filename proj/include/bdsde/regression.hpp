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

/// \file regression.hpp
/// Least-squares projection on polynomials of the conditioning state
/// (W_{t_i}, B_T - B_{t_i}): the empirical conditional expectation used by
/// the LSMC engine.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bdsde/errors.hpp"

namespace bdsde {

/// Conditioning state (W_{t_i}, B_T - B_{t_i}).
using State = std::array<double, 2>;

struct BasisSpec {
    int degree = 3;
    /// coordinates that enter the basis
    std::array<bool, 2> active{true, true};
    /// centre and scale each coordinate by its sample mean and deviation
    bool normalize = true;
};

/// Monomials x1^a x2^b with a + b <= degree over the active coordinates.
inline std::vector<std::array<int, 2>> monomial_exponents(const BasisSpec& spec)
{
    std::vector<std::array<int, 2>> out;
    for (int total = 0; total <= spec.degree; ++total)
        for (int a = total; a >= 0; --a) {
            const int b = total - a;
            if ((a > 0 && !spec.active[0]) || (b > 0 && !spec.active[1]))
                continue;
            out.push_back({a, b});
        }
    return out;
}

class RegressionFit {
public:
    double predict(const State& s) const
    {
        const double x0 = (s[0] - shift_[0]) / scale_[0];
        const double x1 = (s[1] - shift_[1]) / scale_[1];
        double v = 0.0;
        for (std::size_t k = 0; k < exponents_.size(); ++k)
            v += coefficients_[k] * ipow(x0, exponents_[k][0]) * ipow(x1, exponents_[k][1]);
        return v;
    }

    const std::vector<double>& coefficients() const noexcept { return coefficients_; }
    const std::vector<std::array<int, 2>>& exponents() const noexcept { return exponents_; }
    double smallest_singular_value() const noexcept { return sigma_min_; }
    double largest_singular_value() const noexcept { return sigma_max_; }
    const State& shift() const noexcept { return shift_; }
    const State& scale() const noexcept { return scale_; }

private:
    friend class LeastSquaresProjector;

    static double ipow(double x, int k)
    {
        double r = 1.0;
        for (int i = 0; i < k; ++i)
            r *= x;
        return r;
    }

    std::vector<std::array<int, 2>> exponents_;
    std::vector<double> coefficients_;
    State shift_{0.0, 0.0};
    State scale_{1.0, 1.0};
    double sigma_min_ = 0.0;
    double sigma_max_ = 0.0;
};

/// QR factorisation of one design matrix, reused for several targets.
class LeastSquaresProjector {
public:
    LeastSquaresProjector(std::span<const State> states, const BasisSpec& spec)
        : exponents_(monomial_exponents(spec))
    {
        const std::size_t m = states.size();
        const std::size_t p = exponents_.size();
        if (m <= p)
            throw InvalidArgument("lsmc: sample count must exceed the basis size");
        if (spec.normalize) {
            for (int d = 0; d < 2; ++d) {
                if (!spec.active[d])
                    continue;
                double mean = 0.0;
                for (const auto& s : states)
                    mean += s[d];
                mean /= double(m);
                double var = 0.0;
                for (const auto& s : states)
                    var += (s[d] - mean) * (s[d] - mean);
                var /= double(m);
                shift_[d] = mean;
                scale_[d] = var > 0.0 ? std::sqrt(var) : 1.0;
            }
        }
        Eigen::MatrixXd design(m, p);
        for (std::size_t i = 0; i < m; ++i) {
            const double x0 = (states[i][0] - shift_[0]) / scale_[0];
            const double x1 = (states[i][1] - shift_[1]) / scale_[1];
            for (std::size_t k = 0; k < p; ++k)
                design(Eigen::Index(i), Eigen::Index(k)) =
                    RegressionFit::ipow(x0, exponents_[k][0]) * RegressionFit::ipow(x1, exponents_[k][1]);
        }
        qr_.compute(design);
        const Eigen::MatrixXd r = qr_.matrixQR().topRows(Eigen::Index(p)).triangularView<Eigen::Upper>();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
        const auto& sv = svd.singularValues();
        sigma_max_ = sv(0);
        sigma_min_ = sv(sv.size() - 1);
        if (!(sigma_min_ >= 1e-10 * sigma_max_))
            throw RankDeficient(sigma_min_, sigma_max_);
        design_ = std::move(design);
    }

    RegressionFit fit(std::span<const double> targets) const
    {
        if (targets.size() != std::size_t(design_.rows()))
            throw InvalidArgument("lsmc: target count does not match sample count");
        const Eigen::Map<const Eigen::VectorXd> y(targets.data(), Eigen::Index(targets.size()));
        const Eigen::VectorXd c = qr_.solve(y);
        RegressionFit f;
        f.exponents_ = exponents_;
        f.coefficients_.assign(c.data(), c.data() + c.size());
        f.shift_ = shift_;
        f.scale_ = scale_;
        f.sigma_min_ = sigma_min_;
        f.sigma_max_ = sigma_max_;
        return f;
    }

    /// Fitted values at the design points.
    std::vector<double> fitted(const RegressionFit& f) const
    {
        const Eigen::Map<const Eigen::VectorXd> c(f.coefficients().data(),
                                                  Eigen::Index(f.coefficients().size()));
        const Eigen::VectorXd v = design_ * c;
        return {v.data(), v.data() + v.size()};
    }

    const Eigen::MatrixXd& design() const noexcept { return design_; }
    std::size_t basis_size() const noexcept { return exponents_.size(); }
    double smallest_singular_value() const noexcept { return sigma_min_; }
    double largest_singular_value() const noexcept { return sigma_max_; }

private:
    std::vector<std::array<int, 2>> exponents_;
    State shift_{0.0, 0.0};
    State scale_{1.0, 1.0};
    Eigen::MatrixXd design_;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr_;
    double sigma_min_ = 0.0;
    double sigma_max_ = 0.0;
};

inline RegressionFit lsmc_fit(std::span<const State> states, std::span<const double> targets,
                              const BasisSpec& spec)
{
    return LeastSquaresProjector(states, spec).fit(targets);
}

inline double lsmc_predict(const RegressionFit& fit, const State& s) { return fit.predict(s); }

}  // namespace bdsde
