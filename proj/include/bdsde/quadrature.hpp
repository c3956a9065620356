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

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "bdsde/errors.hpp"

namespace bdsde {

/// Physicists' Gauss-Hermite rule: sum_k w_k p(x_k) = int p(x) e^{-x^2} dx
/// for polynomials p of degree <= 2m - 1.
struct QuadratureRule {
    std::vector<double> nodes;    // ascending, exactly symmetric
    std::vector<double> weights;  // sum = sqrt(pi)

    std::size_t size() const noexcept { return nodes.size(); }
};

/// Newton iteration on the orthonormal Hermite recurrence, seeded with the
/// classical asymptotic root guesses. Nodes are mirrored so the rule is
/// exactly symmetric.
inline QuadratureRule gauss_hermite_rule(int m)
{
    if (m < 1 || m > 64)
        throw InvalidArgument("quadrature nodes: m must be in [1, 64]");
    const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
    std::vector<double> x(m), w(m);
    const int half = (m + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < half; ++i) {
        if (i == 0)
            z = std::sqrt(double(2 * m + 1)) - 1.85575 * std::pow(double(2 * m + 1), -1.0 / 6.0);
        else if (i == 1)
            z -= 1.14 * std::pow(double(m), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * x[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * x[1];
        else
            z = 2.0 * z - x[i - 2];

        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 1; j <= m; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt(double(j - 1) / j) * p3;
            }
            pp = std::sqrt(2.0 * m) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z)))
                break;
        }
        // odd m: the middle root is 0
        if (m % 2 == 1 && i == half - 1)
            z = 0.0;
        x[i] = z;
        w[i] = 2.0 / (pp * pp);
        x[m - 1 - i] = -z;
        w[m - 1 - i] = w[i];
    }
    if (m % 2 == 1) {
        // recompute the middle weight at exactly z = 0
        double p1 = pim4, p2 = 0.0;
        for (int j = 1; j <= m; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = -std::sqrt(double(j - 1) / j) * p3;
        }
        const double pp = std::sqrt(2.0 * m) * p2;
        w[half - 1] = 2.0 / (pp * pp);
    }

    QuadratureRule rule;
    rule.nodes.assign(x.rbegin(), x.rend());
    rule.weights.assign(w.rbegin(), w.rend());
    return rule;
}

}  // namespace bdsde
