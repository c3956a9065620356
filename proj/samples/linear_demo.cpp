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

// Solves the linear test problem on a handful of B paths and prints the
// error of the scheme's Y_0 against the closed form at each refinement.

#include <cstdio>

#include "bdsde/bdsde.hpp"

int main()
{
    using namespace bdsde;
    const ProblemSpec spec(terminal::Exp{0.5}, generator::Linear{0.3, 0.2, {}}, backward::Linear{0.4}, 1.0, 0.0,
                           1.0);
    const auto cf = closed_form(spec);

    // one fine bundle, coarsened for each n so that every level sees the same B paths
    const auto fine = sample_bundle(build_uniform_partition(64, spec.horizon_T()), 4, RngSpec{2026});
    for (std::size_t n : {4, 8, 16, 32, 64}) {
        const auto part = build_uniform_partition(n, spec.horizon_T());
        const PathwiseSolver solver(validate_mesh_condition(part, spec), SchemeConfig{});
        const auto bundle = coarsen_bundle(fine, part);
        std::printf("n=%-3zu", n);
        for (std::size_t k = 0; k < bundle.path_count(); ++k) {
            const auto b = bundle.b_increments(k);
            const auto sol = solver.solve(b);
            const double r = backward_remainders(b)[0];
            std::printf("  %+.2e", sol.u[0](0.0) - cf.Y(0.0, 0.0, r));
        }
        std::printf("\n");
    }
}
