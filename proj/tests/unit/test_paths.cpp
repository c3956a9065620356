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
#include <sstream>

#include <gtest/gtest.h>

#include "bdsde/numerics.hpp"
#include "bdsde/paths.hpp"

using namespace bdsde;

TEST(SampleBundle, AntitheticPairs)
{
    const auto b = sample_bundle(build_uniform_partition(1, 1.0), 2, RngSpec{17}, true);
    EXPECT_EQ(b.w_increments(1)[0], -b.w_increments(0)[0]);
    EXPECT_EQ(b.b_increments(1)[0], -b.b_increments(0)[0]);
    EXPECT_NE(b.w_increments(0)[0], 0.0);
}

TEST(SampleBundle, RejectsBadCounts)
{
    const auto p = build_uniform_partition(4, 1.0);
    EXPECT_THROW(sample_bundle(p, 3, RngSpec{1}, true), InvalidArgument);
    EXPECT_THROW(sample_bundle(p, 0, RngSpec{1}), InvalidArgument);
}

TEST(SampleBundle, SameSeedSameBundle)
{
    const auto p = build_uniform_partition(8, 1.0);
    EXPECT_EQ(sample_bundle(p, 50, RngSpec{99}), sample_bundle(p, 50, RngSpec{99}));
    EXPECT_NE(sample_bundle(p, 50, RngSpec{99}).w_block(), sample_bundle(p, 50, RngSpec{100}).w_block());
}

TEST(SampleBundle, ThreadCountDoesNotMatter)
{
    const auto p = build_uniform_partition(16, 1.0);
    const auto one = sample_bundle(p, 997, RngSpec{5}, false, 1);
    EXPECT_EQ(one, sample_bundle(p, 997, RngSpec{5}, false, 8));
    EXPECT_EQ(one, sample_bundle(p, 997, RngSpec{5}, false, 3));
    const auto anti = sample_bundle(p, 998, RngSpec{5}, true, 1);
    EXPECT_EQ(anti, sample_bundle(p, 998, RngSpec{5}, true, 8));
}

TEST(SampleBundle, PathDependsOnlyOnSeedAndIndex)
{
    const auto p = build_uniform_partition(4, 1.0);
    const auto small = sample_bundle(p, 3, RngSpec{42});
    const auto large = sample_bundle(p, 300, RngSpec{42});
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < 4; ++i) {
            EXPECT_EQ(small.w_increments(k)[i], large.w_increments(k)[i]);
            EXPECT_EQ(small.b_increments(k)[i], large.b_increments(k)[i]);
        }
}

TEST(SampleBundle, MomentsAndIndependence)
{
    const std::size_t M = 10000;
    const Partition p({0.0, 0.1, 0.35, 0.6, 1.0});
    const auto b = sample_bundle(p, M, RngSpec{2024});
    const double rm = 1.0 / std::sqrt(double(M));
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p.step(i);
        for (Driver drv : {Driver::W, Driver::B}) {
            SampleStats s;
            for (std::size_t k = 0; k < M; ++k)
                s.add(b.increments(drv, k)[i]);
            EXPECT_LE(std::abs(s.mean()), 5.0 * rm * std::sqrt(d));
            EXPECT_LE(std::abs(s.variance() - d), 10.0 * rm * d);
        }
        for (std::size_t j = 0; j < p.size(); ++j) {
            double sxy = 0.0, sxx = 0.0, syy = 0.0;
            for (std::size_t k = 0; k < M; ++k) {
                const double x = b.w_increments(k)[i], y = b.b_increments(k)[j];
                sxy += x * y;
                sxx += x * x;
                syy += y * y;
            }
            EXPECT_LE(std::abs(sxy / std::sqrt(sxx * syy)), 5.0 * rm) << i << ' ' << j;
        }
    }
}

TEST(BrownianValue, PartialSums)
{
    const auto b = sample_bundle(build_uniform_partition(6, 1.0), 4, RngSpec{3});
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(brownian_value(b, k, Driver::W, 0), 0.0);
        EXPECT_EQ(brownian_value(b, k, Driver::B, 0), 0.0);
        double total = 0.0;
        for (double x : b.b_increments(k))
            total += x;
        EXPECT_DOUBLE_EQ(brownian_value(b, k, Driver::B, 6), total);
        for (std::size_t i = 0; i < 6; ++i)
            EXPECT_NEAR(brownian_value(b, k, Driver::W, i + 1) - brownian_value(b, k, Driver::W, i),
                        b.w_increments(k)[i], 1e-14);
    }
    EXPECT_THROW(brownian_value(b, 0, Driver::W, 7), InvalidArgument);
    EXPECT_THROW(brownian_value(b, 4, Driver::W, 0), InvalidArgument);
}

TEST(BrownianValue, ForwardAndBackwardHelpers)
{
    const auto b = sample_bundle(build_uniform_partition(5, 1.0), 1, RngSpec{8});
    const auto wv = forward_values(b.w_increments(0));
    const auto rv = backward_remainders(b.b_increments(0));
    ASSERT_EQ(wv.size(), 6u);
    ASSERT_EQ(rv.size(), 6u);
    EXPECT_EQ(rv[5], 0.0);
    for (std::size_t i = 0; i <= 5; ++i) {
        EXPECT_NEAR(wv[i], brownian_value(b, 0, Driver::W, i), 1e-14);
        EXPECT_NEAR(rv[i], brownian_value(b, 0, Driver::B, 5) - brownian_value(b, 0, Driver::B, i), 1e-14);
    }
}

TEST(BackwardItoSum, ConstantIntegrandTelescopes)
{
    const auto b = sample_bundle(build_uniform_partition(10, 1.0), 3, RngSpec{11});
    const double gamma = 0.7;
    for (std::size_t k = 0; k < 3; ++k) {
        const std::vector<double> h(6, gamma);
        const double expect =
            gamma * (brownian_value(b, k, Driver::B, 8) - brownian_value(b, k, Driver::B, 2));
        EXPECT_NEAR(backward_ito_sum(b, k, h, 2, 8), expect, 1e-14);
        const std::vector<double> zero(6, 0.0);
        EXPECT_EQ(backward_ito_sum(b, k, zero, 2, 8), 0.0);
    }
}

TEST(BackwardItoSum, RejectsMismatch)
{
    const auto b = sample_bundle(build_uniform_partition(4, 1.0), 1, RngSpec{1});
    const std::vector<double> h(3, 1.0);
    EXPECT_THROW(backward_ito_sum(b, 0, h, 0, 4), InvalidArgument);
    EXPECT_THROW(backward_ito_sum(b, 0, h, 2, 1), InvalidArgument);
    EXPECT_THROW(backward_ito_sum(b, 0, h, 2, 5), InvalidArgument);
}

TEST(BackwardItoSum, RightEndpointExpectation)
{
    // E[B_{t_{i+1}} dB_i] = Delta_i, so the mean of the sum over [j, n) is T - t_j,
    // while E[dB_i] = 0
    const std::size_t M = 100000, n = 8, j = 3;
    const auto p = build_uniform_partition(n, 1.0);
    const auto b = sample_bundle(p, M, RngSpec{777});
    SampleStats sum, plain;
    std::vector<double> h(n - j);
    for (std::size_t k = 0; k < M; ++k) {
        for (std::size_t i = j; i < n; ++i)
            h[i - j] = brownian_value(b, k, Driver::B, i + 1);
        sum.add(backward_ito_sum(b, k, h, j, n));
        plain.add(b.b_increments(k)[j]);
    }
    const double expect = 1.0 - p.time(j);
    EXPECT_LE(std::abs(sum.mean() - expect), 5.0 * sum.standard_error());
    EXPECT_GT(sum.mean(), 10.0 * sum.standard_error());
    EXPECT_LE(std::abs(plain.mean()), 5.0 * plain.standard_error());
}

TEST(Coarsen, SumsFineCells)
{
    const auto fine = sample_bundle(build_uniform_partition(16, 1.0), 20, RngSpec{4});
    const auto coarse_p = build_uniform_partition(4, 1.0);
    const auto coarse = coarsen_bundle(fine, coarse_p);
    EXPECT_EQ(coarse.partition(), coarse_p);
    for (std::size_t k = 0; k < 20; ++k)
        for (std::size_t i = 0; i <= 4; ++i) {
            EXPECT_NEAR(brownian_value(coarse, k, Driver::W, i), brownian_value(fine, k, Driver::W, 4 * i), 1e-14);
            EXPECT_NEAR(brownian_value(coarse, k, Driver::B, i), brownian_value(fine, k, Driver::B, 4 * i), 1e-14);
        }
    EXPECT_EQ(coarsen_bundle(fine, fine.partition()), fine);
    EXPECT_THROW(coarsen_bundle(fine, build_uniform_partition(3, 1.0)), InvalidArgument);
    EXPECT_THROW(coarsen_bundle(fine, build_uniform_partition(4, 2.0)), InvalidArgument);
}

TEST(Coarsen, IncrementVariancesMatchCoarseSteps)
{
    const std::size_t M = 20000;
    const auto fine = sample_bundle(build_uniform_partition(32, 2.0), M, RngSpec{31});
    const auto coarse = coarsen_bundle(fine, build_uniform_partition(4, 2.0));
    for (std::size_t i = 0; i < 4; ++i) {
        SampleStats s;
        for (std::size_t k = 0; k < M; ++k)
            s.add(coarse.w_increments(k)[i]);
        EXPECT_LE(std::abs(s.variance() - 0.5), 10.0 / std::sqrt(double(M)) * 0.5);
    }
}

TEST(BundleFile, RoundTrip)
{
    const auto b = sample_bundle(build_uniform_partition(7, 1.5), 13, RngSpec{0xdeadbeefcafeull});
    std::stringstream ss;
    write_bundle(ss, b);
    EXPECT_EQ(ss.str().size(), 8u * (4 + 2 * 7 * 13));
    const auto r = read_bundle(ss);
    EXPECT_EQ(r, b);
    EXPECT_EQ(r.seed(), 0xdeadbeefcafeull);
}

TEST(BundleFile, LittleEndianHeader)
{
    const auto b = sample_bundle(build_uniform_partition(2, 1.0), 1, RngSpec{0x0102});
    std::stringstream ss;
    write_bundle(ss, b);
    const auto s = ss.str();
    EXPECT_EQ(static_cast<unsigned char>(s[0]), 0x02);
    EXPECT_EQ(static_cast<unsigned char>(s[1]), 0x01);
    EXPECT_EQ(static_cast<unsigned char>(s[8]), 2);
    EXPECT_EQ(static_cast<unsigned char>(s[16]), 1);
}

TEST(BundleFile, TruncatedInput)
{
    const auto b = sample_bundle(build_uniform_partition(3, 1.0), 2, RngSpec{1});
    std::stringstream ss;
    write_bundle(ss, b);
    auto s = ss.str();
    s.resize(s.size() - 5);
    std::stringstream cut(s);
    EXPECT_THROW(read_bundle(cut), InvalidArgument);
}
