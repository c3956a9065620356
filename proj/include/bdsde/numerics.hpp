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
#include <limits>
#include <span>

namespace bdsde {

/// Neumaier compensated accumulator.
class CompensatedSum {
public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            compensation_ += (sum_ - t) + x;
        else
            compensation_ += (x - t) + sum_;
        sum_ = t;
    }

    CompensatedSum& operator+=(double x) noexcept
    {
        add(x);
        return *this;
    }

    double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept
{
    CompensatedSum s;
    for (double x : xs)
        s.add(x);
    return s.value();
}

/// Mean and standard error of i.i.d. samples, accumulated in the order given.
///
/// Sums are compensated so that the result only depends on the sample order,
/// never on how the samples were produced. A constant sample has exactly zero
/// variance and a mean equal to the constant.
class SampleStats {
public:
    void add(double x) noexcept
    {
        ++count_;
        if (count_ == 1) {
            first_ = x;
            constant_ = true;
        } else if (x != first_) {
            constant_ = false;
        }
        sum_.add(x);
        // shifted second moment for stability
        const double d = x - first_;
        shifted_sq_.add(d * d);
        shifted_.add(d);
    }

    std::size_t count() const noexcept { return count_; }

    double mean() const noexcept
    {
        if (count_ == 0)
            return std::numeric_limits<double>::quiet_NaN();
        if (constant_)
            return first_;
        return sum_.value() / static_cast<double>(count_);
    }

    double variance() const noexcept
    {
        if (count_ < 2 || constant_)
            return 0.0;
        const double n = static_cast<double>(count_);
        const double s = shifted_.value();
        const double v = (shifted_sq_.value() - s * s / n) / (n - 1.0);
        return v > 0.0 ? v : 0.0;
    }

    double standard_error() const noexcept
    {
        if (count_ < 2)
            return 0.0;
        return std::sqrt(variance() / static_cast<double>(count_));
    }

private:
    std::size_t count_ = 0;
    double first_ = 0.0;
    bool constant_ = true;
    CompensatedSum sum_;
    CompensatedSum shifted_;
    CompensatedSum shifted_sq_;
};

}  // namespace bdsde
