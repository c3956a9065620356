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

#include <stdexcept>
#include <string>

namespace bdsde {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument or malformed problem/config value. The message names the field.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// mesh * L >= 1: the implicit step is not guaranteed to have a unique fixed point.
class MeshTooCoarse : public Error {
public:
    MeshTooCoarse(double mesh, double lipschitz)
        : Error("mesh too coarse: mesh " + std::to_string(mesh) + " * L " +
                std::to_string(lipschitz) + " >= 1"),
          mesh_(mesh), lipschitz_(lipschitz)
    {}

    double mesh() const noexcept { return mesh_; }
    double lipschitz() const noexcept { return lipschitz_; }

private:
    double mesh_;
    double lipschitz_;
};

/// Picard iteration did not reach its tolerance.
class NoConvergence : public Error {
public:
    using Error::Error;
};

/// Least-squares design matrix is numerically rank deficient.
class RankDeficient : public Error {
public:
    RankDeficient(double smallest, double largest)
        : Error("rank deficient design: singular values " + std::to_string(smallest) +
                " / " + std::to_string(largest)),
          smallest_(smallest), largest_(largest)
    {}

    double smallest() const noexcept { return smallest_; }
    double largest() const noexcept { return largest_; }

private:
    double smallest_;
    double largest_;
};

/// No closed form is registered for the requested problem.
class UnsupportedFamily : public Error {
public:
    using Error::Error;
};

/// Fewer than three usable points for a log-log fit.
class DegenerateFit : public Error {
public:
    using Error::Error;
};

/// A study was asked to run against an oracle that failed certification.
class UncertifiedOracle : public Error {
public:
    using Error::Error;
};

}  // namespace bdsde
