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

/// \file bdsde.hpp
/// Umbrella header.

#include "bdsde/analysis.hpp"
#include "bdsde/config.hpp"
#include "bdsde/core.hpp"
#include "bdsde/errors.hpp"
#include "bdsde/expectation.hpp"
#include "bdsde/numerics.hpp"
#include "bdsde/oracle.hpp"
#include "bdsde/parallel.hpp"
#include "bdsde/paths.hpp"
#include "bdsde/quadrature.hpp"
#include "bdsde/regression.hpp"
#include "bdsde/report.hpp"
#include "bdsde/scheme.hpp"
#include "bdsde/value_function.hpp"
