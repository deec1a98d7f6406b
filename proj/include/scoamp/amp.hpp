// Copyright 2026-present the scoamp project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <vector>

#include "scoamp/coupling.hpp"

// Damped Bayes-optimal AMP for spatially coupled zero-mean i.i.d. Gaussian
// sensing matrices. Comparison baseline only; the recursion follows the
// standard GAMP form for block-constant variance profiles, with damping on
// the mean and variance messages just before denoising.
namespace scoamp::amp {

struct AmpOptions {
    int iterations = 200;
    double zeta = 1.0;
};

struct AmpResult {
    std::vector<std::vector<double>> mse;  // [t][l]
    std::vector<double> largest;
    bool diverged = false;
    int iterations_run = 0;
};

AmpResult run_amp(const coupling::CoupledSystem& sys, const AmpOptions& opts);

}  // namespace scoamp::amp
