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

#include <functional>
#include <vector>

#include "scoamp/coupling.hpp"
#include "scoamp/denoiser.hpp"

// Finite-size orthogonal AMP on a coupled system: LMMSE/MF/ZF linear module,
// sufficient-statistic fusion, separable denoising, and the two Onsager
// corrections.
namespace scoamp::oamp {

enum class Filter { Lmmse, Mf, Zf };

// Separable denoiser interface: f(u, v), its u-derivative, and the
// conditional variance estimate used for v_post.
struct ScalarDenoiser {
    std::function<double(double, double)> f;
    std::function<double(double, double)> fprime;
    std::function<double(double, double)> postvar;
};

ScalarDenoiser bayes_denoiser(const denoiser::Prior& prior);

enum class VarEstimator { Conditional, Plugin };

struct Options {
    Filter filter = Filter::Lmmse;
    // Use the Bayes-optimal extrinsic-variance forms (var_AB for the LMMSE
    // filter, var_BA for the conditional-mean denoiser) instead of the
    // generic Onsager-corrected differences.
    bool bayes_shortcut = true;
    VarEstimator estimator = VarEstimator::Conditional;
    double zeta = 1.0;  // damping factor on the module-B output, t > 0
    int iterations = 200;
    double early_stop_tol = 0.0;  // 0 disables the |dv_BA| early stop
};

struct State {
    // Module-A side, per row section ell.
    std::vector<std::vector<double>> x_ba;  // mean of vec{x}[ell]
    std::vector<double> v_ba;
    std::vector<std::vector<double>> x_ab;  // extrinsic mean of |W|^-1/2 vec{x}
    std::vector<double> v_ab;
    std::vector<double> eta_a;
    std::vector<double> eta_b;
    // Module-B side, per column section l.
    std::vector<std::vector<double>> x_suf;
    std::vector<double> v_suf;
    std::vector<std::vector<double>> x_post;
    std::vector<double> v_post;
    std::vector<double> fprime_mean;
    int iter = 0;
};

State init_state(const coupling::CoupledSystem& sys);

// Linear half-iteration: posterior mean/variance through the cached SVD,
// then the Onsager-corrected extrinsic messages (x_ab, v_ab, eta_a).
void module_a_step(const coupling::CoupledSystem& sys, State& state,
                   const Options& opts);

// Per-column-section precision-weighted fusion of the W+1 branches.
void sufficient_statistic(const coupling::CoupledSystem& sys, State& state);

// Denoising half-iteration: posterior messages, Onsager correction back to
// the extended spaces (x_ba, v_ba, eta_b), and damping for iter > 0.
void module_b_step(const coupling::CoupledSystem& sys, State& state,
                   const ScalarDenoiser& den, const Options& opts);

struct Trajectory {
    // mse[t][l] = per-section MSE of x_post after iteration t.
    std::vector<std::vector<double>> mse;
    std::vector<double> largest;  // max over sections per iteration
    int iterations_run = 0;
    bool early_stopped = false;
};

Trajectory run_oamp(const coupling::CoupledSystem& sys, const Options& opts);
// As above but keeps the final state (for equivalence studies).
Trajectory run_oamp(const coupling::CoupledSystem& sys, const Options& opts,
                    State& final_state);

}  // namespace scoamp::oamp
