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

#include <Eigen/Dense>
#include <vector>

#include "scoamp/coupling.hpp"
#include "scoamp/oamp.hpp"

// Long-memory OAMP: covariance message matrices per row section, an
// all-history sufficient statistic, and history-weighted Onsager correction.
// Restricted to the LMMSE filter and the Bayes-optimal denoiser (the
// covariance estimators rely on conditional expectations).
namespace scoamp::lmoamp {

struct LmState {
    int t = -1;  // last completed iteration
    // Per row section ell.
    std::vector<Eigen::MatrixXd> v_ba;                      // (T+1)x(T+1)
    std::vector<Eigen::MatrixXd> v_ab;
    std::vector<std::vector<double>> eta_a_hist;            // per tau
    std::vector<std::vector<double>> eta_b_hist;
    std::vector<std::vector<std::vector<double>>> x_ab_hist;  // [ell][tau]
    std::vector<std::vector<double>> x_ba;                  // latest mean
    // Per column section l.
    std::vector<std::vector<double>> x_suf, x_post;
    std::vector<std::vector<double>> v_suf_hist;            // v_suf(tau,tau)
    std::vector<double> v_post;
    std::vector<double> fprime_mean;
    // Solver scratch per iteration: V_AB^{-1} 1 per row section.
    std::vector<Eigen::VectorXd> qvec;
    std::vector<double> qsum;
    int jitter_count = 0;
};

LmState init_lm_state(const coupling::CoupledSystem& sys, int t_max);

void lm_module_a_step(const coupling::CoupledSystem& sys, LmState& state);
void lm_sufficient_statistic(const coupling::CoupledSystem& sys, LmState& state);
void lm_module_b_step(const coupling::CoupledSystem& sys, LmState& state);

struct EquivalenceReport {
    double max_mean_dev = 0.0;  // max relative l2 deviation of mean messages
    double max_var_dev = 0.0;   // max absolute deviation of variance messages
    bool posdef_ok = true;      // no jittered/failed SPD factorization
    int jitter_count = 0;
};

struct LmRunResult {
    std::vector<std::vector<double>> mse;  // [t][l]
    std::vector<double> largest;
    EquivalenceReport equivalence;
};

// Runs LM-OAMP and memoryless OAMP on the same system and reports the
// largest deviation between their messages across iterations and sections.
LmRunResult run_lmoamp(const coupling::CoupledSystem& sys, int iterations);

}  // namespace scoamp::lmoamp
