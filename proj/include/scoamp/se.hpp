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
#include <functional>
#include <vector>

#include "scoamp/coupling.hpp"
#include "scoamp/denoiser.hpp"
#include "scoamp/oamp.hpp"
#include "scoamp/spectra.hpp"

// State evolution for OAMP and LM-OAMP on coupled systems, the (E, s)
// change of variables, and the width-limit approximate recursions.
namespace scoamp::se {

// Deterministic description of the coupled ensemble: base matrix, section
// sizes, per-row-section spectra of |W[ell]| A^T A, prior and noise level.
struct SeModel {
    coupling::BaseMatrix base;
    int n = 0;
    int m = 0;
    double sigma2 = 0.0;
    denoiser::Prior prior;
    coupling::Ensemble ensemble = coupling::Ensemble::IidGaussian;
    double kappa = 1.0;
    std::vector<spectra::Spectrum> section_spectra;

    static SeModel make(const coupling::BaseMatrix& base, int n, int m,
                        coupling::Ensemble ensemble, double kappa,
                        const denoiser::Prior& prior, double sigma2);
    int nc(int ell) const { return base.w_count(ell) * n; }
    double delta() const { return static_cast<double>(m) / n; }
};

struct SeState {
    std::vector<double> v_ba, v_ba_prev;
    std::vector<double> v_ab, eta_a, eta_b;
    std::vector<double> v_suf, v_post;
    int iter = 0;
};

// v_BA,0 from the coupling initial condition; optional override for the
// artificially initialized runs.
SeState init_se_state(const SeModel& model, double v_ba_override = -1.0);

// Bayes-optimal recursion (LMMSE filter + conditional-mean denoiser),
// closed through the eta-transform.
void se_step_bayes(const SeModel& model, SeState& state);

// General recursion for MF/ZF/LMMSE filters with spectral trace integrals.
void se_step_general(const SeModel& model, oamp::Filter filter, SeState& state);

// ---- Long-memory state evolution -----------------------------------------

struct LmSeState {
    int t = -1;  // last completed iteration
    // Per row section: covariance matrices with entries (tau', tau),
    // tau <= t+1 for v_ba and tau <= t for v_ab.
    std::vector<Eigen::MatrixXd> v_ba;
    std::vector<Eigen::MatrixXd> v_ab;
    std::vector<std::vector<double>> eta_a_hist;  // per ell, per tau
    std::vector<std::vector<double>> eta_b_hist;
    // Per column section: v_suf,tau,tau history and posterior covariance
    // P(j,k) = E[(x - est_j)(x - est_k)] with est_0 = 0 and est_j = f_{j-1}.
    std::vector<std::vector<double>> v_suf_hist;
    std::vector<Eigen::MatrixXd> p_post;
    int jitter_count = 0;  // times the SPD solve needed a jitter retry
};

LmSeState init_lm_se_state(const SeModel& model, int t_max);
// One full LM iteration (module A with all covariance rows, LM sufficient
// statistic, module B covariance rows including the tau' = -1 row).
void se_step_lm(const SeModel& model, LmSeState& state);

// ---- Change of variables and approximate recursions -----------------------

struct EsState {
    std::vector<double> e;   // E_{t+1}[ell] over row sections
    std::vector<double> s;   // s_t[l] over column sections
    std::vector<double> nu;  // eta_A v_BA diagnostics per row section
    double var_ab_r_residual = 0.0;  // max |1/v_AB - R_G(-eta_A v_BA /(|W| s2))/s2|
};

// Requires the uniform base (the change of variables is defined for it).
EsState se_to_es(const SeModel& model, const SeState& state);

// s_t[l] recomputed through g[ell](z) = R_G(-z/(|W| sigma^2))/sigma^2 as an
// independent route (used by tests against 1/v_suf).
std::vector<double> es_s_from_r(const SeModel& model, const SeState& state);

// Width-limit R(z) of the ensemble (delta/(delta-z) for iid Gaussian and
// row-orthogonal sections, the log-integral form for geometric ones).
std::function<double(double)> limit_r_function(coupling::Ensemble ensemble,
                                               double delta, double kappa);

struct ApproxSeState {
    std::vector<double> e_tilde;  // over row sections
    std::vector<double> s_tilde;  // over column sections
    int iter = 0;
};

ApproxSeState init_approx_state(const SeModel& model);
void se_step_approx(const SeModel& model,
                    const std::function<double(double)>& r_limit,
                    ApproxSeState& state);

// ---- Driver ----------------------------------------------------------------

enum class SeKind { Oamp, Bayes, Lm, Approx };

struct SeRunResult {
    // trajectory[t][l]: v_post per column section (E_tilde per row section
    // for the approx kind).
    std::vector<std::vector<double>> trajectory;
    std::vector<double> final_values;
    double mean_v_post = 0.0;
    double max_v_post = 0.0;
    bool converged = false;
    int iterations_run = 0;
};

SeRunResult run_se(SeKind kind, const SeModel& model, int t_max, double tol,
                   double v_ba_override = -1.0, oamp::Filter filter = oamp::Filter::Lmmse);

}  // namespace scoamp::se
