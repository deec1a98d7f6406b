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
#include <memory>
#include <utility>
#include <vector>

#include "scoamp/coupling.hpp"
#include "scoamp/denoiser.hpp"
#include "scoamp/spectra.hpp"

// Replica-symmetric potential, the coupled-system potential function F, and
// the BP / potential / spatial-coupling thresholds.
namespace scoamp::potential {

// R(z) for z <= 0 together with a cached cumulative integral
// int_0^U R(-u) du on a log grid.
class RFunction {
  public:
    RFunction(std::function<double(double)> r, double u_max);
    double r(double z) const { return r_(z); }
    double integral(double u) const;  // int_0^u R(-t) dt, u >= 0

    // True R-transform of a spectrum.
    static RFunction from_spectrum(const spectra::Spectrum& spec, double u_max);
    // Width-limit R of a coupled ensemble (Corollary-style closed forms).
    static RFunction limit_of(coupling::Ensemble ensemble, double delta,
                              double kappa, double u_max);

  private:
    std::function<double(double)> r_;
    double u_max_;
    std::vector<double> grid_;  // log1p(u) nodes
    std::vector<double> cum_;
};

// f_RS(E, s) = I(s) + 1/2 int_0^{E/sigma^2} R(-z) dz - sE/2.
double rs_potential(const denoiser::MmseIntegralCache& mi, const RFunction& rf,
                    double sigma2, double e, double s);

// g(E) = R(-E/sigma^2)/sigma^2, the SE map in the (E, s) variables.
double g_of_e(const RFunction& rf, double sigma2, double e);

struct PotentialCurve {
    std::vector<double> e_grid;
    std::vector<double> f_values;
    // Local minimizers (E, F(E)) refined by golden-section search.
    std::vector<std::pair<double, double>> minimizers;
    std::size_t global_index = 0;
    bool unique_minimizer = true;
    bool degenerate_tie = false;  // two minima within 1e-6 in F
    double sigma2 = 0.0;
};

// F(E) = int_0^{g(E)} MMSE + int_0^E g - E g(E) sampled on a grid (uniform
// plus a log-spaced refinement near 0 where the noise-limited minimizer
// lives), with minimizers refined to 1e-10 in E.
PotentialCurve potential_curve(const denoiser::MmseIntegralCache& mi,
                               const RFunction& rf, double sigma2, int grid_n);

using RFamily = std::function<RFunction(double delta)>;

struct ThresholdResult {
    double delta = 0.0;
    bool monotone = true;  // predicate was monotone on the scanned grid
    int probes = 0;
};

// Infimum of delta such that the potential has a unique minimizer,
// by bisection to tol after a monotonicity scan.
ThresholdResult bp_threshold(const denoiser::MmseIntegralCache& mi,
                             const RFamily& family, double sigma2,
                             double delta_lo, double delta_hi,
                             double tol = 1e-4);

// Infimum of delta such that the global minimizer is unique and equals the
// smallest local minimizer.
ThresholdResult potential_threshold(const denoiser::MmseIntegralCache& mi,
                                    const RFamily& family, double sigma2,
                                    double delta_lo, double delta_hi,
                                    double tol = 1e-4);

struct CoupledThresholdResult {
    double delta_sc = 0.0;
    double rate_adjusted = 0.0;  // (1 + W/L) * delta_sc
    bool monotone = true;
    int probes = 0;
};

// Infimum of delta such that the coupled Bayes SE converges to within 1e-6
// of the artificially initialized uncoupled fixed point on all sections.
CoupledThresholdResult coupled_threshold(const denoiser::Prior& prior,
                                         coupling::Ensemble ensemble,
                                         double kappa, double sigma2, int L,
                                         int W, int iterations = 1000,
                                         double delta_lo = -1.0,
                                         double delta_hi = 1.0,
                                         double tol = 1e-4);

// Uncoupled Bayes-SE fixed point at compression rate delta with the given
// initial variance (1e-6 gives the paper's artificial initialization).
double uncoupled_fixed_point(const denoiser::Prior& prior,
                             coupling::Ensemble ensemble, double kappa,
                             double sigma2, double delta, double v_init,
                             int iterations = 2000, double tol = 1e-13);

struct OptimalityPoint {
    double sigma2 = 0.0;
    double e_opt = 0.0;
    double s_opt = 0.0;
    bool unique_minimizer = true;
};

// Tracks the global minimizer of the potential across noise levels.
// The RFunction cache must reach u_max >= 1 / min(sigma2).
std::vector<OptimalityPoint> optimality_gap(const denoiser::MmseIntegralCache& mi,
                                            const RFunction& rf,
                                            const std::vector<double>& sigma2_list,
                                            int grid_n = 2048);

}  // namespace scoamp::potential
