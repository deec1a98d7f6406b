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

#include "scoamp/potential.hpp"

#include <algorithm>
#include <cmath>

#include "scoamp/errors.hpp"
#include "scoamp/se.hpp"

namespace scoamp::potential {

namespace {

// Golden-section minimization of f on [a, b] to tolerance tol in x.
double golden_min(const std::function<double(double)>& f, double a, double b,
                  double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

// Bisection of a monotone boolean predicate on [lo, hi]: smallest x with
// pred(x) true; assumes pred(hi) true.
double bisect_predicate(const std::function<bool(double)>& pred, double lo,
                        double hi, double tol, int* probes) {
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (probes) ++(*probes);
        (pred(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

RFunction::RFunction(std::function<double(double)> r, double u_max)
    : r_(std::move(r)), u_max_(u_max) {
    const double tau_max = std::log1p(u_max);
    const int n = std::max(256, static_cast<int>(tau_max * 160.0));
    grid_.resize(n + 1);
    cum_.resize(n + 1);
    grid_[0] = 0.0;
    cum_[0] = 0.0;
    double u_prev = 0.0;
    for (int j = 1; j <= n; ++j) {
        grid_[j] = tau_max * j / n;
        const double u_j = std::expm1(grid_[j]);
        cum_[j] = cum_[j - 1] +
                  spectra::integrate([this](double t) { return r_(-t); }, u_prev,
                                     u_j, 1e-13);
        u_prev = u_j;
    }
}

double RFunction::integral(double u) const {
    if (u <= 0.0) return 0.0;
    if (u > u_max_ * (1.0 + 1e-9))
        throw DomainError("RFunction::integral beyond cached range");
    const double tau = std::min(std::log1p(u), grid_.back());
    const double dt = grid_[1];
    const int j =
        std::min(static_cast<int>(tau / dt), static_cast<int>(grid_.size()) - 2);
    const double ua = std::expm1(grid_[j]);
    const double ub = std::expm1(grid_[j + 1]);
    const double h = ub - ua;
    const double t = (u - ua) / h;
    const double da = r_(-ua), db = r_(-ub);
    const double t2 = t * t, t3 = t2 * t;
    return cum_[j] * (2 * t3 - 3 * t2 + 1) + h * da * (t3 - 2 * t2 + t) +
           cum_[j + 1] * (-2 * t3 + 3 * t2) + h * db * (t3 - t2);
}

RFunction RFunction::from_spectrum(const spectra::Spectrum& spec, double u_max) {
    return RFunction([spec](double z) { return spectra::r_transform(spec, z); },
                     u_max);
}

RFunction RFunction::limit_of(coupling::Ensemble ensemble, double delta,
                              double kappa, double u_max) {
    return RFunction(se::limit_r_function(ensemble, delta, kappa), u_max);
}

double rs_potential(const denoiser::MmseIntegralCache& mi, const RFunction& rf,
                    double sigma2, double e, double s) {
    if (e < 0.0 || e > 1.0 || s < 0.0)
        throw DomainError("rs_potential: requires E in [0,1], s >= 0");
    return 0.5 * mi.integral(s) + 0.5 * rf.integral(e / sigma2) - 0.5 * s * e;
}

double g_of_e(const RFunction& rf, double sigma2, double e) {
    return rf.r(-e / sigma2) / sigma2;
}

PotentialCurve potential_curve(const denoiser::MmseIntegralCache& mi,
                               const RFunction& rf, double sigma2, int grid_n) {
    if (grid_n < 32) throw ConfigError("potential_curve: grid_n must be >= 32");
    PotentialCurve curve;
    curve.sigma2 = sigma2;

    auto f = [&](double e) {
        const double g = g_of_e(rf, sigma2, e);
        return mi.integral(g) + rf.integral(e / sigma2) - e * g;
    };

    // Uniform grid plus a log-spaced head: the noise-limited minimizer sits
    // at E = O(sigma^2), far below the uniform spacing.
    std::vector<double>& grid = curve.e_grid;
    grid.push_back(0.0);
    const double head = 1.0 / grid_n;
    for (double e = 1e-9; e < head; e *= 1.6) grid.push_back(e);
    for (int i = 1; i <= grid_n; ++i)
        grid.push_back(static_cast<double>(i) / grid_n);

    curve.f_values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        curve.f_values[i] = f(grid[i]);

    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        if (curve.f_values[i] < curve.f_values[i - 1] &&
            curve.f_values[i] <= curve.f_values[i + 1]) {
            const double e =
                golden_min(f, grid[i - 1], grid[i + 1], 1e-10);
            curve.minimizers.emplace_back(e, f(e));
        }
    }
    if (curve.minimizers.empty()) {
        // Monotone on the grid: the minimum sits at an endpoint cell.
        const bool at_left = curve.f_values.front() < curve.f_values.back();
        const double a = at_left ? grid[0] : grid[grid.size() - 2];
        const double b = at_left ? grid[1] : grid.back();
        const double e = golden_min(f, a, b, 1e-10);
        curve.minimizers.emplace_back(e, f(e));
    }

    double best = curve.minimizers[0].second;
    for (std::size_t i = 1; i < curve.minimizers.size(); ++i)
        if (curve.minimizers[i].second < best) {
            best = curve.minimizers[i].second;
            curve.global_index = i;
        }
    int near_best = 0;
    for (const auto& mz : curve.minimizers)
        if (mz.second <= best + 1e-6) ++near_best;
    curve.degenerate_tie = near_best > 1;
    curve.unique_minimizer = curve.minimizers.size() == 1;
    return curve;
}

ThresholdResult bp_threshold(const denoiser::MmseIntegralCache& mi,
                             const RFamily& family, double sigma2,
                             double delta_lo, double delta_hi, double tol) {
    auto unique_at = [&](double delta) {
        const RFunction rf = family(delta);
        return potential_curve(mi, rf, sigma2, 2048).unique_minimizer;
    };
    ThresholdResult res;
    // Monotonicity scan: uniqueness should hold above the threshold only.
    const int scan_n = 17;
    bool seen_true = false;
    for (int i = 0; i <= scan_n; ++i) {
        const double d = delta_lo + (delta_hi - delta_lo) * i / scan_n;
        const bool u = unique_at(d);
        ++res.probes;
        if (u) seen_true = true;
        if (!u && seen_true) res.monotone = false;
    }
    res.delta = bisect_predicate(unique_at, delta_lo, delta_hi, tol, &res.probes);
    return res;
}

ThresholdResult potential_threshold(const denoiser::MmseIntegralCache& mi,
                                    const RFamily& family, double sigma2,
                                    double delta_lo, double delta_hi,
                                    double tol) {
    auto optimal_at = [&](double delta) {
        const RFunction rf = family(delta);
        const auto curve = potential_curve(mi, rf, sigma2, 2048);
        if (curve.degenerate_tie) return false;
        // Global minimizer must be the smallest local minimizer.
        double smallest_e = curve.minimizers[0].first;
        std::size_t smallest_idx = 0;
        for (std::size_t i = 1; i < curve.minimizers.size(); ++i)
            if (curve.minimizers[i].first < smallest_e) {
                smallest_e = curve.minimizers[i].first;
                smallest_idx = i;
            }
        return smallest_idx == curve.global_index;
    };
    ThresholdResult res;
    const int scan_n = 17;
    bool seen_true = false;
    for (int i = 0; i <= scan_n; ++i) {
        const double d = delta_lo + (delta_hi - delta_lo) * i / scan_n;
        const bool u = optimal_at(d);
        ++res.probes;
        if (u) seen_true = true;
        if (!u && seen_true) res.monotone = false;
    }
    res.delta = bisect_predicate(optimal_at, delta_lo, delta_hi, tol, &res.probes);
    return res;
}

double uncoupled_fixed_point(const denoiser::Prior& prior,
                             coupling::Ensemble ensemble, double kappa,
                             double sigma2, double delta, double v_init,
                             int iterations, double tol) {
    const auto base = coupling::BaseMatrix::uniform(1, 0);
    // Scale-free single-section model; N only sets the integer M/N ratio.
    const int n = 1 << 20;
    const int m = std::max(1, static_cast<int>(std::lround(delta * n)));
    auto model = se::SeModel::make(base, n, m, ensemble, kappa, prior, sigma2);
    auto res = se::run_se(se::SeKind::Bayes, model, iterations, tol, v_init);
    return res.final_values[0];
}

CoupledThresholdResult coupled_threshold(const denoiser::Prior& prior,
                                         coupling::Ensemble ensemble,
                                         double kappa, double sigma2, int L,
                                         int W, int iterations, double delta_lo,
                                         double delta_hi, double tol) {
    if (delta_lo <= 0.0) delta_lo = prior.information_dimension();
    if (!(delta_lo < delta_hi))
        throw ConfigError("coupled_threshold: degenerate delta bracket");
    const auto base = coupling::BaseMatrix::uniform(L, W);
    const int n = 1 << 20;

    auto converges_at = [&](double delta) {
        const int m = std::max(1, static_cast<int>(std::lround(delta * n)));
        const double target =
            uncoupled_fixed_point(prior, ensemble, kappa, sigma2, delta, 1e-6);
        auto model = se::SeModel::make(base, n, m, ensemble, kappa, prior, sigma2);
        auto res = se::run_se(se::SeKind::Bayes, model, iterations, 1e-13);
        for (double v : res.final_values)
            if (std::abs(v - target) > 1e-6) return false;
        return true;
    };

    CoupledThresholdResult res;
    res.delta_sc =
        bisect_predicate(converges_at, delta_lo, delta_hi, tol, &res.probes);
    res.rate_adjusted = (1.0 + static_cast<double>(W) / L) * res.delta_sc;
    return res;
}

std::vector<OptimalityPoint> optimality_gap(const denoiser::MmseIntegralCache& mi,
                                            const RFunction& rf,
                                            const std::vector<double>& sigma2_list,
                                            int grid_n) {
    std::vector<OptimalityPoint> out;
    for (double s2 : sigma2_list) {
        const auto curve = potential_curve(mi, rf, s2, grid_n);
        OptimalityPoint pt;
        pt.sigma2 = s2;
        pt.e_opt = curve.minimizers[curve.global_index].first;
        pt.s_opt = g_of_e(rf, s2, pt.e_opt);
        pt.unique_minimizer = curve.unique_minimizer && !curve.degenerate_tie;
        out.push_back(pt);
    }
    return out;
}

}  // namespace scoamp::potential
