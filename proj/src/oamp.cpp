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

#include "scoamp/oamp.hpp"

#include <cmath>
#include <string>

#include "scoamp/errors.hpp"
#include "scoamp/kernels.hpp"

namespace scoamp::oamp {

namespace {

constexpr double kOnsagerGuard = 1e-14;

// Singular values d_i of the filter F given those of A.
double filter_sv(Filter filter, double s, double v, double sigma2) {
    switch (filter) {
        case Filter::Lmmse: return v * s / (sigma2 + v * s * s);
        case Filter::Mf: return s;
        case Filter::Zf: return s > 0.0 ? 1.0 / s : 0.0;
    }
    return 0.0;
}

}  // namespace

ScalarDenoiser bayes_denoiser(const denoiser::Prior& prior) {
    ScalarDenoiser den;
    den.f = [prior](double u, double v) { return denoiser::denoise(prior, u, v); };
    den.fprime = [prior](double u, double v) {
        return denoiser::denoise_derivative(prior, u, v);
    };
    den.postvar = [prior](double u, double v) {
        return denoiser::posterior_variance(prior, u, v);
    };
    return den;
}

State init_state(const coupling::CoupledSystem& sys) {
    const auto& base = sys.base;
    const int rows = base.rows();
    const int L = base.L();
    State st;
    st.x_ba.resize(rows);
    st.x_ab.resize(rows);
    st.v_ba.resize(rows);
    st.v_ab.assign(rows, 0.0);
    st.eta_a.assign(rows, 0.0);
    st.eta_b.assign(rows, 0.0);
    for (int ell = 0; ell < rows; ++ell) {
        st.x_ba[ell].assign(sys.nc(ell), 0.0);
        st.x_ab[ell].assign(sys.nc(ell), 0.0);
        st.v_ba[ell] = coupling::initial_variance(base, ell, sys.n);
    }
    st.x_suf.assign(L, std::vector<double>(sys.n, 0.0));
    st.x_post.assign(L, std::vector<double>(sys.n, 0.0));
    st.v_suf.assign(L, 0.0);
    st.v_post.assign(L, 0.0);
    st.fprime_mean.assign(L, 0.0);
    st.iter = 0;
    return st;
}

void module_a_step(const coupling::CoupledSystem& sys, State& state,
                   const Options& opts) {
    const int rows = sys.base.rows();
    for (int ell = 0; ell < rows; ++ell) {
        const auto& sec = *sys.sections[ell];
        const int m = sec.m();
        const int nc = sec.nc();
        const double wsize = sys.base.w_count(ell);
        const double v = state.v_ba[ell];
        if (!(v > 0.0))
            throw DomainError("module_a_step: nonpositive v_BA at section " +
                              std::to_string(ell));

        // Residual and its U^T image.
        std::vector<double> r(m), t(m);
        sec.apply_a(state.x_ba[ell].data(), r.data());
        kernels::scale_add(1.0, sys.y[ell].data(), -1.0, r.data(), r.data(),
                           static_cast<std::size_t>(m));
        sec.apply_ut(r.data(), t.data());

        const auto& s = sec.sv();
        double sum_ds = 0.0, sum_d2 = 0.0, sum_res2 = 0.0;
        for (int i = 0; i < m; ++i) {
            const double d = filter_sv(opts.filter, s[i], v, sys.sigma2);
            const double ds = d * s[i];
            sum_ds += ds;
            sum_d2 += d * d;
            sum_res2 += (1.0 - ds) * (1.0 - ds);
            t[i] *= d;
        }
        const double eta_a = 1.0 - sum_ds / nc;
        if (1.0 - eta_a < kOnsagerGuard)
            throw SingularFilter("module_a_step: 1 - eta_A degenerate at section " +
                                 std::to_string(ell));

        double v_post;
        if (opts.filter == Filter::Lmmse && opts.bayes_shortcut) {
            v_post = eta_a * v;
        } else {
            v_post = sys.sigma2 * sum_d2 / nc +
                     v * (sum_res2 + (nc - m)) / nc;
        }

        // x_post = x_ba + V (d .* U^T r); extrinsic mean per the Onsager form.
        std::vector<double> corr(nc);
        sec.apply_v(t.data(), corr.data());
        auto& x_ab = state.x_ab[ell];
        const double scale = 1.0 / (std::sqrt(wsize) * (1.0 - eta_a));
        // x_ab = ((x_ba + corr) - eta_a x_ba) * scale / ... with the |W| factor.
        for (int i = 0; i < nc; ++i)
            x_ab[i] = scale * ((1.0 - eta_a) * state.x_ba[ell][i] + corr[i]);

        double v_ab;
        if (opts.filter == Filter::Lmmse && opts.bayes_shortcut) {
            v_ab = eta_a * v / (wsize * (1.0 - eta_a));
        } else {
            v_ab = (v_post - eta_a * eta_a * v) /
                   (wsize * (1.0 - eta_a) * (1.0 - eta_a));
        }
        if (!(v_ab > 0.0))
            throw SingularFilter("module_a_step: nonpositive v_AB at section " +
                                 std::to_string(ell));
        state.eta_a[ell] = eta_a;
        state.v_ab[ell] = v_ab;
    }
}

void sufficient_statistic(const coupling::CoupledSystem& sys, State& state) {
    const auto& base = sys.base;
    const int n = sys.n;
    for (int l = 0; l < base.L(); ++l) {
        double prec = 0.0;
        for (int w = 0; w <= base.W(); ++w) {
            const double g = base.gamma(l + w, l);
            prec += g * g / state.v_ab[l + w];
        }
        const double v_suf = 1.0 / prec;
        auto& x_suf = state.x_suf[l];
        std::fill(x_suf.begin(), x_suf.end(), 0.0);
        for (int w = 0; w <= base.W(); ++w) {
            const int ell = l + w;
            const double g = base.gamma(ell, l);
            // Block w sits at offset (w_max - w) * n inside vec{x}[ell].
            const std::size_t off =
                static_cast<std::size_t>(base.w_max(ell) - w) * n;
            kernels::axpy(v_suf * g / state.v_ab[ell],
                          state.x_ab[ell].data() + off, x_suf.data(),
                          static_cast<std::size_t>(n));
        }
        state.v_suf[l] = v_suf;
    }
}

void module_b_step(const coupling::CoupledSystem& sys, State& state,
                   const ScalarDenoiser& den, const Options& opts) {
    const auto& base = sys.base;
    const int n = sys.n;

    for (int l = 0; l < base.L(); ++l) {
        const double v = state.v_suf[l];
        auto& post = state.x_post[l];
        const auto& suf = state.x_suf[l];
        double pv = 0.0, fp = 0.0;
        for (int i = 0; i < n; ++i) {
            post[i] = den.f(suf[i], v);
            fp += den.fprime(suf[i], v);
            if (opts.estimator == VarEstimator::Conditional)
                pv += den.postvar(suf[i], v);
        }
        fp /= n;
        state.fprime_mean[l] = fp;
        state.v_post[l] =
            opts.estimator == VarEstimator::Conditional ? pv / n : v * fp;
    }

    for (int ell = 0; ell < base.rows(); ++ell) {
        const int nc = sys.nc(ell);
        const double wsize = base.w_count(ell);
        const double v_ab = state.v_ab[ell];

        // eta_B[ell] = sum_w (N/Nc) |W| gamma^2 v_suf <f'> / v_AB,
        // and the var_BA sums over the same branches.
        double eta_b = 0.0, post_term = 0.0;
        for (int w = base.w_min(ell); w <= base.w_max(ell); ++w) {
            const int l = ell - w;
            const double g = base.gamma(ell, l);
            const double frac = static_cast<double>(n) / nc;
            eta_b += frac * wsize * g * g * state.v_suf[l] *
                     state.fprime_mean[l] / v_ab;
            post_term += frac * wsize * g * g * state.v_post[l];
        }
        const double denom = 1.0 - eta_b / wsize;
        if (std::abs(denom) < kOnsagerGuard)
            throw SingularOnsager("module_b_step: Onsager denominator degenerate at section " +
                                  std::to_string(ell));

        // Extrinsic mean: (sqrt(|W|) Gamma x_post - |W|^-1/2 eta_B x_ab) / denom.
        std::vector<double> lift(nc);
        // Assemble Gamma[ell] applied to the stacked posterior mean.
        {
            const auto& proj = sys.projectors[ell];
            std::vector<double> stacked(nc);
            for (const auto& b : proj.blocks) {
                const auto& src = state.x_post[b.col_section];
                double* dst = stacked.data() + b.offset;
                for (int i = 0; i < n; ++i) dst[i] = b.weight * src[i];
            }
            const double a = std::sqrt(wsize) / denom;
            const double c = -eta_b / (std::sqrt(wsize) * denom);
            kernels::scale_add(a, stacked.data(), c, state.x_ab[ell].data(),
                               lift.data(), static_cast<std::size_t>(nc));
        }

        double v_ba_new;
        if (opts.bayes_shortcut) {
            v_ba_new = eta_b * v_ab / denom;
        } else {
            v_ba_new =
                (post_term - eta_b * eta_b * v_ab / wsize) / (denom * denom);
        }
        if (!(v_ba_new > 0.0))
            throw SingularOnsager("module_b_step: nonpositive v_BA at section " +
                                  std::to_string(ell));

        state.eta_b[ell] = eta_b;
        if (state.iter > 0 && opts.zeta < 1.0) {
            kernels::scale_add(opts.zeta, lift.data(), 1.0 - opts.zeta,
                               state.x_ba[ell].data(), state.x_ba[ell].data(),
                               static_cast<std::size_t>(nc));
            state.v_ba[ell] =
                opts.zeta * v_ba_new + (1.0 - opts.zeta) * state.v_ba[ell];
        } else {
            state.x_ba[ell] = std::move(lift);
            state.v_ba[ell] = v_ba_new;
        }
    }
    ++state.iter;
}

Trajectory run_oamp(const coupling::CoupledSystem& sys, const Options& opts,
                    State& state) {
    if (opts.iterations < 1) throw ConfigError("run_oamp: T must be >= 1");
    state = init_state(sys);
    const auto den = bayes_denoiser(sys.prior);
    Trajectory traj;
    std::vector<double> v_ba_prev;
    for (int t = 0; t < opts.iterations; ++t) {
        v_ba_prev = state.v_ba;
        module_a_step(sys, state, opts);
        sufficient_statistic(sys, state);
        module_b_step(sys, state, den, opts);

        std::vector<double> mse(sys.base.L());
        double largest = 0.0;
        for (int l = 0; l < sys.base.L(); ++l) {
            mse[l] = kernels::sqdiff(sys.x_true.data() +
                                         static_cast<std::size_t>(l) * sys.n,
                                     state.x_post[l].data(),
                                     static_cast<std::size_t>(sys.n)) /
                     sys.n;
            largest = std::max(largest, mse[l]);
        }
        traj.mse.push_back(std::move(mse));
        traj.largest.push_back(largest);
        traj.iterations_run = t + 1;

        if (opts.early_stop_tol > 0.0) {
            double dv = 0.0;
            for (std::size_t i = 0; i < v_ba_prev.size(); ++i)
                dv = std::max(dv, std::abs(state.v_ba[i] - v_ba_prev[i]));
            if (dv < opts.early_stop_tol) {
                traj.early_stopped = true;
                break;
            }
        }
    }
    return traj;
}

Trajectory run_oamp(const coupling::CoupledSystem& sys, const Options& opts) {
    State state;
    return run_oamp(sys, opts, state);
}

}  // namespace scoamp::oamp
