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

#include "scoamp/lmoamp.hpp"

#include <cmath>
#include <string>

#include "scoamp/errors.hpp"
#include "scoamp/kernels.hpp"

namespace scoamp::lmoamp {

namespace {

constexpr double kOnsagerGuard = 1e-14;
constexpr int kMaxHistory = 64;

Eigen::VectorXd solve_ones(const Eigen::MatrixXd& v, int ell, int* jitter_count) {
    Eigen::LLT<Eigen::MatrixXd> llt(v);
    if (llt.info() != Eigen::Success) {
        Eigen::MatrixXd vj = v;
        vj.diagonal().array() += 1e-12;
        llt.compute(vj);
        if (jitter_count) ++(*jitter_count);
        if (llt.info() != Eigen::Success)
            throw NotPosDef("lmoamp: V_AB not positive definite at section " +
                            std::to_string(ell));
    }
    return llt.solve(Eigen::VectorXd::Ones(v.rows()));
}

}  // namespace

LmState init_lm_state(const coupling::CoupledSystem& sys, int t_max) {
    if (t_max > kMaxHistory)
        throw ConfigError("lmoamp: history capped at T <= 64");
    LmState st;
    const int rows = sys.base.rows();
    const int dim = t_max + 1;
    st.v_ba.assign(rows, Eigen::MatrixXd::Zero(dim, dim));
    st.v_ab.assign(rows, Eigen::MatrixXd::Zero(dim, dim));
    st.eta_a_hist.assign(rows, {});
    st.eta_b_hist.assign(rows, {});
    st.x_ab_hist.assign(rows, {});
    st.x_ba.resize(rows);
    for (int ell = 0; ell < rows; ++ell) {
        st.v_ba[ell](0, 0) = coupling::initial_variance(sys.base, ell, sys.n);
        st.x_ba[ell].assign(sys.nc(ell), 0.0);
    }
    const int L = sys.base.L();
    st.x_suf.assign(L, std::vector<double>(sys.n, 0.0));
    st.x_post.assign(L, std::vector<double>(sys.n, 0.0));
    st.v_suf_hist.assign(L, {});
    st.v_post.assign(L, 0.0);
    st.fprime_mean.assign(L, 0.0);
    st.qvec.resize(rows);
    st.qsum.assign(rows, 0.0);
    return st;
}

void lm_module_a_step(const coupling::CoupledSystem& sys, LmState& state) {
    const int t = state.t + 1;
    const double s2 = sys.sigma2;
    for (int ell = 0; ell < sys.base.rows(); ++ell) {
        const auto& sec = *sys.sections[ell];
        const int m = sec.m();
        const int nc = sec.nc();
        const double wsize = sys.base.w_count(ell);
        const double vt = state.v_ba[ell](t, t);
        if (!(vt > 0.0))
            throw DomainError("lm_module_a_step: nonpositive v_BA diagonal");

        const auto& s = sec.sv();
        // eta_A,t from the LMMSE filter at v_BA(t,t).
        double sum_ds = 0.0;
        for (int i = 0; i < m; ++i)
            sum_ds += vt * s[i] * s[i] / (s2 + vt * s[i] * s[i]);
        const double eta_t = 1.0 - sum_ds / nc;
        if (1.0 - eta_t < kOnsagerGuard)
            throw SingularFilter("lm_module_a_step: 1 - eta_A degenerate");
        state.eta_a_hist[ell].push_back(eta_t);

        // Posterior mean and the extrinsic mean, as in memoryless OAMP.
        std::vector<double> r(m), u(m);
        sec.apply_a(state.x_ba[ell].data(), r.data());
        kernels::scale_add(1.0, sys.y[ell].data(), -1.0, r.data(), r.data(),
                           static_cast<std::size_t>(m));
        sec.apply_ut(r.data(), u.data());
        for (int i = 0; i < m; ++i) u[i] *= vt * s[i] / (s2 + vt * s[i] * s[i]);
        std::vector<double> corr(nc);
        sec.apply_v(u.data(), corr.data());
        std::vector<double> x_ab(nc);
        const double scale = 1.0 / (std::sqrt(wsize) * (1.0 - eta_t));
        for (int i = 0; i < nc; ++i)
            x_ab[i] = scale * ((1.0 - eta_t) * state.x_ba[ell][i] + corr[i]);
        state.x_ab_hist[ell].push_back(std::move(x_ab));

        // Covariance row t of V_AB from the trace functionals.
        for (int tp = 0; tp <= t; ++tp) {
            const double vtp = state.v_ba[ell](tp, tp);
            const double eta_tp = state.eta_a_hist[ell][tp];
            double tr_ff = 0.0, tr_res = 0.0;
            for (int i = 0; i < m; ++i) {
                const double li = s[i] * s[i];
                const double dt = vt * s[i] / (s2 + vt * li);
                const double dtp = vtp * s[i] / (s2 + vtp * li);
                tr_ff += dt * dtp;
                tr_res += (1.0 - dt * s[i]) * (1.0 - dtp * s[i]);
            }
            tr_res += nc - m;
            const double v_post =
                s2 * tr_ff / nc + state.v_ba[ell](tp, t) * tr_res / nc;
            const double v_ab =
                (v_post - eta_tp * eta_t * state.v_ba[ell](tp, t)) /
                (wsize * (1.0 - eta_tp) * (1.0 - eta_t));
            state.v_ab[ell](tp, t) = v_ab;
            state.v_ab[ell](t, tp) = v_ab;
        }
    }
}

void lm_sufficient_statistic(const coupling::CoupledSystem& sys, LmState& state) {
    const int t = state.t + 1;
    const auto& base = sys.base;
    for (int ell = 0; ell < base.rows(); ++ell) {
        state.qvec[ell] = solve_ones(state.v_ab[ell].topLeftCorner(t + 1, t + 1),
                                     ell, &state.jitter_count);
        state.qsum[ell] = state.qvec[ell].sum();
    }
    for (int l = 0; l < base.L(); ++l) {
        double prec = 0.0;
        for (int w = 0; w <= base.W(); ++w) {
            const double g = base.gamma(l + w, l);
            prec += g * g * state.qsum[l + w];
        }
        const double v_suf = 1.0 / prec;
        state.v_suf_hist[l].push_back(v_suf);

        auto& x_suf = state.x_suf[l];
        std::fill(x_suf.begin(), x_suf.end(), 0.0);
        for (int w = 0; w <= base.W(); ++w) {
            const int ell = l + w;
            const double g = base.gamma(ell, l);
            const std::size_t off =
                static_cast<std::size_t>(base.w_max(ell) - w) * sys.n;
            for (int tau = 0; tau <= t; ++tau)
                kernels::axpy(v_suf * g * state.qvec[ell](tau),
                              state.x_ab_hist[ell][tau].data() + off,
                              x_suf.data(), static_cast<std::size_t>(sys.n));
        }
    }
}

void lm_module_b_step(const coupling::CoupledSystem& sys, LmState& state) {
    const int t = state.t + 1;
    const auto& base = sys.base;
    const int n = sys.n;
    const auto den = oamp::bayes_denoiser(sys.prior);

    for (int l = 0; l < base.L(); ++l) {
        const double v = state.v_suf_hist[l][t];
        auto& post = state.x_post[l];
        const auto& suf = state.x_suf[l];
        double pv = 0.0, fp = 0.0;
        for (int i = 0; i < n; ++i) {
            post[i] = den.f(suf[i], v);
            pv += den.postvar(suf[i], v);
            fp += den.fprime(suf[i], v);
        }
        // Conditional-expectation covariance estimators: with the latest
        // sufficient statistic the posterior covariance rows coincide with
        // the latest conditional variance (the estimator is uncorrelated
        // with its error).
        state.v_post[l] = pv / n;
        state.fprime_mean[l] = fp / n;
    }

    for (int ell = 0; ell < base.rows(); ++ell) {
        const int nc = sys.nc(ell);
        const double wsize = base.w_count(ell);

        double eta_b = 0.0, post_term = 0.0;
        for (int w = base.w_min(ell); w <= base.w_max(ell); ++w) {
            const int l = ell - w;
            const double g = base.gamma(ell, l);
            const double frac = static_cast<double>(n) / nc;
            eta_b += frac * wsize * g * g * state.qsum[ell] *
                     state.v_suf_hist[l][t] * state.fprime_mean[l];
            post_term += frac * wsize * g * g * state.v_post[l];
        }
        state.eta_b_hist[ell].push_back(eta_b);
        const double denom_t = 1.0 - eta_b / wsize;
        if (std::abs(denom_t) < kOnsagerGuard)
            throw SingularOnsager("lm_module_b_step: Onsager denominator degenerate");

        // History-weighted Onsager correction of the lifted posterior mean:
        // eta_B,tau,t = eta_B,t * q(tau) / qsum.
        std::vector<double> lift(nc);
        {
            const auto& proj = sys.projectors[ell];
            for (const auto& b : proj.blocks) {
                const auto& src = state.x_post[b.col_section];
                double* dst = lift.data() + b.offset;
                const double a = std::sqrt(wsize) * b.weight / denom_t;
                for (int i = 0; i < n; ++i) dst[i] = a * src[i];
            }
            for (int tau = 0; tau <= t; ++tau) {
                const double eta_tau =
                    eta_b * state.qvec[ell](tau) / state.qsum[ell];
                kernels::axpy(-eta_tau / (std::sqrt(wsize) * denom_t),
                              state.x_ab_hist[ell][tau].data(), lift.data(),
                              static_cast<std::size_t>(nc));
            }
        }
        state.x_ba[ell] = std::move(lift);

        // tau' = -1 row: v_BA(0, t+1).
        {
            double acc = 0.0;
            for (int w = base.w_min(ell); w <= base.w_max(ell); ++w) {
                const int l = ell - w;
                const double g = base.gamma(ell, l);
                acc += (static_cast<double>(n) / nc) * wsize * g * g *
                       state.v_post[l];
            }
            state.v_ba[ell](0, t + 1) = acc / denom_t;
            state.v_ba[ell](t + 1, 0) = state.v_ba[ell](0, t + 1);
        }
        for (int tp = 0; tp <= t; ++tp) {
            const double eta_b_tp = state.eta_b_hist[ell][tp];
            const double denom_tp = 1.0 - eta_b_tp / wsize;
            double acc = 0.0;
            for (int w = base.w_min(ell); w <= base.w_max(ell); ++w) {
                const int l = ell - w;
                const double g = base.gamma(ell, l);
                acc += (static_cast<double>(n) / nc) * wsize * g * g *
                       state.v_post[l];
            }
            acc -= eta_b_tp * eta_b / (wsize * state.qsum[ell]);
            const double val = acc / (denom_tp * denom_t);
            state.v_ba[ell](tp + 1, t + 1) = val;
            state.v_ba[ell](t + 1, tp + 1) = val;
        }
    }
    ++state.t;
}

LmRunResult run_lmoamp(const coupling::CoupledSystem& sys, int iterations) {
    if (iterations < 1) throw ConfigError("run_lmoamp: T must be >= 1");
    LmRunResult res;

    LmState lm = init_lm_state(sys, iterations);
    oamp::Options opts;  // LMMSE + Bayes shortcut, undamped
    oamp::State om = oamp::init_state(sys);
    const auto den = oamp::bayes_denoiser(sys.prior);

    auto rel_l2 = [](const std::vector<double>& a, const std::vector<double>& b) {
        const double d = kernels::sqdiff(a.data(), b.data(), a.size());
        const double ref = kernels::sumsq(b.data(), b.size());
        return ref > 0.0 ? std::sqrt(d / ref) : std::sqrt(d);
    };

    for (int t = 0; t < iterations; ++t) {
        lm_module_a_step(sys, lm);
        lm_sufficient_statistic(sys, lm);
        lm_module_b_step(sys, lm);

        oamp::module_a_step(sys, om, opts);
        oamp::sufficient_statistic(sys, om);
        oamp::module_b_step(sys, om, den, opts);

        auto& eq = res.equivalence;
        for (int ell = 0; ell < sys.base.rows(); ++ell) {
            eq.max_mean_dev = std::max(
                eq.max_mean_dev, rel_l2(lm.x_ab_hist[ell][t], om.x_ab[ell]));
            eq.max_mean_dev =
                std::max(eq.max_mean_dev, rel_l2(lm.x_ba[ell], om.x_ba[ell]));
            eq.max_var_dev = std::max(
                eq.max_var_dev, std::abs(lm.v_ab[ell](t, t) - om.v_ab[ell]));
            eq.max_var_dev = std::max(
                eq.max_var_dev,
                std::abs(lm.v_ba[ell](t + 1, t + 1) - om.v_ba[ell]));
        }

        std::vector<double> mse(sys.base.L());
        double largest = 0.0;
        for (int l = 0; l < sys.base.L(); ++l) {
            mse[l] = kernels::sqdiff(
                         sys.x_true.data() + static_cast<std::size_t>(l) * sys.n,
                         lm.x_post[l].data(), static_cast<std::size_t>(sys.n)) /
                     sys.n;
            largest = std::max(largest, mse[l]);
        }
        res.mse.push_back(std::move(mse));
        res.largest.push_back(largest);
    }
    res.equivalence.jitter_count = lm.jitter_count;
    res.equivalence.posdef_ok = lm.jitter_count == 0;
    return res;
}

}  // namespace scoamp::lmoamp
