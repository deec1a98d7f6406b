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

#include "scoamp/amp.hpp"

#include <cmath>

#include "scoamp/denoiser.hpp"
#include "scoamp/errors.hpp"
#include "scoamp/kernels.hpp"

namespace scoamp::amp {

AmpResult run_amp(const coupling::CoupledSystem& sys, const AmpOptions& opts) {
    if (sys.ensemble != coupling::Ensemble::IidGaussian)
        throw ConfigError("run_amp: baseline requires the iid Gaussian ensemble");
    if (opts.iterations < 1) throw ConfigError("run_amp: T must be >= 1");

    const auto& base = sys.base;
    const int L = base.L();
    const int rows = base.rows();
    const int n = sys.n;
    const int m = sys.m;
    const auto& prior = sys.prior;

    // Effective block matrix B[ell][l] = gamma[ell][l] A[ell][l]; entries of
    // block (ell, l) have variance gamma^2 / M. Applications reuse the
    // section operators through the Gamma projectors.
    std::vector<std::vector<double>> xhat(L, std::vector<double>(n, 0.0));
    std::vector<double> tau_x(L, 1.0);  // prior variance
    std::vector<std::vector<double>> s_vec(rows, std::vector<double>(m, 0.0));
    std::vector<double> v_p(rows, 0.0);
    std::vector<std::vector<double>> r(L, std::vector<double>(n, 0.0));
    std::vector<double> tau_r(L, 0.0);
    std::vector<std::vector<double>> r_prev;
    std::vector<double> tau_r_prev;

    AmpResult res;
    std::vector<double> xhat_all(static_cast<std::size_t>(L) * n, 0.0);

    for (int t = 0; t < opts.iterations; ++t) {
        // Output side: p[ell] = (B xhat)[ell] - V_p[ell] s_prev[ell].
        for (int l = 0; l < L; ++l)
            std::copy(xhat[l].begin(), xhat[l].end(),
                      xhat_all.begin() + static_cast<std::size_t>(l) * n);
        for (int ell = 0; ell < rows; ++ell) {
            const double wsize = base.w_count(ell);
            double vp = 0.0;
            for (int w = base.w_min(ell); w <= base.w_max(ell); ++w) {
                const double g = base.gamma(ell, ell - w);
                vp += (static_cast<double>(n) / m) * g * g * tau_x[ell - w];
            }
            std::vector<double> stacked(sys.nc(ell));
            sys.projectors[ell].apply(xhat_all.data(), stacked.data());
            const double scale = std::sqrt(wsize);
            for (auto& v : stacked) v *= scale;
            std::vector<double> p(m);
            sys.sections[ell]->apply_a(stacked.data(), p.data());
            // s = (y - p + V_p s_prev) / (sigma^2 + V_p)
            const double denom = sys.sigma2 + vp;
            for (int i = 0; i < m; ++i)
                p[i] = (sys.y[ell][i] - p[i] + vp * s_vec[ell][i]) / denom;
            s_vec[ell] = std::move(p);
            v_p[ell] = vp;
        }

        // Input side: r[l] = xhat[l] + tau_r[l] (B^T s)[l].
        std::vector<double> bts(static_cast<std::size_t>(L) * n, 0.0);
        for (int ell = 0; ell < rows; ++ell) {
            const double wsize = base.w_count(ell);
            std::vector<double> at_s(sys.nc(ell));
            sys.sections[ell]->apply_at(s_vec[ell].data(), at_s.data());
            const double scale = std::sqrt(wsize);
            for (auto& v : at_s) v *= scale;
            sys.projectors[ell].apply_adjoint_add(at_s.data(), bts.data());
        }
        std::vector<std::vector<double>> r_new(L, std::vector<double>(n));
        std::vector<double> tau_r_new(L);
        for (int l = 0; l < L; ++l) {
            double prec = 0.0;
            for (int w = 0; w <= base.W(); ++w) {
                const double g = base.gamma(l + w, l);
                prec += g * g / (sys.sigma2 + v_p[l + w]);
            }
            tau_r_new[l] = 1.0 / prec;
            const double* src = bts.data() + static_cast<std::size_t>(l) * n;
            for (int i = 0; i < n; ++i)
                r_new[l][i] = xhat[l][i] + tau_r_new[l] * src[i];
        }

        // Damping on the mean and variance messages just before denoising.
        if (t > 0 && opts.zeta < 1.0) {
            for (int l = 0; l < L; ++l) {
                kernels::scale_add(opts.zeta, r_new[l].data(), 1.0 - opts.zeta,
                                   r_prev[l].data(), r_new[l].data(),
                                   static_cast<std::size_t>(n));
                tau_r_new[l] =
                    opts.zeta * tau_r_new[l] + (1.0 - opts.zeta) * tau_r_prev[l];
            }
        }
        r_prev = r_new;
        tau_r_prev = tau_r_new;
        r = std::move(r_new);
        tau_r = std::move(tau_r_new);

        std::vector<double> mse(L);
        double largest = 0.0;
        for (int l = 0; l < L; ++l) {
            double pv = 0.0;
            for (int i = 0; i < n; ++i) {
                xhat[l][i] = denoiser::denoise(prior, r[l][i], tau_r[l]);
                pv += denoiser::posterior_variance(prior, r[l][i], tau_r[l]);
            }
            tau_x[l] = pv / n;
            mse[l] = kernels::sqdiff(sys.x_true.data() +
                                         static_cast<std::size_t>(l) * n,
                                     xhat[l].data(), static_cast<std::size_t>(n)) /
                     n;
            largest = std::max(largest, mse[l]);
        }
        res.mse.push_back(std::move(mse));
        res.largest.push_back(largest);
        res.iterations_run = t + 1;
        if (largest > 10.0) {
            res.diverged = true;
            break;
        }
    }
    return res;
}

}  // namespace scoamp::amp
