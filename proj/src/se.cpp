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

#include "scoamp/se.hpp"

#include <cmath>
#include <string>

#include "scoamp/errors.hpp"

namespace scoamp::se {

namespace {

constexpr double kEtaGuard = 1e-15;

// 1^T V^{-1} 1 through an SPD factorization, with one jitter retry.
double ones_quadform_inv(const Eigen::MatrixXd& v, int ell, int* jitter_count) {
    Eigen::LLT<Eigen::MatrixXd> llt(v);
    if (llt.info() != Eigen::Success) {
        Eigen::MatrixXd vj = v;
        vj.diagonal().array() += 1e-12;
        llt.compute(vj);
        if (jitter_count) ++(*jitter_count);
        if (llt.info() != Eigen::Success)
            throw NotPosDef("V_AB not positive definite at section " +
                            std::to_string(ell));
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(v.rows());
    return ones.dot(llt.solve(ones));
}

}  // namespace

SeModel SeModel::make(const coupling::BaseMatrix& base, int n, int m,
                      coupling::Ensemble ensemble, double kappa,
                      const denoiser::Prior& prior, double sigma2) {
    if (!(sigma2 > 0.0)) throw ConfigError("se model: sigma2 must be > 0");
    if (n < 1 || m < 1 || m > n) throw ConfigError("se model: requires 1 <= M <= N");
    SeModel model{base, n, m, sigma2, prior, ensemble, kappa, {}};
    for (int ell = 0; ell < base.rows(); ++ell) {
        const double delta_eff = static_cast<double>(m) / model.nc(ell);
        switch (ensemble) {
            case coupling::Ensemble::IidGaussian:
                model.section_spectra.push_back(spectra::Spectrum::iid_gaussian(delta_eff));
                break;
            case coupling::Ensemble::RowOrthogonal:
                model.section_spectra.push_back(spectra::Spectrum::row_orthogonal(delta_eff));
                break;
            case coupling::Ensemble::Geometric:
                model.section_spectra.push_back(spectra::Spectrum::geometric(delta_eff, kappa));
                break;
        }
    }
    return model;
}

SeState init_se_state(const SeModel& model, double v_ba_override) {
    SeState st;
    const int rows = model.base.rows();
    st.v_ba.resize(rows);
    for (int ell = 0; ell < rows; ++ell)
        st.v_ba[ell] = v_ba_override > 0.0
                           ? v_ba_override
                           : coupling::initial_variance(model.base, ell, model.n);
    st.v_ba_prev = st.v_ba;
    st.v_ab.assign(rows, 0.0);
    st.eta_a.assign(rows, 0.0);
    st.eta_b.assign(rows, 0.0);
    st.v_suf.assign(model.base.L(), 0.0);
    st.v_post.assign(model.base.L(), 0.0);
    return st;
}

void se_step_bayes(const SeModel& model, SeState& state) {
    const auto& base = model.base;
    state.v_ba_prev = state.v_ba;
    for (int ell = 0; ell < base.rows(); ++ell) {
        const double wsize = base.w_count(ell);
        const double z = state.v_ba[ell] / (wsize * model.sigma2);
        const double eta = spectra::eta_transform(model.section_spectra[ell], z);
        if (1.0 - eta < kEtaGuard)
            throw DomainError("se_step_bayes: eta_A at 1 (degenerate LMMSE) at section " +
                              std::to_string(ell));
        state.eta_a[ell] = eta;
        state.v_ab[ell] = eta * state.v_ba[ell] / (wsize * (1.0 - eta));
    }
    for (int l = 0; l < base.L(); ++l) {
        double prec = 0.0;
        for (int w = 0; w <= base.W(); ++w) {
            const double g = base.gamma(l + w, l);
            prec += g * g / state.v_ab[l + w];
        }
        state.v_suf[l] = 1.0 / prec;
        state.v_post[l] = denoiser::mmse(model.prior, 1.0 / state.v_suf[l]);
    }
    for (int ell = 0; ell < base.rows(); ++ell) {
        const double wsize = base.w_count(ell);
        const int nc = model.nc(ell);
        double eta_b = 0.0;
        for (int w = base.w_min(ell); w <= base.w_max(ell); ++w) {
            const double g = base.gamma(ell, ell - w);
            eta_b += (static_cast<double>(model.n) / nc) * wsize * g * g *
                     state.v_post[ell - w] / state.v_ab[ell];
        }
        const double denom = 1.0 - eta_b / wsize;
        if (std::abs(denom) < kEtaGuard)
            throw SingularOnsager("se_step_bayes: Onsager denominator degenerate");
        state.eta_b[ell] = eta_b;
        state.v_ba[ell] = eta_b * state.v_ab[ell] / denom;
    }
    ++state.iter;
}

void se_step_general(const SeModel& model, oamp::Filter filter, SeState& state) {
    const auto& base = model.base;
    state.v_ba_prev = state.v_ba;
    for (int ell = 0; ell < base.rows(); ++ell) {
        const double wsize = base.w_count(ell);
        const double v = state.v_ba[ell];
        const double s2 = model.sigma2;
        const auto& spec = model.section_spectra[ell];
        // All traces as means over the law of lambda_G = |W| lambda.
        double eta_a, tr_ftf, tr_res;
        if (filter == oamp::Filter::Lmmse) {
            const double z = v / (wsize * s2);
            eta_a = spectra::eta_transform(spec, z);
            const double deta = spectra::eta_transform_deriv(spec, z);
            tr_ftf = -(v / s2) * z * deta;
            tr_res = eta_a + z * deta;
        } else if (filter == oamp::Filter::Mf) {
            // F = A: d = sqrt(lambda), lambda = lambda_G / |W|.
            eta_a = 1.0 - spectra::spectral_mean(spec, [&](double lg) {
                        return lg / wsize;
                    });
            tr_ftf = spectra::spectral_mean(spec, [&](double lg) { return lg / wsize; });
            tr_res = spectra::spectral_mean(spec, [&](double lg) {
                const double d = 1.0 - lg / wsize;
                return d * d;
            });
        } else {
            // ZF: F^T A is the projection onto the row space.
            const double rank_frac = spectra::spectral_mean(
                spec, [](double lg) { return lg > 0.0 ? 1.0 : 0.0; });
            eta_a = 1.0 - rank_frac;
            tr_ftf = spectra::spectral_mean(spec, [&](double lg) {
                return lg > 0.0 ? wsize / lg : 0.0;
            });
            tr_res = 1.0 - rank_frac;
        }
        if (1.0 - eta_a < kEtaGuard)
            throw DomainError("se_step_general: eta_A degenerate");
        const double v_post = s2 * tr_ftf + v * tr_res;
        state.eta_a[ell] = eta_a;
        state.v_ab[ell] = (v_post - eta_a * eta_a * v) /
                          (wsize * (1.0 - eta_a) * (1.0 - eta_a));
        if (!(state.v_ab[ell] > 0.0))
            throw DomainError("se_step_general: nonpositive v_AB");
    }
    for (int l = 0; l < base.L(); ++l) {
        double prec = 0.0;
        for (int w = 0; w <= base.W(); ++w) {
            const double g = base.gamma(l + w, l);
            prec += g * g / state.v_ab[l + w];
        }
        state.v_suf[l] = 1.0 / prec;
        state.v_post[l] = denoiser::mmse(model.prior, 1.0 / state.v_suf[l]);
    }
    for (int ell = 0; ell < base.rows(); ++ell) {
        const double wsize = base.w_count(ell);
        const int nc = model.nc(ell);
        double eta_b = 0.0, post_term = 0.0;
        for (int w = base.w_min(ell); w <= base.w_max(ell); ++w) {
            const int l = ell - w;
            const double g = base.gamma(ell, l);
            const double frac = static_cast<double>(model.n) / nc;
            eta_b += frac * wsize * g * g * state.v_suf[l] *
                     denoiser::mean_fprime(model.prior, state.v_suf[l]) / state.v_ab[ell];
            post_term += frac * wsize * g * g * state.v_post[l];
        }
        const double denom = 1.0 - eta_b / wsize;
        if (std::abs(denom) < kEtaGuard)
            throw SingularOnsager("se_step_general: Onsager denominator degenerate");
        state.eta_b[ell] = eta_b;
        state.v_ba[ell] = (post_term - eta_b * eta_b * state.v_ab[ell] / wsize) /
                          (denom * denom);
        if (!(state.v_ba[ell] > 0.0))
            throw DomainError("se_step_general: nonpositive v_BA");
    }
    ++state.iter;
}

LmSeState init_lm_se_state(const SeModel& model, int t_max) {
    if (t_max > 64) throw ConfigError("lm se: history capped at T <= 64");
    LmSeState st;
    const int rows = model.base.rows();
    const int dim = t_max + 1;
    st.v_ba.assign(rows, Eigen::MatrixXd::Zero(dim, dim));
    st.v_ab.assign(rows, Eigen::MatrixXd::Zero(dim, dim));
    st.eta_a_hist.assign(rows, {});
    st.eta_b_hist.assign(rows, {});
    for (int ell = 0; ell < rows; ++ell)
        st.v_ba[ell](0, 0) = coupling::initial_variance(model.base, ell, model.n);
    st.v_suf_hist.assign(model.base.L(), {});
    st.p_post.assign(model.base.L(), Eigen::MatrixXd::Zero(dim + 1, dim + 1));
    for (auto& p : st.p_post) p(0, 0) = 1.0;  // E[x^2]
    return st;
}

void se_step_lm(const SeModel& model, LmSeState& state) {
    const auto& base = model.base;
    const int t = state.t + 1;  // iteration being computed
    const double s2 = model.sigma2;

    // Module A: posterior/extrinsic covariance row t (all t' <= t).
    for (int ell = 0; ell < base.rows(); ++ell) {
        const double wsize = base.w_count(ell);
        const auto& spec = model.section_spectra[ell];
        const double vt = state.v_ba[ell](t, t);
        if (!(vt > 0.0)) throw DomainError("se_step_lm: nonpositive v_BA diagonal");
        const double eta_t =
            spectra::eta_transform(spec, vt / (wsize * s2));
        if (1.0 - eta_t < kEtaGuard)
            throw DomainError("se_step_lm: eta_A degenerate");
        state.eta_a_hist[ell].push_back(eta_t);

        for (int tp = 0; tp <= t; ++tp) {
            const double vtp = state.v_ba[ell](tp, tp);
            const double eta_tp = state.eta_a_hist[ell][tp];
            // Tr(F_t^T F_t') and Tr((I - F_t^T A)(I - F_t'^T A)^T) per Nc,
            // as means over lambda_G with lambda = lambda_G/|W|.
            const double t1 = spectra::spectral_mean(spec, [&](double lg) {
                const double lam = lg / wsize;
                return vt * vtp * lam /
                       ((s2 + vt * lam) * (s2 + vtp * lam));
            });
            const double t2 = spectra::spectral_mean(spec, [&](double lg) {
                const double lam = lg / wsize;
                return (s2 / (s2 + vt * lam)) * (s2 / (s2 + vtp * lam));
            });
            const double v_post = s2 * t1 + state.v_ba[ell](tp, t) * t2;
            const double v_ab =
                (v_post - eta_tp * eta_t * state.v_ba[ell](tp, t)) /
                (wsize * (1.0 - eta_tp) * (1.0 - eta_t));
            state.v_ab[ell](tp, t) = v_ab;
            state.v_ab[ell](t, tp) = v_ab;
        }
    }

    // LM sufficient statistic: 1/v_suf(t',t) = sum_w gamma^2 1^T V^-1 1.
    std::vector<double> qform(base.rows());
    for (int ell = 0; ell < base.rows(); ++ell)
        qform[ell] = ones_quadform_inv(
            state.v_ab[ell].topLeftCorner(t + 1, t + 1), ell, &state.jitter_count);

    std::vector<double> v_suf(base.L());
    for (int l = 0; l < base.L(); ++l) {
        double prec = 0.0;
        for (int w = 0; w <= base.W(); ++w) {
            const double g = base.gamma(l + w, l);
            prec += g * g * qform[l + w];
        }
        v_suf[l] = 1.0 / prec;
        state.v_suf_hist[l].push_back(v_suf[l]);
    }

    // Posterior covariance rows: P(j, t+1) for all j <= t+1 with est_0 = 0,
    // est_j = f_{j-1} at noise level v_suf[j-1].
    for (int l = 0; l < base.L(); ++l) {
        auto& p = state.p_post[l];
        const double vb = v_suf[l];
        const double exf_t = denoiser::mean_x_f(model.prior, vb);
        p(0, t + 1) = 1.0 - exf_t;  // E[x (x - f_t)]
        p(t + 1, 0) = p(0, t + 1);
        for (int j = 1; j <= t + 1; ++j) {
            const double va = state.v_suf_hist[l][j - 1];
            // cov(z_{j-1}, z_t) = v_suf at the later iteration t.
            const double eff = denoiser::mean_ff_lagged(model.prior, va, vb);
            const double exf_a = denoiser::mean_x_f(model.prior, va);
            const double val = 1.0 - exf_a - exf_t + eff;
            p(j, t + 1) = val;
            p(t + 1, j) = val;
        }
    }

    // eta_B and the extrinsic covariance rows of V_BA.
    for (int ell = 0; ell < base.rows(); ++ell) {
        const double wsize = base.w_count(ell);
        const int nc = model.nc(ell);
        double eta_b = 0.0;
        for (int w = base.w_min(ell); w <= base.w_max(ell); ++w) {
            const int l = ell - w;
            const double g = base.gamma(ell, l);
            eta_b += (static_cast<double>(model.n) / nc) * wsize * g * g *
                     qform[ell] * v_suf[l] * denoiser::mean_fprime(model.prior, v_suf[l]);
        }
        state.eta_b_hist[ell].push_back(eta_b);
        const double denom_t = 1.0 - eta_b / wsize;
        if (std::abs(denom_t) < kEtaGuard)
            throw SingularOnsager("se_step_lm: Onsager denominator degenerate");

        // tau' = -1 row (the estimator 0): (1 - eta_t/|W|) v_BA(0, t+1).
        {
            double acc = 0.0;
            for (int w = base.w_min(ell); w <= base.w_max(ell); ++w) {
                const int l = ell - w;
                const double g = base.gamma(ell, l);
                acc += (static_cast<double>(model.n) / nc) * wsize * g * g *
                       state.p_post[l](0, t + 1);
            }
            const double val = acc / denom_t;
            state.v_ba[ell](0, t + 1) = val;
            state.v_ba[ell](t + 1, 0) = val;
        }
        for (int tp = 0; tp <= t; ++tp) {
            const double eta_b_tp = state.eta_b_hist[ell][tp];
            const double denom_tp = 1.0 - eta_b_tp / wsize;
            double acc = 0.0;
            for (int w = base.w_min(ell); w <= base.w_max(ell); ++w) {
                const int l = ell - w;
                const double g = base.gamma(ell, l);
                acc += (static_cast<double>(model.n) / nc) * wsize * g * g *
                       state.p_post[l](tp + 1, t + 1);
            }
            acc -= eta_b_tp * eta_b / (wsize * qform[ell]);
            const double val = acc / (denom_tp * denom_t);
            state.v_ba[ell](tp + 1, t + 1) = val;
            state.v_ba[ell](t + 1, tp + 1) = val;
        }
    }
    ++state.t;
}

EsState se_to_es(const SeModel& model, const SeState& state) {
    const auto& base = model.base;
    const double wu = 1.0 / std::sqrt(static_cast<double>(base.W() + 1));
    for (int l = 0; l < base.L(); ++l)
        for (int w = 0; w <= base.W(); ++w)
            if (std::abs(base.gamma(l + w, l) - wu) > 1e-12)
                throw DomainError("se_to_es: requires the uniform base matrix");

    EsState es;
    es.e.resize(base.rows());
    es.s.resize(base.L());
    es.nu.resize(base.rows());
    for (int ell = 0; ell < base.rows(); ++ell) {
        double acc = 0.0;
        for (int w = base.w_min(ell); w <= base.w_max(ell); ++w)
            acc += state.v_post[ell - w];
        es.e[ell] = acc / (base.W() + 1);
        es.nu[ell] = state.eta_a[ell] * state.v_ba_prev[ell];
    }
    for (int l = 0; l < base.L(); ++l) es.s[l] = 1.0 / state.v_suf[l];

    // Internal consistency: 1/v_AB = R_G(-eta_A v_BA / (|W| sigma^2)) / sigma^2.
    double resid = 0.0;
    for (int ell = 0; ell < base.rows(); ++ell) {
        const double wsize = base.w_count(ell);
        const double arg = -state.eta_a[ell] * state.v_ba_prev[ell] /
                           (wsize * model.sigma2);
        const double rhs =
            spectra::r_transform(model.section_spectra[ell], arg) / model.sigma2;
        resid = std::max(resid, std::abs(1.0 / state.v_ab[ell] - rhs) /
                                    std::abs(rhs));
    }
    es.var_ab_r_residual = resid;
    return es;
}

std::vector<double> es_s_from_r(const SeModel& model, const SeState& state) {
    const auto& base = model.base;
    std::vector<double> s(base.L());
    for (int l = 0; l < base.L(); ++l) {
        double acc = 0.0;
        for (int ell = l; ell <= l + base.W(); ++ell) {
            const double wsize = base.w_count(ell);
            const double z = state.eta_a[ell] * state.v_ba_prev[ell];
            acc += spectra::r_transform(model.section_spectra[ell],
                                        -z / (wsize * model.sigma2)) /
                   model.sigma2;
        }
        s[l] = acc / (base.W() + 1);
    }
    return s;
}

std::function<double(double)> limit_r_function(coupling::Ensemble ensemble,
                                               double delta, double kappa) {
    switch (ensemble) {
        case coupling::Ensemble::IidGaussian:
        case coupling::Ensemble::RowOrthogonal:
            return [delta](double z) { return delta / (delta - z); };
        case coupling::Ensemble::Geometric:
            return [delta, kappa](double z) {
                return spectra::geometric_r_closed_form(delta, kappa, z);
            };
    }
    throw ConfigError("limit_r_function: unknown ensemble");
}

ApproxSeState init_approx_state(const SeModel& model) {
    // s~_0 = s_0 from the exact Bayes recursion's first half-iteration.
    SeState exact = init_se_state(model);
    se_step_bayes(model, exact);
    ApproxSeState st;
    st.s_tilde.resize(model.base.L());
    for (int l = 0; l < model.base.L(); ++l) st.s_tilde[l] = 1.0 / exact.v_suf[l];
    st.e_tilde.assign(model.base.rows(), 0.0);
    return st;
}

void se_step_approx(const SeModel& model,
                    const std::function<double(double)>& r_limit,
                    ApproxSeState& state) {
    const auto& base = model.base;
    const double s2 = model.sigma2;
    for (int ell = 0; ell < base.rows(); ++ell) {
        double acc = 0.0;
        for (int w = base.w_min(ell); w <= base.w_max(ell); ++w)
            acc += denoiser::mmse(model.prior, state.s_tilde[ell - w]);
        state.e_tilde[ell] = acc / (base.W() + 1);
    }
    for (int l = 0; l < base.L(); ++l) {
        double acc = 0.0;
        for (int ell = l; ell <= l + base.W(); ++ell)
            acc += r_limit(-state.e_tilde[ell] / s2) / s2;
        state.s_tilde[l] = acc / (base.W() + 1);
    }
    ++state.iter;
}

SeRunResult run_se(SeKind kind, const SeModel& model, int t_max, double tol,
                   double v_ba_override, oamp::Filter filter) {
    if (t_max < 1) throw ConfigError("run_se: T must be >= 1");
    SeRunResult res;

    auto record = [&](const std::vector<double>& v) {
        res.trajectory.push_back(v);
        double dv = 0.0;
        if (res.trajectory.size() >= 2) {
            const auto& prev = res.trajectory[res.trajectory.size() - 2];
            for (std::size_t i = 0; i < v.size(); ++i)
                dv = std::max(dv, std::abs(v[i] - prev[i]));
        } else {
            dv = 1.0;
        }
        return dv;
    };

    if (kind == SeKind::Approx) {
        auto r = limit_r_function(model.ensemble, model.delta(), model.kappa);
        ApproxSeState st = init_approx_state(model);
        for (int t = 0; t < t_max; ++t) {
            se_step_approx(model, r, st);
            res.iterations_run = t + 1;
            if (record(st.e_tilde) < tol && t > 0) {
                res.converged = true;
                break;
            }
        }
        res.final_values = st.e_tilde;
    } else if (kind == SeKind::Lm) {
        LmSeState st = init_lm_se_state(model, t_max);
        std::vector<double> diag(model.base.L());
        for (int t = 0; t < t_max; ++t) {
            se_step_lm(model, st);
            for (int l = 0; l < model.base.L(); ++l)
                diag[l] = st.p_post[l](t + 1, t + 1);
            res.iterations_run = t + 1;
            if (record(diag) < tol && t > 0) {
                res.converged = true;
                break;
            }
        }
        res.final_values = diag;
    } else {
        SeState st = init_se_state(model, v_ba_override);
        for (int t = 0; t < t_max; ++t) {
            if (kind == SeKind::Bayes)
                se_step_bayes(model, st);
            else
                se_step_general(model, filter, st);
            res.iterations_run = t + 1;
            if (record(st.v_post) < tol && t > 0) {
                res.converged = true;
                break;
            }
        }
        res.final_values = st.v_post;
    }

    res.mean_v_post = 0.0;
    res.max_v_post = 0.0;
    for (double v : res.final_values) {
        res.mean_v_post += v;
        res.max_v_post = std::max(res.max_v_post, v);
    }
    res.mean_v_post /= static_cast<double>(res.final_values.size());
    return res;
}

}  // namespace scoamp::se
