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

#include "scoamp/denoiser.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "scoamp/errors.hpp"
#include "scoamp/spectra.hpp"

namespace scoamp::denoiser {

namespace {

void check_v(double v) {
    if (!(v > 0.0)) throw DomainError("denoiser: noise variance must be > 0");
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Posterior nonzero-probability of the BG prior in log-space:
// pi = sigmoid(ln(rho/(1-rho)) + ln phi(u;0,s0+v) - ln phi(u;0,v)).
inline double bg_pi(double rho, double u, double v) {
    if (rho >= 1.0) return 1.0;
    const double s0 = 1.0 / rho;
    const double delta = std::log(rho / (1.0 - rho)) -
                         0.5 * std::log((s0 + v) / v) +
                         0.5 * u * u * (1.0 / v - 1.0 / (s0 + v));
    return sigmoid(delta);
}

}  // namespace

Prior Prior::bernoulli_gaussian(double rho) {
    if (!(rho > 0.0 && rho <= 1.0))
        throw DomainError("prior: rho must be in (0,1]");
    Prior p;
    p.kind = Kind::BernoulliGaussian;
    p.rho = rho;
    return p;
}

Prior Prior::gaussian() {
    Prior p;
    p.kind = Kind::Gaussian;
    p.rho = 1.0;
    return p;
}

double Prior::information_dimension() const {
    return kind == Kind::BernoulliGaussian ? rho : 1.0;
}

double denoise(const Prior& prior, double u, double v) {
    check_v(v);
    if (prior.kind == Prior::Kind::Gaussian) return u / (1.0 + v);
    const double s0 = 1.0 / prior.rho;
    const double c = s0 / (s0 + v);
    return bg_pi(prior.rho, u, v) * c * u;
}

double denoise_derivative(const Prior& prior, double u, double v) {
    check_v(v);
    if (prior.kind == Prior::Kind::Gaussian) return 1.0 / (1.0 + v);
    const double s0 = 1.0 / prior.rho;
    const double c = s0 / (s0 + v);
    const double pi = bg_pi(prior.rho, u, v);
    return c * pi * (1.0 + u * u * (1.0 - pi) * (1.0 / v - 1.0 / (s0 + v)));
}

double posterior_variance(const Prior& prior, double u, double v) {
    check_v(v);
    if (prior.kind == Prior::Kind::Gaussian) return v / (1.0 + v);
    const double s0 = 1.0 / prior.rho;
    const double c = s0 / (s0 + v);
    const double pi = bg_pi(prior.rho, u, v);
    return pi * c * v + c * c * u * u * pi * (1.0 - pi);
}

GaussHermite::GaussHermite(int order) {
    // Golub-Welsch on the Jacobi matrix of the Hermite polynomials
    // orthonormal w.r.t. N(0,1): zero diagonal, off-diagonal sqrt(k).
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double b = std::sqrt(static_cast<double>(k));
        j(k, k - 1) = b;
        j(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    nodes.resize(order);
    weights.resize(order);
    for (int i = 0; i < order; ++i) {
        nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        weights[i] = v0 * v0;
    }
}

const GaussHermite& gh61() {
    static const GaussHermite rule(61);
    return rule;
}

namespace {

inline double log_phi(double u, double var) {
    return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * u * u / var;
}
inline double phi(double u, double var) { return std::exp(log_phi(u, var)); }

// Location and width of the BG posterior detection boundary (pi = 1/2);
// returns false when the odds never cross (rho close to 1).
bool bg_boundary(double rho, double v, double& ustar, double& width) {
    if (rho >= 0.5) return false;
    const double s0 = 1.0 / rho;
    const double k = s0 / (v * (s0 + v));
    const double rhs =
        2.0 / k * (0.5 * std::log((s0 + v) / v) + std::log((1.0 - rho) / rho));
    if (rhs <= 0.0) return false;
    ustar = std::sqrt(rhs);
    width = 1.0 / (k * ustar);
    return true;
}

// Integrates an even integrand (measure included) over [0, umax] with break
// points at the detection boundary and a dyadic ladder resolving the narrow
// N(0, v) measure component under the wide signal scale; result is doubled.
double integrate_even_marginal(const std::function<double(double)>& h,
                               double rho, double v, double umax) {
    std::vector<double> breaks{0.0};
    double ustar, width;
    if (bg_boundary(rho, v, ustar, width)) {
        for (double b : {ustar - 8 * width, ustar - 2 * width, ustar,
                         ustar + 2 * width, ustar + 8 * width})
            if (b > 0.0 && b < umax) breaks.push_back(b);
    }
    for (double scale = 0.5 * std::sqrt(v); scale < umax; scale *= 2.0)
        breaks.push_back(scale);
    breaks.push_back(umax);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    double acc = 0.0;
    const double tol = 1e-13 / static_cast<double>(breaks.size());
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
        acc += spectra::integrate(h, breaks[i], breaks[i + 1], tol);
    return 2.0 * acc;
}

}  // namespace

double mmse(const Prior& prior, double s) {
    if (s < 0.0) throw DomainError("mmse: s must be >= 0");
    if (prior.kind == Prior::Kind::Gaussian) return 1.0 / (1.0 + s);
    if (s == 0.0) return 1.0;
    const double v = 1.0 / s;
    const double rho = prior.rho;
    const double s0 = 1.0 / rho;
    auto h = [&](double u) {
        const double p =
            (1.0 - rho) * phi(u, v) + rho * phi(u, s0 + v);
        return posterior_variance(prior, u, v) * p;
    };
    const double umax = 12.0 * std::sqrt(s0 + v);
    return integrate_even_marginal(h, rho, v, umax);
}

double mean_fprime(const Prior& prior, double v) {
    if (!(v > 0.0)) throw DomainError("mean_fprime: v must be > 0");
    if (prior.kind == Prior::Kind::Gaussian) return 1.0 / (1.0 + v);
    const double rho = prior.rho;
    const double s0 = 1.0 / rho;
    auto h = [&](double u) {
        const double p = (1.0 - rho) * phi(u, v) + rho * phi(u, s0 + v);
        return denoise_derivative(prior, u, v) * p;
    };
    return integrate_even_marginal(h, rho, v, 12.0 * std::sqrt(s0 + v));
}

double mean_x_f(const Prior& prior, double v) {
    if (!(v > 0.0)) throw DomainError("mean_x_f: v must be > 0");
    // Only the Gaussian component carries x; there (x, u) is jointly
    // Gaussian with E[x | u] = c u.
    const double rho = prior.kind == Prior::Kind::Gaussian ? 1.0 : prior.rho;
    const double s0 = 1.0 / rho;
    const double c = s0 / (s0 + v);
    auto h = [&](double u) {
        return rho * c * u * denoise(prior, u, v) * phi(u, s0 + v);
    };
    return integrate_even_marginal(h, prior.rho, v, 12.0 * std::sqrt(s0 + v));
}

double mean_f_squared(const Prior& prior, double v) {
    if (!(v > 0.0)) throw DomainError("mean_f_squared: v must be > 0");
    const double rho = prior.kind == Prior::Kind::Gaussian ? 1.0 : prior.rho;
    const double s0 = 1.0 / rho;
    auto h = [&](double u) {
        const double f = denoise(prior, u, v);
        const double p = (1.0 - rho) * phi(u, v) + rho * phi(u, s0 + v);
        return f * f * p;
    };
    return integrate_even_marginal(h, prior.rho, v, 12.0 * std::sqrt(s0 + v));
}

double mean_ff_lagged(const Prior& prior, double va, double vb) {
    if (!(vb > 0.0) || va < vb)
        throw DomainError("mean_ff_lagged: requires va >= vb > 0");
    const double rho = prior.kind == Prior::Kind::Gaussian ? 1.0 : prior.rho;
    const double s0 = 1.0 / rho;
    const double v_delta = va - vb;

    // Inner integral over the u line for a fixed lag delta: the f(.; vb)
    // boundary sits at +-ustar_b, the lagged f(.; va) at -delta +- ustar_a.
    auto inner = [&](double delta, double vu) {
        double ua, wa, ub, wb;
        const bool ba = bg_boundary(prior.rho, va, ua, wa);
        const bool bb = bg_boundary(prior.rho, vb, ub, wb);
        const double umax = 12.0 * std::sqrt(vu) + std::abs(delta) +
                            (ba ? ua : 0.0) + (bb ? ub : 0.0);
        std::vector<double> breaks{-umax, umax};
        auto push = [&](double b) {
            if (b > -umax && b < umax) breaks.push_back(b);
        };
        push(0.0);
        for (double scale = 0.5 * std::sqrt(vu); scale < umax; scale *= 2.0) {
            push(scale);
            push(-scale);
        }
        if (bb)
            for (double off : {-8 * wb, -2 * wb, 0.0, 2 * wb, 8 * wb}) {
                push(ub + off);
                push(-ub + off);
            }
        if (ba)
            for (double off : {-8 * wa, -2 * wa, 0.0, 2 * wa, 8 * wa}) {
                push(-delta + ua + off);
                push(-delta - ua + off);
            }
        std::sort(breaks.begin(), breaks.end());
        breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
        auto h = [&](double u) {
            return denoise(prior, u + delta, va) * denoise(prior, u, vb) *
                   phi(u, vu);
        };
        double acc = 0.0;
        const double tol = 1e-13 / static_cast<double>(breaks.size());
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
            acc += spectra::integrate(h, breaks[i], breaks[i + 1], tol);
        return acc;
    };

    auto component = [&](double vu) {
        if (v_delta <= 1e-300) return inner(0.0, vu);
        // The lag integrand is even in delta and smooth (a convolution).
        auto g = [&](double delta) {
            return 2.0 * inner(delta, vu) * phi(delta, v_delta);
        };
        return spectra::integrate(g, 0.0, 8.0 * std::sqrt(v_delta), 1e-13);
    };

    if (prior.kind == Prior::Kind::Gaussian) return component(s0 + vb);
    return (1.0 - rho) * component(vb) + rho * component(s0 + vb);
}

double mutual_info(const Prior& prior, double s) {
    if (s < 0.0) throw DomainError("mutual_info: s must be >= 0");
    if (prior.kind == Prior::Kind::Gaussian) return 0.5 * std::log1p(s);
    if (s == 0.0) return 0.0;
    auto f = [&](double t) { return mmse(prior, t); };
    return 0.5 * spectra::integrate(f, 0.0, s, 1e-10);
}

double sample(const Prior& prior, double uniform01, double gauss01) {
    if (prior.kind == Prior::Kind::Gaussian) return gauss01;
    return uniform01 < prior.rho ? gauss01 / std::sqrt(prior.rho) : 0.0;
}

MmseIntegralCache::MmseIntegralCache(const Prior& prior, double s_max,
                                     int points_per_decade)
    : prior_(prior), s_max_(s_max) {
    const double tau_max = std::log1p(s_max);
    const int n =
        std::max(64, static_cast<int>(tau_max / std::log(10.0) * points_per_decade));
    tau_.resize(n + 1);
    phi_.resize(n + 1);
    dphi_.resize(n + 1);
    const double dt = tau_max / n;
    auto f = [&](double s) { return mmse(prior_, s); };
    tau_[0] = 0.0;
    phi_[0] = 0.0;
    dphi_[0] = 1.0;
    double s_prev = 0.0;
    for (int j = 1; j <= n; ++j) {
        tau_[j] = j * dt;
        const double s_j = std::expm1(tau_[j]);
        phi_[j] = phi_[j - 1] + spectra::integrate(f, s_prev, s_j, 1e-12);
        dphi_[j] = mmse(prior_, s_j);
        s_prev = s_j;
    }
}

double MmseIntegralCache::integral(double s) const {
    if (s <= 0.0) return 0.0;
    if (s >= s_max_) {
        // MMSE(s) ~ d_I/s in the tail.
        return phi_.back() +
               prior_.information_dimension() * std::log(s / s_max_);
    }
    const double tau = std::log1p(s);
    const double dt = tau_[1];
    const int j = std::min(static_cast<int>(tau / dt), static_cast<int>(tau_.size()) - 2);
    const double sa = std::expm1(tau_[j]);
    const double sb = std::expm1(tau_[j + 1]);
    const double h = sb - sa;
    const double t = (s - sa) / h;
    // Cubic Hermite with exact endpoint derivatives MMSE(sa), MMSE(sb).
    const double t2 = t * t, t3 = t2 * t;
    return phi_[j] * (2 * t3 - 3 * t2 + 1) + h * dphi_[j] * (t3 - 2 * t2 + t) +
           phi_[j + 1] * (-2 * t3 + 3 * t2) + h * dphi_[j + 1] * (t3 - t2);
}

}  // namespace scoamp::denoiser
