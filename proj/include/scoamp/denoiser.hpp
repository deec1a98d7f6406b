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

#include <memory>
#include <vector>

// Scalar priors with unit second moment, their conditional-mean denoisers,
// MMSE curves and mutual information. The Bernoulli-Gaussian prior takes 0
// with probability 1-rho and N(0, 1/rho) otherwise.
namespace scoamp::denoiser {

struct Prior {
    enum class Kind { BernoulliGaussian, Gaussian };
    Kind kind = Kind::Gaussian;
    double rho = 1.0;  // BG density, in (0, 1]

    static Prior bernoulli_gaussian(double rho);
    static Prior gaussian();
    // Renyi information dimension: rho for BG, 1 for Gaussian.
    double information_dimension() const;
};

// E[x | u = x + z], z ~ N(0, v). Throws DomainError for v <= 0.
double denoise(const Prior& prior, double u, double v);
// d/du of denoise (analytic).
double denoise_derivative(const Prior& prior, double u, double v);
// Var(x | u = x + z); equals v * denoise_derivative pointwise.
double posterior_variance(const Prior& prior, double u, double v);

// E[(x - E[x | sqrt(s) x + z])^2], z ~ N(0,1). MMSE(0) = 1. Evaluated by
// feature-aware adaptive quadrature over the observation marginal (the BG
// detection boundary is far narrower than the signal scale at high s, which
// fixed-order Gauss-Hermite rules cannot resolve).
double mmse(const Prior& prior, double s);
// I(s) = 1/2 int_0^s MMSE(t) dt, in nats.
double mutual_info(const Prior& prior, double s);

// Gaussian expectations of denoiser functionals at noise variance v:
// E[f'(x + z)], E[x f(x + z)], E[f(x + z)^2] with z ~ N(0, v).
double mean_fprime(const Prior& prior, double v);
double mean_x_f(const Prior& prior, double v);
double mean_f_squared(const Prior& prior, double v);
// E[f(u'; va) f(u; vb)] for u = x + z, u' = x + z' with Var(z) = vb,
// Var(z') = va >= vb and Cov(z', z) = vb (the all-history sufficient
// statistic geometry: z' = z + independent noise).
double mean_ff_lagged(const Prior& prior, double va, double vb);

// Mean of x over the prior conditioned through a sample; used for drawing
// signal vectors.
double sample(const Prior& prior, double uniform01, double gauss01);

// Cached Phi(s) = int_0^s MMSE(t) dt = 2 I(s) on a log grid with Hermite
// interpolation (exact derivative MMSE(s) at the nodes). Thread-safe once
// built; used by potential scans.
class MmseIntegralCache {
  public:
    explicit MmseIntegralCache(const Prior& prior, double s_max = 1e12,
                               int points_per_decade = 96);
    double integral(double s) const;   // int_0^s MMSE
    double mutual_info(double s) const { return 0.5 * integral(s); }
    const Prior& prior() const { return prior_; }

  private:
    Prior prior_;
    double s_max_;
    std::vector<double> tau_;   // log1p(s) grid
    std::vector<double> phi_;   // cumulative integral
    std::vector<double> dphi_;  // MMSE at the nodes
};

// Gauss-Hermite rule for E_{z~N(0,1)}[f(z)]: sum_i weight[i] f(node[i]).
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
    explicit GaussHermite(int order);
};
const GaussHermite& gh61();

}  // namespace scoamp::denoiser
