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
#include <string>
#include <vector>

// Asymptotic eigenvalue laws of A^T A for the supported sensing ensembles,
// and their eta- and R-transforms. All laws are normalized to unit mean.
namespace scoamp::spectra {

enum class SpectrumKind { IidGaussian, RowOrthogonal, Geometric, Empirical };

struct Spectrum {
    SpectrumKind kind = SpectrumKind::IidGaussian;
    double delta = 1.0;  // rank ratio r/N, in (0, 1]
    double kappa = 1.0;  // condition number, Geometric only (>= 1)
    std::vector<double> eigenvalues;  // Empirical: strictly positive entries
    std::size_t ambient_dim = 0;      // Empirical: N (zeros implied)

    static Spectrum iid_gaussian(double delta);
    static Spectrum row_orthogonal(double delta);
    static Spectrum geometric(double delta, double kappa);
    // Nonnegative eigenvalue list over `ambient_dim` dimensions; the mean
    // must be 1 within `mean_tol`.
    static Spectrum empirical(std::vector<double> eigenvalues,
                              std::size_t ambient_dim, double mean_tol = 0.05);
};

// eta(z) = E[1/(1 + lambda z)] over the law, z >= 0. eta(0) = 1.
double eta_transform(const Spectrum& spec, double z);
// d/dz of eta_transform.
double eta_transform_deriv(const Spectrum& spec, double z);

// Lower end of the R-transform domain (z_min, 0]; -inf for proper spectra.
// For Empirical spectra estimated as -z*eta(z) at z = 1e6.
double z_min(const Spectrum& spec);

// R-transform at z <= 0. Closed form for IidGaussian and RowOrthogonal;
// monotone bisection of w -> w*eta(w) for Geometric and Empirical.
// Throws DomainError for z <= z_min or z > 0.
double r_transform(const Spectrum& spec, double z);

// Moments mu_1..mu_kmax of the law.
std::vector<double> moments(const Spectrum& spec, int k_max);

// E[h(lambda)] over the law, including the zero-eigenvalue mass.
double spectral_mean(const Spectrum& spec, const std::function<double(double)>& h);

struct TransformIdentityReport {
    double r_at_zero = 0.0;
    double r_deriv_at_zero = 0.0;
    double r0_residual = 0.0;        // |R(0) - mu_1|
    double r_deriv0_residual = 0.0;  // |R'(0) - (mu_2 - mu_1^2)|
};
// Numerically differentiates the R-transform at 0 and compares with the
// moment identities R(0) = mu_1 and R'(0) = mu_2 - mu_1^2.
TransformIdentityReport r_transform_identities_check(const Spectrum& spec);

// Closed form of the geometric-ensemble R-transform (integral representation,
// evaluated with adaptive Gauss-Legendre quadrature). z <= 0.
double geometric_r_closed_form(double delta, double kappa, double z);

// Adaptive Gauss-Legendre quadrature of f on [a, b], absolute tolerance tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-10);

std::string to_string(SpectrumKind kind);

}  // namespace scoamp::spectra
