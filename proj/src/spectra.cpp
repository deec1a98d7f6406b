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

#include "scoamp/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scoamp/errors.hpp"

namespace scoamp::spectra {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_delta(double delta) {
    if (!(delta > 0.0 && delta <= 1.0))
        throw DomainError("spectrum: delta must be in (0,1], got " + std::to_string(delta));
}

// Geometric law: mass `delta` spread log-uniformly over [lmax/kappa^2, lmax],
// remaining mass at zero. lmax fixed by the unit-mean normalization.
struct GeometricLaw {
    double c;     // 2 ln(kappa) / delta
    double lmax;  // c / (1 - kappa^-2)
    double lmin;  // lmax / kappa^2
    GeometricLaw(double delta, double kappa)
        : c(2.0 * std::log(kappa) / delta),
          lmax(c / (1.0 - 1.0 / (kappa * kappa))),
          lmin(lmax / (kappa * kappa)) {}
};

// 15-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr int kGlN = 15;
constexpr double kGlX[kGlN] = {
    -0.9879925180204854, -0.9372733924007060, -0.8482065834104272,
    -0.7244177313601701, -0.5709721726085388, -0.3941513470775634,
    -0.2011940939974345, 0.0,                 0.2011940939974345,
    0.3941513470775634,  0.5709721726085388,  0.7244177313601701,
    0.8482065834104272,  0.9372733924007060,  0.9879925180204854};
constexpr double kGlW[kGlN] = {
    0.0307532419961173, 0.0703660474881081, 0.1071592204671719,
    0.1395706779261543, 0.1662692058169939, 0.1861610000155622,
    0.1984314853271116, 0.2025782419255613, 0.1984314853271116,
    0.1861610000155622, 0.1662692058169939, 0.1395706779261543,
    0.1071592204671719, 0.0703660474881081, 0.0307532419961173};

double gl_panel(const std::function<double(double)>& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < kGlN; ++i) acc += kGlW[i] * f(mid + half * kGlX[i]);
    return half * acc;
}

double integrate_rec(const std::function<double(double)>& f, double a, double b,
                     double whole, double tol, int depth) {
    const double mid = 0.5 * (a + b);
    const double left = gl_panel(f, a, mid);
    const double right = gl_panel(f, mid, b);
    if (depth > 40 || std::abs(left + right - whole) < tol)
        return left + right;
    return integrate_rec(f, a, mid, left, 0.5 * tol, depth + 1) +
           integrate_rec(f, mid, b, right, 0.5 * tol, depth + 1);
}

// Marchenko-Pastur law of A^T A for A (M x N) with N(0, 1/M) entries,
// as an N-dimensional law: ratio c = N/M = 1/delta, support
// [(1-sqrt(c))^2, (1+sqrt(c))^2], continuous density
// sqrt((b-x)(x-a)) / (2 pi c x), atom at zero with mass 1 - delta.
struct MpLaw {
    double c, a, b;
    explicit MpLaw(double delta) : c(1.0 / delta) {
        const double s = std::sqrt(c);
        a = (1.0 - s) * (1.0 - s);
        b = (1.0 + s) * (1.0 + s);
    }
    // E over the continuous part via the substitution
    // x = (a+b)/2 - (b-a)/2 cos(theta), which absorbs the sqrt edge factors.
    double mean_of(const std::function<double(double)>& h) const {
        const double w = 0.5 * (b - a);
        const double m = 0.5 * (a + b);
        auto g = [&](double th) {
            const double x = m - w * std::cos(th);
            const double s = std::sin(th);
            return h(x) * w * w * s * s / (2.0 * M_PI * c * x);
        };
        return integrate(g, 0.0, M_PI, 1e-12);
    }
};

double eta_iid_gaussian(double delta, double z) {
    // Positive root of z*eta^2 + (delta - z(1-delta))*eta - delta = 0,
    // written in a cancellation-free form.
    const double b = delta - z * (1.0 - delta);
    return 2.0 * delta / (b + std::sqrt(b * b + 4.0 * z * delta));
}

double eta_iid_gaussian_deriv(double delta, double z) {
    const double b = delta - z * (1.0 - delta);
    const double bp = -(1.0 - delta);
    const double s = std::sqrt(b * b + 4.0 * z * delta);
    const double sp = (b * bp + 2.0 * delta) / s;
    const double denom = b + s;
    return -2.0 * delta * (bp + sp) / (denom * denom);
}

double eta_row_orthogonal(double delta, double z) {
    return delta * delta / (delta + z) + 1.0 - delta;
}

double eta_geometric(double delta, double kappa, double z) {
    const GeometricLaw law(delta, kappa);
    return 1.0 - (1.0 / law.c) *
                     std::log1p((law.lmax - law.lmin) * z / (1.0 + law.lmin * z));
}

double eta_geometric_deriv(double delta, double kappa, double z) {
    const GeometricLaw law(delta, kappa);
    return -(1.0 / law.c) *
           (1.0 / (1.0 / law.lmax + z) - 1.0 / (1.0 / law.lmin + z));
}

double eta_empirical(const Spectrum& spec, double z) {
    double acc = 0.0;
    for (double lam : spec.eigenvalues) acc += 1.0 / (1.0 + lam * z);
    const double n = static_cast<double>(spec.ambient_dim);
    return acc / n + (1.0 - static_cast<double>(spec.eigenvalues.size()) / n);
}

double eta_empirical_deriv(const Spectrum& spec, double z) {
    double acc = 0.0;
    for (double lam : spec.eigenvalues) {
        const double d = 1.0 + lam * z;
        acc -= lam / (d * d);
    }
    return acc / static_cast<double>(spec.ambient_dim);
}

// Solves w * eta(w) = target (target >= 0) by bracket doubling plus
// bisection; w*eta(w) is strictly increasing (Lemma on the eta-transform).
double invert_w_eta(const Spectrum& spec, double target, double arg_tol = 1e-12) {
    if (target <= 0.0) return 0.0;
    double hi = 1.0;
    auto val = [&](double w) { return w * eta_transform(spec, w); };
    int guard = 0;
    while (val(hi) < target) {
        hi *= 2.0;
        if (++guard > 2000)
            throw DomainError("r_transform: z below z_min for this spectrum");
    }
    double lo = (hi == 1.0) ? 0.0 : hi * 0.5;
    while (hi - lo > arg_tol * (1.0 + hi)) {
        const double mid = 0.5 * (lo + hi);
        (val(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double r_by_inversion(const Spectrum& spec, double z) {
    const double w = invert_w_eta(spec, -z);
    const double eta = eta_transform(spec, w);
    return (1.0 - eta) / (-z);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
    if (a == b) return 0.0;
    return integrate_rec(f, a, b, gl_panel(f, a, b), tol, 0);
}

Spectrum Spectrum::iid_gaussian(double delta) {
    check_delta(delta);
    Spectrum s;
    s.kind = SpectrumKind::IidGaussian;
    s.delta = delta;
    return s;
}

Spectrum Spectrum::row_orthogonal(double delta) {
    check_delta(delta);
    Spectrum s;
    s.kind = SpectrumKind::RowOrthogonal;
    s.delta = delta;
    return s;
}

Spectrum Spectrum::geometric(double delta, double kappa) {
    check_delta(delta);
    if (!(kappa >= 1.0)) throw DomainError("spectrum: kappa must be >= 1");
    Spectrum s;
    s.kind = SpectrumKind::Geometric;
    s.delta = delta;
    s.kappa = kappa;
    return s;
}

Spectrum Spectrum::empirical(std::vector<double> eigenvalues,
                             std::size_t ambient_dim, double mean_tol) {
    if (ambient_dim == 0 || eigenvalues.size() > ambient_dim)
        throw DimError("spectrum: ambient_dim must cover the eigenvalue list");
    std::vector<double> pos;
    pos.reserve(eigenvalues.size());
    for (double lam : eigenvalues) {
        if (lam < 0.0) throw DomainError("spectrum: negative eigenvalue");
        if (lam > 0.0) pos.push_back(lam);
    }
    const double mean =
        std::accumulate(pos.begin(), pos.end(), 0.0) / static_cast<double>(ambient_dim);
    if (std::abs(mean - 1.0) > mean_tol)
        throw DomainError("spectrum: empirical mean " + std::to_string(mean) +
                          " violates the unit-mean normalization");
    Spectrum s;
    s.kind = SpectrumKind::Empirical;
    s.eigenvalues = std::move(pos);
    s.ambient_dim = ambient_dim;
    s.delta = static_cast<double>(s.eigenvalues.size()) / static_cast<double>(ambient_dim);
    return s;
}

double eta_transform(const Spectrum& spec, double z) {
    if (z < 0.0) throw DomainError("eta_transform: z must be >= 0");
    if (z == 0.0) return 1.0;
    switch (spec.kind) {
        case SpectrumKind::IidGaussian:
            return eta_iid_gaussian(spec.delta, z);
        case SpectrumKind::RowOrthogonal:
            return eta_row_orthogonal(spec.delta, z);
        case SpectrumKind::Geometric:
            return eta_geometric(spec.delta, spec.kappa, z);
        case SpectrumKind::Empirical:
            return eta_empirical(spec, z);
    }
    throw DomainError("eta_transform: unknown kind");
}

double eta_transform_deriv(const Spectrum& spec, double z) {
    if (z < 0.0) throw DomainError("eta_transform_deriv: z must be >= 0");
    switch (spec.kind) {
        case SpectrumKind::IidGaussian:
            return eta_iid_gaussian_deriv(spec.delta, z);
        case SpectrumKind::RowOrthogonal: {
            const double d = spec.delta + z;
            return -spec.delta * spec.delta / (d * d);
        }
        case SpectrumKind::Geometric:
            return eta_geometric_deriv(spec.delta, spec.kappa, z);
        case SpectrumKind::Empirical:
            return eta_empirical_deriv(spec, z);
    }
    throw DomainError("eta_transform_deriv: unknown kind");
}

double z_min(const Spectrum& spec) {
    switch (spec.kind) {
        case SpectrumKind::IidGaussian:
        case SpectrumKind::Geometric:
            return -kInf;  // proper: z*eta(z) diverges
        case SpectrumKind::RowOrthogonal:
            // Full-rank (delta = 1) degenerates to the single-atom law at 1.
            return spec.delta < 1.0 ? -kInf : -1.0;
        case SpectrumKind::Empirical: {
            const double z = 1e6;
            const double lim = z * eta_transform(spec, z);
            // Rank-deficient lists diverge; call them proper.
            return (spec.eigenvalues.size() < spec.ambient_dim) ? -kInf : -lim;
        }
    }
    throw DomainError("z_min: unknown kind");
}

double r_transform(const Spectrum& spec, double z) {
    if (z > 0.0) throw DomainError("r_transform: z must be <= 0");
    if (z <= z_min(spec))
        throw DomainError("r_transform: z <= z_min, spectrum not proper there");
    if (z == 0.0) {
        // R(0) = mu_1 = 1 by the unit-mean normalization (exact for the
        // closed-form kinds; the empirical mean for eigenvalue lists).
        if (spec.kind == SpectrumKind::Empirical)
            return std::accumulate(spec.eigenvalues.begin(), spec.eigenvalues.end(), 0.0) /
                   static_cast<double>(spec.ambient_dim);
        return 1.0;
    }
    switch (spec.kind) {
        case SpectrumKind::IidGaussian:
            return spec.delta / (spec.delta - z);
        case SpectrumKind::RowOrthogonal: {
            const double d = spec.delta;
            if (d >= 1.0) return 1.0;  // single atom at 1: constant R
            // w >= 0 root of (1-d) w^2 + (d+z) w + d z = 0; then
            // R(z) = d / (d + (1-d) w).
            const double disc = (d + z) * (d + z) - 4.0 * (1.0 - d) * d * z;
            const double w = (-(d + z) + std::sqrt(disc)) / (2.0 * (1.0 - d));
            return d / (d + (1.0 - d) * w);
        }
        case SpectrumKind::Geometric:
        case SpectrumKind::Empirical:
            return r_by_inversion(spec, z);
    }
    throw DomainError("r_transform: unknown kind");
}

std::vector<double> moments(const Spectrum& spec, int k_max) {
    if (k_max < 1) throw DomainError("moments: k_max must be >= 1");
    std::vector<double> mu(static_cast<std::size_t>(k_max));
    switch (spec.kind) {
        case SpectrumKind::IidGaussian: {
            // From the quadratic satisfied by the eta-transform:
            // mu_k = (sum_{i+j=k-1} mu_i mu_j - (1-delta) mu_{k-1}) / delta.
            std::vector<double> m(static_cast<std::size_t>(k_max) + 1);
            m[0] = 1.0;
            for (int k = 1; k <= k_max; ++k) {
                double conv = 0.0;
                for (int i = 0; i <= k - 1; ++i) conv += m[i] * m[k - 1 - i];
                m[k] = (conv - (1.0 - spec.delta) * m[k - 1]) / spec.delta;
            }
            for (int k = 1; k <= k_max; ++k) mu[k - 1] = m[k];
            break;
        }
        case SpectrumKind::RowOrthogonal:
            for (int k = 1; k <= k_max; ++k)
                mu[k - 1] = std::pow(spec.delta, 1.0 - k);
            break;
        case SpectrumKind::Geometric: {
            const GeometricLaw law(spec.delta, spec.kappa);
            for (int k = 1; k <= k_max; ++k) {
                const double kk = spec.kappa;
                mu[k - 1] = std::pow(law.lmax, k) *
                            (1.0 - std::pow(kk, -2.0 * k)) / (law.c * k);
            }
            break;
        }
        case SpectrumKind::Empirical: {
            const double n = static_cast<double>(spec.ambient_dim);
            for (int k = 1; k <= k_max; ++k) {
                double acc = 0.0;
                for (double lam : spec.eigenvalues) acc += std::pow(lam, k);
                mu[k - 1] = acc / n;
            }
            break;
        }
    }
    return mu;
}

double spectral_mean(const Spectrum& spec, const std::function<double(double)>& h) {
    switch (spec.kind) {
        case SpectrumKind::IidGaussian: {
            const MpLaw law(spec.delta);
            const double zero_mass = std::max(0.0, 1.0 - spec.delta);
            return zero_mass * h(0.0) + law.mean_of(h);
        }
        case SpectrumKind::RowOrthogonal:
            return spec.delta * h(1.0 / spec.delta) + (1.0 - spec.delta) * h(0.0);
        case SpectrumKind::Geometric: {
            const GeometricLaw law(spec.delta, spec.kappa);
            // Log-uniform density: delta/(2 ln kappa) dl/l on [lmin, lmax].
            auto g = [&](double t) { return h(std::exp(t)); };
            const double cont = spec.delta / (2.0 * std::log(spec.kappa)) *
                                integrate(g, std::log(law.lmin), std::log(law.lmax));
            return (1.0 - spec.delta) * h(0.0) + cont;
        }
        case SpectrumKind::Empirical: {
            const double n = static_cast<double>(spec.ambient_dim);
            double acc = 0.0;
            for (double lam : spec.eigenvalues) acc += h(lam);
            return acc / n +
                   (1.0 - static_cast<double>(spec.eigenvalues.size()) / n) * h(0.0);
        }
    }
    throw DomainError("spectral_mean: unknown kind");
}

TransformIdentityReport r_transform_identities_check(const Spectrum& spec) {
    const auto mu = moments(spec, 2);
    TransformIdentityReport rep;
    rep.r_at_zero = r_transform(spec, 0.0);
    // Second-order one-sided difference (the domain ends at 0).
    const double h = 1e-4;
    rep.r_deriv_at_zero = (3.0 * rep.r_at_zero - 4.0 * r_transform(spec, -h) +
                           r_transform(spec, -2.0 * h)) /
                          (2.0 * h);
    rep.r0_residual = std::abs(rep.r_at_zero - mu[0]);
    rep.r_deriv0_residual = std::abs(rep.r_deriv_at_zero - (mu[1] - mu[0] * mu[0]));
    return rep;
}

double geometric_r_closed_form(double delta, double kappa, double z) {
    if (z > 0.0) throw DomainError("geometric_r_closed_form: z must be <= 0");
    if (kappa <= 1.0)
        throw DomainError("geometric_r_closed_form: requires kappa > 1");
    const double c = 2.0 * std::log(kappa) / delta;
    const double k2 = kappa * kappa;
    auto f = [&](double y) { return 1.0 / (k2 - 1.0 - c * z * y); };
    return integrate(f, 1.0, k2, 1e-10);
}

std::string to_string(SpectrumKind kind) {
    switch (kind) {
        case SpectrumKind::IidGaussian: return "iid-gaussian";
        case SpectrumKind::RowOrthogonal: return "row-orthogonal";
        case SpectrumKind::Geometric: return "geometric";
        case SpectrumKind::Empirical: return "empirical";
    }
    return "unknown";
}

}  // namespace scoamp::spectra
