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

#include <cstdint>
#include <memory>
#include <vector>

#include "scoamp/denoiser.hpp"
#include "scoamp/spectra.hpp"

// Spatially coupled measurement systems: banded base matrices, per-row-section
// sensing operators with cached SVD factors, and seeded signal/noise draws.
namespace scoamp::coupling {

// (L+W) x L banded weight matrix. gamma(ell, l) is nonzero exactly for
// ell - l in {0..W}; power normalization (1/L) sum_l sum_w gamma^2 = 1.
class BaseMatrix {
  public:
    BaseMatrix(int L, int W, std::vector<double> band);  // band[(ell-l)*L + l]
    static BaseMatrix uniform(int L, int W);

    int L() const { return L_; }
    int W() const { return W_; }
    double gamma(int ell, int l) const;

    // W-set bounds of row section ell (indices w with gamma(ell, ell-w) != 0).
    int w_min(int ell) const { return std::max(ell - (L_ - 1), 0); }
    int w_max(int ell) const { return std::min(W_, ell); }
    int w_count(int ell) const { return w_max(ell) - w_min(ell) + 1; }
    int rows() const { return L_ + W_; }

  private:
    int L_, W_;
    std::vector<double> band_;
};

// Row-section sensing operator A = U S V^T with M x Nc shape and cached
// factors. Applications never materialize matrices larger than the section.
class RowSection {
  public:
    virtual ~RowSection() = default;
    int m() const { return m_; }
    int nc() const { return nc_; }
    // Nonzero singular values of A, descending (length min(M, Nc) = M here).
    const std::vector<double>& sv() const { return sv_; }

    virtual void apply_a(const double* x, double* y) const = 0;    // y = A x
    virtual void apply_at(const double* y, double* x) const = 0;   // x = A^T y
    virtual void apply_u(const double* d, double* out) const = 0;  // out = U d
    virtual void apply_ut(const double* r, double* out) const = 0; // out = U^T r
    virtual void apply_v(const double* d, double* out) const = 0;  // out = V1 d
    virtual void apply_vt(const double* x, double* out) const = 0; // out = V1^T x

    // Dense reconstruction for diagnostics/tests (O(M*Nc) memory).
    std::vector<double> dense() const;

  protected:
    RowSection(int m, int nc) : m_(m), nc_(nc) {}
    int m_, nc_;
    std::vector<double> sv_;
};

enum class Ensemble { IidGaussian, RowOrthogonal, Geometric };

// Sparse action of Gamma[ell]: block w of the output is
// gamma(ell, ell-w) * x[ell-w], for w in the W-set of ell.
struct GammaProjector {
    struct Block {
        int w;             // branch index
        int col_section;   // l = ell - w
        std::size_t offset;  // start of block w inside the Nc-vector
        double weight;     // gamma(ell, l)
    };
    int ell = 0;
    int n = 0;  // per-column-section dimension
    std::vector<Block> blocks;

    // out (length Nc) = Gamma[ell] x, x over all L*N coordinates.
    void apply(const double* x_all, double* out) const;
    // x_all (length L*N) += Gamma[ell]^T u.
    void apply_adjoint_add(const double* u, double* x_all) const;
};

GammaProjector gamma_projector(const BaseMatrix& base, int ell, int n);

// Algorithm initial condition |W| Nc^-1 sum_w N gamma^2[ell][ell-w].
double initial_variance(const BaseMatrix& base, int ell, int n);

struct CoupledSystem {
    BaseMatrix base;
    int n = 0;  // per-column-section signal dimension N
    int m = 0;  // per-row-section measurement dimension M
    Ensemble ensemble = Ensemble::IidGaussian;
    double kappa = 1.0;
    double sigma2 = 0.0;
    std::uint64_t seed = 0;
    denoiser::Prior prior;

    std::vector<std::unique_ptr<RowSection>> sections;  // indexed by ell
    std::vector<GammaProjector> projectors;             // indexed by ell
    std::vector<std::vector<double>> y;                 // measurements per ell
    std::vector<std::vector<double>> noise;             // n[ell]
    std::vector<double> x_true;                         // length L*N

    int n_all() const { return base.L() * n; }
    int nc(int ell) const { return base.w_count(ell) * n; }
    // Asymptotic law of |W[ell]| A^T[ell] A[ell] for this ensemble.
    spectra::Spectrum section_spectrum(int ell) const;
};

// Draws a coupled system. Rescaled sections sqrt(|W|) A[ell] follow the
// requested ensemble; SVD factors are cached per section; y is generated
// from (base, prior, sigma2, seed) deterministically.
CoupledSystem build_system(const BaseMatrix& base, int n, int m,
                           Ensemble ensemble, double kappa,
                           const denoiser::Prior& prior, double sigma2,
                           std::uint64_t seed);

// Singular values of the rescaled section sqrt(|W|) A (geometric profile, or
// flat for kappa = 1), descending.
std::vector<double> geometric_singular_values(int m, int nc_scaled, double kappa);

}  // namespace scoamp::coupling
